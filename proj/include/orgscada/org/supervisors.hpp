#pragma once

#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "orgscada/kernel/node.hpp"
#include "orgscada/org/contract_net.hpp"
#include "orgscada/scada/latency.hpp"

namespace orgscada {

class Organization;

// Static part of an organization: boots the local supervisors, runs the
// adaptation loop and every inter-organization conversation.
class GlobalSupervisor final : public Agent {
 public:
  explicit GlobalSupervisor(Organization& org) : org_(org) {}

  void on_start(AgentContext& ctx) override;
  void on_message(AgentContext& ctx, const MessageEnvelope& msg) override;

  // One monitor/analyze/act pass. Returns the number of actions taken.
  int adaptation_step(AgentContext& ctx);
  std::size_t pending_resolutions() const { return pending_.size(); }
  const std::map<std::string, ContractNet>& negotiations() const { return cnp_; }

 private:
  struct Waiter {
    AgentId ra;
    std::string conversation_id;
  };
  struct Resolution {
    std::string conversation_id;
    std::string service;
    PathClass path = PathClass::NewOverlap;
    std::string target_org;  // share extension only
    std::vector<Waiter> waiters;
    Time started{0};
  };

  void on_trigger(AgentContext& ctx, const MessageEnvelope& msg);
  void on_trja(AgentContext& ctx, const MessageEnvelope& msg);
  void on_tfja(AgentContext& ctx, const MessageEnvelope& msg);
  void on_directory(AgentContext& ctx, const MessageEnvelope& msg);
  void on_contract_net(AgentContext& ctx, const MessageEnvelope& msg);
  void on_share_extension(AgentContext& ctx, const MessageEnvelope& msg);
  void on_admin(AgentContext& ctx, const MessageEnvelope& msg);

  void start_extension(AgentContext& ctx, Resolution& r);
  void start_contract_net(AgentContext& ctx, Resolution& r);
  void award(AgentContext& ctx, const std::string& conv);
  void winner_failed(AgentContext& ctx, const std::string& conv);
  void complete(AgentContext& ctx, const std::string& service, const AgentId& provider);
  void fail_resolution(AgentContext& ctx, const std::string& service, const std::string& reason);
  void instruct_share(AgentContext& ctx, const std::string& service, const std::string& requester_org,
                      const std::string& conv, const MessageEnvelope& origin);
  void release_share(AgentContext& ctx, const std::string& service, const std::string& reason);
  void periodic(AgentContext& ctx);
  Resolution* resolution_by_conversation(const std::string& conv);

  Organization& org_;
  std::map<std::string, Resolution> pending_;  // by service
  std::map<std::string, ContractNet> cnp_;     // by base conversation id
  SubscriptionId df_subscription_ = 0;
};

// Manages one dynamic-agent type: creation, heartbeat monitoring, recreation
// and PLC load balancing (control agents only).
class LocalSupervisor final : public Agent {
 public:
  LocalSupervisor(Organization& org, AgentRole managed) : org_(org), managed_(managed) {}

  void on_start(AgentContext& ctx) override;
  void on_message(AgentContext& ctx, const MessageEnvelope& msg) override;

  AgentRole managed() const { return managed_; }
  std::size_t recreations() const { return recreations_total_; }
  // PLC groups per control agent, in agent order.
  std::map<std::string, std::vector<std::string>> assignment() const { return assignment_; }

 private:
  struct Health {
    bool awaiting = false;
    int misses = 0;
    std::vector<Time> recreated_at;
  };

  void create_control_agents(AgentContext& ctx, std::size_t agent_count);
  void heartbeat(AgentContext& ctx);
  void evaluate(AgentContext& ctx);
  void recreate(AgentContext& ctx, const AgentId& id);
  void quarantine(AgentContext& ctx, const AgentId& id);
  void retire_operator(AgentContext& ctx, const AgentId& id);

  Organization& org_;
  AgentRole managed_;
  std::map<std::string, Health> health_;
  std::map<std::string, std::vector<std::string>> assignment_;
  std::size_t recreations_total_ = 0;
};

}  // namespace orgscada
