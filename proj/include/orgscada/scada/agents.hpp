#pragma once

#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "orgscada/kernel/fsm.hpp"
#include "orgscada/kernel/node.hpp"
#include "orgscada/plantsim/plc.hpp"
#include "orgscada/scada/latency.hpp"

namespace orgscada {

// Well-known local names inside every organization.
inline constexpr std::string_view kGlobalSupervisorName = "GS";
inline constexpr std::string_view kCaSupervisorName = "LS-CA";
inline constexpr std::string_view kRaSupervisorName = "LS-RA";
// Node endpoint where operator-facing session events land.
inline constexpr std::string_view kConsoleEndpoint = "console";

Json sample_to_json(const plantsim::Sample& s);

// Service provider bound to one or more PLCs. config_payload:
//   {"plcs": [names], "restore_remote": [{"org", "service"}]}
class ControlAgent final : public Agent {
 public:
  using PlcLookup = std::function<plantsim::Plc*(const std::string&)>;

  ControlAgent(const AgentSpec& spec, PlcLookup lookup);
  ~ControlAgent() override;

  void on_start(AgentContext& ctx) override;
  void on_message(AgentContext& ctx, const MessageEnvelope& msg) override;

  std::vector<std::string> services() const;
  std::size_t feed_count() const { return feeds_.size(); }

 private:
  struct Feed {
    std::string conversation_id;
    std::string service;
    std::set<std::string> vars;  // empty: all
  };

  void share(AgentContext& ctx, const std::string& service, const std::string& org,
             const std::string& conv);
  void on_sample(const std::string& service, const plantsim::Sample& s);
  void handle_feed(AgentContext& ctx, const MessageEnvelope& msg);
  bool may_serve(const Node& node, const std::string& org, const std::string& service) const;

  AgentSpec spec_;
  PlcLookup lookup_;
  std::map<std::string, plantsim::Plc*> plcs_;  // by service name
  std::vector<std::pair<plantsim::Plc*, plantsim::SubscriptionId>> plc_subscriptions_;
  std::map<AgentId, Feed> feeds_;
  // Outstanding remote registrations: conversation -> (org, service, share conversation).
  struct PendingShare {
    std::string org;
    std::string service;
    std::string share_conv;
  };
  std::map<std::string, PendingShare> pending_shares_;
  Node* node_ = nullptr;
  AgentId self_;
};

// One operator session (remote operator agent). config_payload:
//   {"service", "vars": [..] (optional), "launch_index"}
class OperatorAgent final : public Agent {
 public:
  explicit OperatorAgent(const AgentSpec& spec);

  void on_start(AgentContext& ctx) override;
  void on_message(AgentContext& ctx, const MessageEnvelope& msg) override;

  const std::string& service() const { return service_; }
  std::string state() const { return fsm_.state(); }
  bool is_open() const;
  // True while a TFJA is owed for this session if it ends now.
  bool owes_tfja() const;
  const std::string& trigger_conversation() const { return trja_conv_; }
  std::optional<AgentId> provider() const { return provider_; }

 private:
  void on_directory(AgentContext& ctx, const MessageEnvelope& msg);
  void on_trigger(AgentContext& ctx, const MessageEnvelope& msg);
  void on_console(AgentContext& ctx, const MessageEnvelope& msg);
  void on_feed(AgentContext& ctx, const MessageEnvelope& msg);
  void access(AgentContext& ctx, const ServiceDescriptor& d);
  void maybe_report_open(AgentContext& ctx);
  void subscribe_feed(AgentContext& ctx);
  void close(AgentContext& ctx, const std::string& reason);
  void fail_open(AgentContext& ctx, const std::string& reason);
  void to_console(AgentContext& ctx, Performative p, Json payload) const;

  std::string service_;
  std::vector<std::string> vars_;
  int launch_index_ = 0;
  Fsm fsm_;
  Time started_{0};
  std::optional<Time> access_time_;
  std::optional<PathClass> path_;
  std::optional<AgentId> provider_;
  SubscriptionId df_subscription_ = 0;
  std::string trja_conv_;
  bool trja_sent_ = false;
  bool first_value_seen_ = false;
  std::string feed_conv_;
  std::map<std::string, std::string> setpoints_;  // feed conversation -> console request id
};

}  // namespace orgscada
