#pragma once

#include <cstdint>
#include <deque>
#include <functional>
#include <map>
#include <memory>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "orgscada/common.hpp"
#include "orgscada/kernel/agent_id.hpp"
#include "orgscada/kernel/directory.hpp"
#include "orgscada/kernel/scheduler.hpp"
#include "orgscada/wire/envelope.hpp"
#include "orgscada/wire/transport.hpp"

namespace orgscada {

enum class AgentRole { GlobalSupervisor, LocalSupervisor, ControlAgent, RemoteOperatorAgent };

std::string_view to_string(AgentRole r);

struct AgentSpec {
  std::string local_name;
  AgentRole role = AgentRole::ControlAgent;
  Json config_payload = Json::object();
};

class Node;

// Handle an agent uses to act on its node while one of its handlers runs.
class AgentContext {
 public:
  AgentContext(Node& node, AgentId self, std::uint64_t incarnation)
      : node_(node), self_(std::move(self)), incarnation_(incarnation) {}

  const AgentId& self() const { return self_; }
  Node& node() const { return node_; }
  Time now() const;

  void send(Performative p, const AgentId& to, Protocol protocol, const std::string& conversation_id,
            Json payload = Json::object()) const;
  // Same protocol and conversation as `msg`, addressed to its sender.
  void reply(const MessageEnvelope& msg, Performative p, Json payload = Json::object()) const;
  // Runs fn later if this incarnation of the agent is still alive and not crashed.
  void after(Duration delay, std::function<void(AgentContext&)> fn) const;

 private:
  Node& node_;
  AgentId self_;
  std::uint64_t incarnation_;
};

class Agent {
 public:
  virtual ~Agent() = default;
  virtual void on_start(AgentContext& /*ctx*/) {}
  virtual void on_message(AgentContext& ctx, const MessageEnvelope& msg) = 0;
};

using AgentFactory = std::function<std::unique_ptr<Agent>(const AgentSpec&)>;
using Endpoint = std::function<void(const MessageEnvelope&)>;

struct RemoteRegistration {
  std::string org;
  std::string service;

  auto operator<=>(const RemoteRegistration&) const = default;
};

// Reserved receiver names handled by the node itself rather than an agent.
inline constexpr std::string_view kDirectoryEndpoint = "df";

// The agent platform of one organization: white pages (AMS), yellow pages
// (DF), mailboxes and message routing. Everything runs on the scheduler it is
// bound to; a node is not thread-safe on its own.
class Node {
 public:
  Node(std::string org_name, Scheduler& scheduler, Duration intra_latency = Duration{0});
  ~Node();
  Node(const Node&) = delete;
  Node& operator=(const Node&) = delete;

  const std::string& org() const { return org_; }
  Scheduler& scheduler() const { return scheduler_; }
  Time now() const { return scheduler_.now(); }

  void set_transport(Transport* transport) { transport_ = transport; }
  void set_factory(AgentFactory factory) { factory_ = std::move(factory); }
  void set_send_observer(std::function<void(const MessageEnvelope&)> observer) {
    send_observer_ = std::move(observer);
  }

  // White pages.
  AgentId create_agent(const AgentSpec& spec);
  // Returns the remote DF registrations the agent held; deregistration
  // notices have already been sent to each of those organizations.
  std::vector<RemoteRegistration> destroy_agent(const AgentId& id);
  // Fault injection: the agent stops handling messages and timers but stays
  // registered, as a hung process would.
  void crash_agent(const AgentId& id);
  AgentId ams_lookup(std::string_view local_name) const;
  bool is_live(const AgentId& id) const;
  bool is_crashed(const AgentId& id) const;
  std::vector<AgentId> agents() const;
  std::vector<AgentId> agents_with_role(AgentRole role) const;
  const AgentSpec& spec_of(const AgentId& id) const;
  Agent* find_agent(std::string_view local_name) const;
  template <typename T>
  T* agent_as(std::string_view local_name) const {
    return dynamic_cast<T*>(find_agent(local_name));
  }

  // Yellow pages.
  void df_register(ServiceDescriptor entry);
  void df_deregister(std::string_view service_name, const AgentId& provider);
  std::vector<ServiceDescriptor> df_search(std::string_view pattern) const {
    return df_.search(pattern);
  }
  SubscriptionId df_subscribe(std::string pattern, const AgentId& subscriber);
  void df_unsubscribe(SubscriptionId id) { df_.unsubscribe(id); }
  const DirectoryFacilitator& df() const { return df_; }

  // Where local agents are registered in other organizations' DFs.
  void note_remote_registration(const std::string& local_name, RemoteRegistration reg);
  void forget_remote_registration(const std::string& local_name, const RemoteRegistration& reg);
  bool is_registered_at(const std::string& org, const std::string& service,
                        const std::string& local_name) const;
  std::vector<RemoteRegistration> remote_registrations_of(const std::string& local_name) const;

  // Messaging.
  void dispatch(MessageEnvelope env);
  void deliver(MessageEnvelope env);
  void register_endpoint(std::string name, Endpoint endpoint);
  void unregister_endpoint(const std::string& name);
  std::string next_conversation_id(std::string_view tag);

  std::size_t in_flight() const { return in_flight_; }
  std::size_t mailbox_high_watermark() const { return high_watermark_; }

 private:
  friend class AgentContext;

  struct Record {
    AgentSpec spec;
    std::unique_ptr<Agent> agent;
    std::uint64_t incarnation = 0;
    bool crashed = false;
    bool draining = false;
    std::deque<MessageEnvelope> mailbox;
  };

  Record* find(const AgentId& id);
  const Record* find(const AgentId& id) const;
  void drain(const std::string& local_name, std::uint64_t incarnation);
  void send_notifications(const std::vector<DfNotification>& notifications);
  void handle_directory_request(const MessageEnvelope& env);
  void schedule_timer(const AgentId& id, std::uint64_t incarnation, Duration delay,
                      std::function<void(AgentContext&)> fn);
  void bounce(const MessageEnvelope& env, ErrorCode reason);

  std::string org_;
  Scheduler& scheduler_;
  Duration intra_latency_;
  Transport* transport_ = nullptr;
  AgentFactory factory_;
  std::function<void(const MessageEnvelope&)> send_observer_;

  std::map<std::string, Record, std::less<>> agents_;
  std::map<std::string, Endpoint, std::less<>> endpoints_;
  DirectoryFacilitator df_;
  std::map<std::string, std::set<RemoteRegistration>> remote_registrations_;
  std::vector<std::unique_ptr<Agent>> graveyard_;

  std::uint64_t next_incarnation_ = 1;
  std::uint64_t next_conversation_ = 1;
  std::size_t in_flight_ = 0;
  std::size_t high_watermark_ = 0;
  std::shared_ptr<bool> alive_ = std::make_shared<bool>(true);
};

}  // namespace orgscada
