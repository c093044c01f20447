#pragma once

#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "orgscada/kernel/node.hpp"
#include "orgscada/org/config.hpp"
#include "orgscada/org/state.hpp"
#include "orgscada/plantsim/plc.hpp"
#include "orgscada/scada/agents.hpp"
#include "orgscada/scada/latency.hpp"

namespace orgscada {

// Something an operator session reported to the organization's console
// endpoint. type: "session", "data", "first-value", "verdict", "feed-error".
struct SessionEvent {
  Time at{0};
  AgentId ra;
  std::string type;
  Json payload;
};

using SessionListener = std::function<void(const SessionEvent&)>;

// Higher level control algorithms hook; runs after every plant tick for each
// PLC. Nothing is plugged in by default.
using ControlHook = std::function<void(plantsim::Plc&, Time)>;

struct OpenFailure {
  std::string ra;
  std::string service;
  std::string reason;
  int launch_index = 0;

  bool operator==(const OpenFailure&) const = default;
};

// One organization: its node, its plant, and the static part's state. All
// methods must run on the node's scheduler.
class Organization {
 public:
  Organization(OrganizationConfig config, Scheduler& scheduler);
  ~Organization();
  Organization(const Organization&) = delete;
  Organization& operator=(const Organization&) = delete;

  // Creates the Global Supervisor, which builds the rest; starts the plant.
  void boot();

  const std::string& name() const { return config_.org_name; }
  const OrganizationConfig& config() const { return config_; }
  Node& node() { return *node_; }
  const Node& node() const { return *node_; }
  OrgState& state() { return state_; }
  const OrgState& state() const { return state_; }
  Scheduler& scheduler() const { return scheduler_; }

  plantsim::Plc* plc(const std::string& name);
  std::vector<std::string> plc_names() const;
  void pause_plant(bool paused) { plant_paused_ = paused; }
  bool plant_paused() const { return plant_paused_; }
  void set_control_hook(ControlHook hook) { control_hook_ = std::move(hook); }

  // Operator sessions.
  AgentId launch_operator(const std::string& service, std::vector<std::string> vars = {});
  // No-op when the session is already gone.
  void close_operator(const AgentId& ra);
  void setpoint(const AgentId& ra, const std::string& var, double value, const std::string& request_id);
  bool session_exists(const AgentId& ra) const;

  int add_listener(SessionListener listener);
  void remove_listener(int id);

  const std::vector<LatencyRecord>& latency_records() const { return records_; }
  const std::vector<OpenFailure>& open_failures() const { return failures_; }
  std::size_t launches() const { return launches_; }

  // Load metric quoted in Contract Net proposals.
  double load() const;
  std::size_t operator_count() const;
  std::size_t control_agent_count() const;

  // Digest of DF, links and sessions; equal before and after read-only calls.
  std::string state_hash() const;
  Json topology() const;
  Json services_json() const;
  // Local DF plus the DF of every acquaintance, deduplicated. Read-only on
  // every side; peers that do not answer within `timeout` are skipped.
  void query_reachable(Duration timeout, std::function<void(Json)> done);

 private:
  std::unique_ptr<Agent> make_agent(const AgentSpec& spec);
  void on_console(const MessageEnvelope& env);
  void on_finder(const MessageEnvelope& env);
  void finish_query(const std::string& conv);

  struct ReachableQuery {
    std::set<std::string> waiting;
    std::map<std::pair<std::string, std::string>, Json> entries;  // (service, provider)
    std::function<void(Json)> done;
  };
  std::map<std::string, ReachableQuery> queries_;
  void schedule_tick();

  OrganizationConfig config_;
  Scheduler& scheduler_;
  OrgState state_;
  // The plant outlives the node: agents hold PLC subscriptions until destroyed.
  std::map<std::string, std::unique_ptr<plantsim::Plc>> plant_;
  std::unique_ptr<Node> node_;
  bool plant_paused_ = false;
  ControlHook control_hook_;
  std::map<int, SessionListener> listeners_;
  int next_listener_ = 1;
  std::vector<LatencyRecord> records_;
  std::map<std::string, std::size_t> record_of_ra_;
  std::vector<OpenFailure> failures_;
  std::map<std::string, int> launch_index_of_;
  std::size_t launches_ = 0;
  std::size_t next_ra_ = 1;
  std::shared_ptr<bool> alive_ = std::make_shared<bool>(true);
};

}  // namespace orgscada
