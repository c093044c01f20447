#pragma once

#include <map>
#include <set>
#include <string>
#include <vector>

#include "orgscada/harness/report.hpp"
#include "orgscada/harness/scenario.hpp"
#include "orgscada/harness/world.hpp"

namespace orgscada {

struct LoggedEvent {
  std::string org;
  AdaptationEvent event;

  bool operator==(const LoggedEvent&) const = default;
};

struct RunResult {
  LatencyReport report;
  std::vector<LoggedEvent> events;  // merged: by time, then org order, then log order
  std::vector<std::string> violations;
  std::vector<std::string> anomalies;
  std::map<std::string, Json> topology;  // per org, at the end of the run
  std::uint64_t messages = 0;
  int quiescent_checks = 0;
  // RA -> first waiter of its resolution (itself when it led or needed none).
  std::map<std::string, std::string> resolution_leader;
};

Json events_to_json(const std::vector<LoggedEvent>& events);

// Watches every envelope sent in a world and checks Contract Net safety.
class ContractNetMonitor {
 public:
  void observe(const MessageEnvelope& env);
  // Violations so far; with `final` also proposals nobody answered.
  std::vector<std::string> violations(bool final) const;
  int accepts() const { return accepts_total_; }

 private:
  std::map<std::string, int> accepts_;                              // per conversation id
  std::map<std::pair<std::string, std::string>, int> proposals_;    // (base conv, proposer)
  std::map<std::pair<std::string, std::string>, int> answers_;      // (base conv, proposer)
  int accepts_total_ = 0;
};

// Invariant checks at a quiescent instant. Each returns human-readable violations.
std::vector<std::string> check_overlap_soundness(const World& world);
std::vector<std::string> check_session_accounting(const World& world);
std::vector<std::string> check_causation(const std::vector<LoggedEvent>& events);
// t_service of every row equals oracle hops x hop latency (uniform networks only).
std::vector<std::string> check_hop_oracle(const RunResult& result, const Scenario& scenario);
// Per ordered (requester, owner) pair, at most one NewOverlap.
std::vector<std::string> check_monotone_learning(const LatencyReport& report);

RunResult run(const Scenario& scenario);

}  // namespace orgscada
