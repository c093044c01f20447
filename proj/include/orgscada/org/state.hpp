#pragma once

#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "orgscada/common.hpp"
#include "orgscada/org/events.hpp"

namespace orgscada {

struct OverlapLink {
  std::string peer_org;
  std::set<std::string> shared_in;   // peer services registered in our DF
  std::set<std::string> shared_out;  // our services registered in the peer's DF
  Time established_at{0};
  Time last_activity{0};
  // Set once the peer has shared something with us. Share extension needs it.
  bool inbound = false;
  std::optional<Time> idle_since;

  bool empty() const { return shared_in.empty() && shared_out.empty(); }
  bool operator==(const OverlapLink&) const = default;
};

Json to_json(const OverlapLink& link);

// What the static part of one organization knows about its overlaps. Owned by
// the Organization, mutated only by its Global Supervisor.
struct OrgState {
  std::map<std::string, OverlapLink> links;
  // Open cross-org sessions per shared-in service.
  std::map<std::string, int> share_refs;
  std::vector<AdaptationEvent> events;
  std::vector<std::string> anomalies;
  std::set<std::string> quarantined;

  void log(Time at, EventKind kind, Json detail);
  OverlapLink& link(const std::string& peer, Time now);
};

}  // namespace orgscada
