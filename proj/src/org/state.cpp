#include "orgscada/org/state.hpp"

namespace orgscada {

Json to_json(const OverlapLink& link) {
  Json j{{"peer_org", link.peer_org},
         {"shared_in", link.shared_in},
         {"shared_out", link.shared_out},
         {"established_at_ms", link.established_at.count()},
         {"last_activity_ms", link.last_activity.count()},
         {"inbound", link.inbound}};
  j["idle_since_ms"] = link.idle_since ? Json(link.idle_since->count()) : Json(nullptr);
  return j;
}

void OrgState::log(Time at, EventKind kind, Json detail) {
  events.push_back(AdaptationEvent{at, kind, std::move(detail)});
}

OverlapLink& OrgState::link(const std::string& peer, Time now) {
  auto it = links.find(peer);
  if (it == links.end()) {
    OverlapLink l;
    l.peer_org = peer;
    l.established_at = now;
    l.last_activity = now;
    it = links.emplace(peer, std::move(l)).first;
  }
  return it->second;
}

}  // namespace orgscada
