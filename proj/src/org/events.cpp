#include "orgscada/org/events.hpp"

namespace orgscada {

namespace {
constexpr EventKind kAll[] = {EventKind::TriggerReceived,  EventKind::OverlapEstablished,
                              EventKind::ShareExtended,    EventKind::ShareReleased,
                              EventKind::CnpFailed,        EventKind::AgentRecreated};
}

std::string_view to_string(EventKind k) {
  switch (k) {
    case EventKind::TriggerReceived:
      return "TriggerReceived";
    case EventKind::OverlapEstablished:
      return "OverlapEstablished";
    case EventKind::ShareExtended:
      return "ShareExtended";
    case EventKind::ShareReleased:
      return "ShareReleased";
    case EventKind::CnpFailed:
      return "CnpFailed";
    case EventKind::AgentRecreated:
      return "AgentRecreated";
  }
  return "?";
}

std::optional<EventKind> event_kind_from_string(std::string_view s) {
  for (auto k : kAll) {
    if (to_string(k) == s) return k;
  }
  return std::nullopt;
}

Json to_json(const AdaptationEvent& e) {
  return Json{{"at_ms", e.at.count()}, {"kind", std::string(to_string(e.kind))}, {"detail", e.detail}};
}

}  // namespace orgscada
