#pragma once

#include <optional>
#include <string_view>

#include "orgscada/common.hpp"
#include "orgscada/wire/envelope.hpp"

namespace orgscada {

enum class EventKind {
  TriggerReceived,
  OverlapEstablished,
  ShareExtended,
  ShareReleased,
  CnpFailed,
  AgentRecreated,
};

std::string_view to_string(EventKind k);
std::optional<EventKind> event_kind_from_string(std::string_view s);

// Append-only trace of the adaptation loop of one organization.
struct AdaptationEvent {
  Time at{0};
  EventKind kind = EventKind::TriggerReceived;
  Json detail = Json::object();

  bool operator==(const AdaptationEvent&) const = default;
};

Json to_json(const AdaptationEvent& e);

}  // namespace orgscada
