#pragma once

#include <optional>
#include <string>
#include <string_view>

#include "orgscada/common.hpp"
#include "orgscada/wire/envelope.hpp"

namespace orgscada {

// How a requested service became available to an operator agent.
enum class PathClass { Local, SharedAlready, ExtendOverlap, NewOverlap };

std::string_view to_string(PathClass c);
std::optional<PathClass> path_class_from_string(std::string_view s);

// One row of the reorganization latency table. t_service runs from the
// operator agent's request to the moment the service is in its local DF.
struct LatencyRecord {
  std::string requester_org;
  std::string service_name;
  PathClass path_class = PathClass::Local;
  Duration t_service{0};
  int launch_index = 0;
  std::string ra;
  std::optional<Duration> t_first_value;

  bool operator==(const LatencyRecord&) const = default;
};

Json to_json(const LatencyRecord& r);
LatencyRecord latency_record_from_json(const Json& j);

}  // namespace orgscada
