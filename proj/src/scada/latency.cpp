#include "orgscada/scada/latency.hpp"

namespace orgscada {

std::string_view to_string(PathClass c) {
  switch (c) {
    case PathClass::Local:
      return "Local";
    case PathClass::SharedAlready:
      return "SharedAlready";
    case PathClass::ExtendOverlap:
      return "ExtendOverlap";
    case PathClass::NewOverlap:
      return "NewOverlap";
  }
  return "?";
}

std::optional<PathClass> path_class_from_string(std::string_view s) {
  for (auto c : {PathClass::Local, PathClass::SharedAlready, PathClass::ExtendOverlap,
                 PathClass::NewOverlap}) {
    if (to_string(c) == s) return c;
  }
  return std::nullopt;
}

Json to_json(const LatencyRecord& r) {
  Json j{{"requester_org", r.requester_org},
         {"service_name", r.service_name},
         {"path_class", std::string(to_string(r.path_class))},
         {"t_service_ms", r.t_service.count()},
         {"launch_index", r.launch_index},
         {"ra", r.ra}};
  j["t_first_value_ms"] = r.t_first_value ? Json(r.t_first_value->count()) : Json(nullptr);
  return j;
}

LatencyRecord latency_record_from_json(const Json& j) {
  LatencyRecord r;
  try {
    r.requester_org = j.at("requester_org").get<std::string>();
    r.service_name = j.at("service_name").get<std::string>();
    const auto c = path_class_from_string(j.at("path_class").get<std::string>());
    if (!c) fail(ErrorCode::InvalidArgument, "path_class");
    r.path_class = *c;
    r.t_service = Duration{j.at("t_service_ms").get<std::int64_t>()};
    r.launch_index = j.value("launch_index", 0);
    r.ra = j.value("ra", "");
    if (j.contains("t_first_value_ms") && !j["t_first_value_ms"].is_null()) {
      r.t_first_value = Duration{j["t_first_value_ms"].get<std::int64_t>()};
    }
  } catch (const Json::exception& e) {
    fail(ErrorCode::InvalidArgument, std::string("latency record: ") + e.what());
  }
  return r;
}

}  // namespace orgscada
