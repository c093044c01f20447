#pragma once

#include <compare>
#include <string>
#include <string_view>

namespace orgscada {

// Rendered "local_name@org_name".
struct AgentId {
  std::string local_name;
  std::string org_name;

  std::string str() const { return local_name + "@" + org_name; }
  bool empty() const { return local_name.empty(); }

  static AgentId parse(std::string_view text);

  auto operator<=>(const AgentId&) const = default;
};

}  // namespace orgscada
