#pragma once

#include <optional>
#include <string>
#include <vector>

#include "orgscada/org/config.hpp"
#include "orgscada/wire/sim_network.hpp"

namespace orgscada {

enum class ActionKind { Open, Close, Setpoint, Kill, Pause, Resume };

std::string_view to_string(ActionKind k);

struct ScriptAction {
  Time at{0};
  std::string org;
  ActionKind kind = ActionKind::Open;
  std::string service;   // Open
  std::string session;   // label given at Open; Close/Setpoint refer to it
  std::string agent;     // Kill: local agent name
  std::string var;       // Setpoint
  double value = 0.0;    // Setpoint
};

struct Scenario {
  std::string name;
  std::uint64_t seed = 1;
  std::vector<OrganizationConfig> orgs;
  NetConfig net;
  std::vector<ScriptAction> script;
  // Simulated end of the run; defaults to the last action plus settle time.
  std::optional<Time> end;
  Duration settle{2000};

  Time end_time() const;
};

// Throws ScenarioInvalid.
void validate(const Scenario& s);

// Structured text format (JSON). See docs/scenario-format.md.
Scenario scenario_from_json(const Json& j);
Json to_json(const Scenario& s);
Scenario load_scenario(const std::string& path_or_builtin);

// PLCs "O<org>.PLC<first> .. O<org>.PLC<first+count-1>" with the synthetic catalog.
OrganizationConfig make_org(int org_index, int first_plc, int plc_count, std::uint64_t seed);
// Every org knows every other one.
void fully_acquaint(std::vector<OrganizationConfig>& orgs);

std::vector<std::string> builtin_scenarios();
std::optional<Scenario> builtin_scenario(const std::string& name, std::uint64_t seed = 1);

// Requested service per launch row, one list per organization O1..O4.
const std::vector<std::vector<std::string>>& table3_launch_order();
// Reseeds the plants of every organization.
void apply_seed(Scenario& s, std::uint64_t seed);

// Four orgs with six PLCs each; row r of every org's launch order runs at r x 500 ms.
Scenario table3_scenario(std::uint64_t seed = 1);
// Three-org evolution: establish, extend, cross overlaps, release, retire.
Scenario fig11_scenario(std::uint64_t seed = 1);

struct RandomScenarioOptions {
  int min_orgs = 2;
  int max_orgs = 6;
  int min_plcs = 1;
  int max_plcs = 8;
  int opens = 12;
  bool closes = false;
  bool kills = false;
  // Gap between consecutive launches; larger than any resolution keeps them apart.
  Duration spacing{600};
};

Scenario random_scenario(std::uint64_t seed, const RandomScenarioOptions& options = {});

}  // namespace orgscada
