#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "orgscada/common.hpp"
#include "orgscada/plantsim/plc.hpp"

namespace orgscada {

struct AgentDefaults {
  Duration poll_period{500};
  Duration heartbeat_period{1000};
  int heartbeat_miss_limit = 3;
  Duration cfp_deadline{2000};
  Duration idle_grace{60000};
  Duration adaptation_period{1000};
  // 0: one control agent per PLC. Otherwise PLCs are spread over this many
  // control agents.
  std::size_t ca_count = 0;
};

struct Acquaintance {
  std::string org_name;
  std::string address;  // host:port, empty on the simulated network
};

struct OrganizationConfig {
  std::string org_name;
  std::string listen_address;
  std::string http_listen;
  std::vector<Acquaintance> acquaintances;
  std::vector<plantsim::PlcConfig> plcs;
  AgentDefaults agent_defaults;
  std::uint64_t seed = 1;
};

// Throws ConfigInvalid.
void validate(const OrganizationConfig& config);

// Reads <dir>/processes.xml and <dir>/acquaintances.xml.
OrganizationConfig load_config_dir(const std::filesystem::path& dir);
OrganizationConfig parse_config_xml(const std::string& processes_xml,
                                    const std::string& acquaintances_xml);
std::string to_processes_xml(const OrganizationConfig& config);
std::string to_acquaintances_xml(const OrganizationConfig& config);

// Splits "host:port"; throws ConfigInvalid.
std::pair<std::string, int> split_address(const std::string& address);

}  // namespace orgscada
