#pragma once

#include <optional>
#include <string>
#include <vector>

#include "orgscada/common.hpp"

namespace orgscada {

// Kills the control agent serving one PLC while a local and a remote session
// use it, then watches the recovery on the simulated clock.
struct RecoveryProbe {
  std::string plc;
  std::string agent;
  Duration bound{0};                       // (miss limit + 1) heartbeat periods
  std::optional<Duration> local_restored;  // kill -> owner DF lists a live provider again
  std::optional<Duration> remote_restored; // kill -> requester DF lists it again
  bool sessions_kept = false;              // both operator agents are the original ones, open
  int local_data_after = 0;                // data events after the remote restoration
  int remote_data_after = 0;
  bool reopened = false;                   // any second "opened" for either session

  bool ok() const;
};

// Two organizations, three PLCs each (O1.PLC1-3, O2.PLC4-6). `plc_index` picks the victim.
RecoveryProbe probe_ca_recovery(int plc_index, std::uint64_t seed = 1);

struct SetpointProbe {
  int attempts = 0;
  int accepted = 0;
  int rejected = 0;
  int unanswered = 0;
  std::vector<std::string> problems;  // wrong verdicts or values out of bounds

  bool ok() const { return problems.empty() && unanswered == 0; }
};

// Random setpoints, many of them invalid, through one local and one remote session.
SetpointProbe probe_setpoint_safety(std::uint64_t seed, int attempts);

}  // namespace orgscada
