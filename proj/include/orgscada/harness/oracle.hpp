#pragma once

#include <string>
#include <vector>

#include "orgscada/scada/latency.hpp"

namespace orgscada {

// Where a protocol step runs, relative to the requesting organization.
enum class Party { Requester, Owner, Responder };

struct ProtocolStep {
  std::string message;
  Party from;
  Party to;
};

// Critical path of each resolution route, message by message, from the
// operator's request to the descriptor landing in its local DF.
const std::vector<ProtocolStep>& critical_path(PathClass c);

// Inter-organization hops on the critical path, found by walking the steps.
// Contract Net replies travel in parallel, so the acquaintance count does not
// lengthen the path; it only has to be at least one.
int hop_count_oracle(PathClass c, int n_acquaintances = 1);

}  // namespace orgscada
