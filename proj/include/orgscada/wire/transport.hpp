#pragma once

#include "orgscada/wire/envelope.hpp"

namespace orgscada {

// Carries envelopes between organization nodes. send() returns false when no
// route to the receiver's organization exists; the caller turns that into an
// Unroutable FAILURE for the sending agent.
class Transport {
 public:
  virtual ~Transport() = default;
  virtual bool send(const MessageEnvelope& env) = 0;
};

}  // namespace orgscada
