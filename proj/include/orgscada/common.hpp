#pragma once

#include <chrono>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>

namespace orgscada {

// All clocks (simulated and live) count milliseconds since the start of a run.
using Duration = std::chrono::milliseconds;
using Time = std::chrono::milliseconds;

enum class ErrorCode {
  InvalidArgument,
  DuplicateName,
  InvalidRole,
  UnknownAgent,
  NotFound,
  DuplicateEntry,
  Unroutable,
  DeadLetter,
  InvalidEnvelope,
  PayloadTooLarge,
  Truncated,
  MalformedDocument,
  UnknownPerformative,
  ConnectionRefused,
  Timeout,
  ConfigInvalid,
  AddressInUse,
  ServiceUnknownEverywhere,
  PeerUnreachable,
  RegistrationRejected,
  UnknownVariable,
  NotWritable,
  OutOfRange,
  SessionClosed,
  ScenarioInvalid,
};

std::string_view to_string(ErrorCode code);
ErrorCode error_code_from_string(std::string_view name);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what);
  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] void fail(ErrorCode code, const std::string& detail = {});

}  // namespace orgscada
