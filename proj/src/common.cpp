#include "orgscada/common.hpp"

#include <array>
#include <utility>

namespace orgscada {

namespace {

constexpr std::array<std::pair<ErrorCode, std::string_view>, 25> kNames{{
    {ErrorCode::InvalidArgument, "InvalidArgument"},
    {ErrorCode::DuplicateName, "DuplicateName"},
    {ErrorCode::InvalidRole, "InvalidRole"},
    {ErrorCode::UnknownAgent, "UnknownAgent"},
    {ErrorCode::NotFound, "NotFound"},
    {ErrorCode::DuplicateEntry, "DuplicateEntry"},
    {ErrorCode::Unroutable, "Unroutable"},
    {ErrorCode::DeadLetter, "DeadLetter"},
    {ErrorCode::InvalidEnvelope, "InvalidEnvelope"},
    {ErrorCode::PayloadTooLarge, "PayloadTooLarge"},
    {ErrorCode::Truncated, "Truncated"},
    {ErrorCode::MalformedDocument, "MalformedDocument"},
    {ErrorCode::UnknownPerformative, "UnknownPerformative"},
    {ErrorCode::ConnectionRefused, "ConnectionRefused"},
    {ErrorCode::Timeout, "Timeout"},
    {ErrorCode::ConfigInvalid, "ConfigInvalid"},
    {ErrorCode::AddressInUse, "AddressInUse"},
    {ErrorCode::ServiceUnknownEverywhere, "ServiceUnknownEverywhere"},
    {ErrorCode::PeerUnreachable, "PeerUnreachable"},
    {ErrorCode::RegistrationRejected, "RegistrationRejected"},
    {ErrorCode::UnknownVariable, "UnknownVariable"},
    {ErrorCode::NotWritable, "NotWritable"},
    {ErrorCode::OutOfRange, "OutOfRange"},
    {ErrorCode::SessionClosed, "SessionClosed"},
    {ErrorCode::ScenarioInvalid, "ScenarioInvalid"},
}};

}  // namespace

std::string_view to_string(ErrorCode code) {
  for (const auto& [c, name] : kNames) {
    if (c == code) return name;
  }
  return "Unknown";
}

ErrorCode error_code_from_string(std::string_view name) {
  for (const auto& [c, n] : kNames) {
    if (n == name) return c;
  }
  throw Error(ErrorCode::InvalidArgument, "unknown error code: " + std::string(name));
}

Error::Error(ErrorCode code, const std::string& what)
    : std::runtime_error(what.empty() ? std::string(to_string(code))
                                      : std::string(to_string(code)) + ": " + what),
      code_(code) {}

void fail(ErrorCode code, const std::string& detail) { throw Error(code, detail); }

}  // namespace orgscada
