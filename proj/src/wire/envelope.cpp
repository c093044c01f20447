#include "orgscada/wire/envelope.hpp"

#include <array>
#include <utility>

namespace orgscada {

namespace {

constexpr std::array<std::pair<Performative, std::string_view>, 9> kPerformatives{{
    {Performative::Request, "REQUEST"},
    {Performative::Inform, "INFORM"},
    {Performative::Cfp, "CFP"},
    {Performative::Propose, "PROPOSE"},
    {Performative::AcceptProposal, "ACCEPT_PROPOSAL"},
    {Performative::RejectProposal, "REJECT_PROPOSAL"},
    {Performative::Failure, "FAILURE"},
    {Performative::Subscribe, "SUBSCRIBE"},
    {Performative::Notify, "NOTIFY"},
}};

constexpr std::array<std::pair<Protocol, std::string_view>, 5> kProtocols{{
    {Protocol::Trigger, "Trigger"},
    {Protocol::ContractNet, "ContractNet"},
    {Protocol::ShareExtension, "ShareExtension"},
    {Protocol::DataFeed, "DataFeed"},
    {Protocol::Admin, "Admin"},
}};

}  // namespace

AgentId AgentId::parse(std::string_view text) {
  const auto at = text.find('@');
  if (at == std::string_view::npos || at == 0 || at + 1 >= text.size() ||
      text.find('@', at + 1) != std::string_view::npos) {
    throw Error(ErrorCode::InvalidArgument, "agent id must be name@org: " + std::string(text));
  }
  return AgentId{std::string(text.substr(0, at)), std::string(text.substr(at + 1))};
}

std::string_view to_string(Performative p) {
  for (const auto& [v, name] : kPerformatives) {
    if (v == p) return name;
  }
  return "?";
}

std::string_view to_string(Protocol p) {
  for (const auto& [v, name] : kProtocols) {
    if (v == p) return name;
  }
  return "?";
}

std::optional<Performative> performative_from_string(std::string_view s) {
  for (const auto& [v, name] : kPerformatives) {
    if (name == s) return v;
  }
  return std::nullopt;
}

std::optional<Protocol> protocol_from_string(std::string_view s) {
  for (const auto& [v, name] : kProtocols) {
    if (name == s) return v;
  }
  return std::nullopt;
}

bool is_contract_net_only(Performative p) {
  return p == Performative::Cfp || p == Performative::Propose ||
         p == Performative::AcceptProposal || p == Performative::RejectProposal;
}

bool is_valid(const MessageEnvelope& env) {
  if (is_contract_net_only(env.performative) && env.protocol != Protocol::ContractNet) return false;
  if (env.sender.local_name.empty() || env.sender.org_name.empty()) return false;
  if (env.receiver.local_name.empty() || env.receiver.org_name.empty()) return false;
  return env.payload.is_object();
}

MessageEnvelope make_bounce(const MessageEnvelope& undelivered, ErrorCode reason, Time now) {
  MessageEnvelope failure;
  failure.performative = Performative::Failure;
  failure.sender = undelivered.receiver;
  failure.receiver = undelivered.sender;
  failure.conversation_id = undelivered.conversation_id;
  // FAILURE is not a Contract Net performative, so any protocol is legal here.
  failure.protocol = undelivered.protocol;
  failure.payload = Json{{"reason", std::string(to_string(reason))},
                         {"undelivered", std::string(to_string(undelivered.performative))},
                         {"op", undelivered.payload.value("op", "")}};
  failure.sent_at = now;
  return failure;
}

}  // namespace orgscada
