#pragma once

#include "json.hpp"

#include <optional>
#include <string>
#include <string_view>

#include "orgscada/common.hpp"
#include "orgscada/kernel/agent_id.hpp"

namespace orgscada {

using Json = nlohmann::json;

enum class Performative {
  Request,
  Inform,
  Cfp,
  Propose,
  AcceptProposal,
  RejectProposal,
  Failure,
  Subscribe,
  Notify,
};

enum class Protocol { Trigger, ContractNet, ShareExtension, DataFeed, Admin };

std::string_view to_string(Performative p);
std::string_view to_string(Protocol p);
std::optional<Performative> performative_from_string(std::string_view s);
std::optional<Protocol> protocol_from_string(std::string_view s);

struct MessageEnvelope {
  Performative performative = Performative::Inform;
  AgentId sender;
  AgentId receiver;
  std::string conversation_id;
  Protocol protocol = Protocol::Admin;
  Json payload = Json::object();
  Time sent_at{0};

  bool operator==(const MessageEnvelope&) const = default;
};

// CFP/PROPOSE/ACCEPT/REJECT are only legal inside a Contract Net conversation.
bool is_contract_net_only(Performative p);
bool is_valid(const MessageEnvelope& env);

// Builds the FAILURE that goes back to the sender of an undeliverable envelope.
MessageEnvelope make_bounce(const MessageEnvelope& undelivered, ErrorCode reason, Time now);

}  // namespace orgscada
