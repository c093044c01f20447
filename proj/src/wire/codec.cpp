#include "orgscada/wire/codec.hpp"

#include <algorithm>
#include <string>

namespace orgscada::wire {

namespace {

constexpr const char* kFields[] = {"conversation_id", "payload", "performative", "protocol",
                                   "receiver",        "sender",  "sent_at"};

std::uint32_t read_length(std::span<const std::uint8_t> bytes) {
  return (std::uint32_t{bytes[0]} << 24) | (std::uint32_t{bytes[1]} << 16) |
         (std::uint32_t{bytes[2]} << 8) | std::uint32_t{bytes[3]};
}

const Json& require(const Json& doc, const char* field, bool (Json::*check)() const noexcept) {
  const auto it = doc.find(field);
  if (it == doc.end() || !((*it).*check)()) {
    fail(ErrorCode::MalformedDocument, std::string("bad or missing field '") + field + "'");
  }
  return *it;
}

AgentId parse_agent(const Json& v) {
  try {
    return AgentId::parse(v.get<std::string>());
  } catch (const Error& e) {
    fail(ErrorCode::MalformedDocument, e.what());
  }
}

}  // namespace

Json to_document(const MessageEnvelope& env) {
  if (!is_valid(env)) fail(ErrorCode::InvalidEnvelope, "envelope violates its invariants");
  return Json{{"conversation_id", env.conversation_id},
              {"payload", env.payload},
              {"performative", std::string(to_string(env.performative))},
              {"protocol", std::string(to_string(env.protocol))},
              {"receiver", env.receiver.str()},
              {"sender", env.sender.str()},
              {"sent_at", static_cast<std::int64_t>(env.sent_at.count())}};
}

MessageEnvelope from_document(const Json& doc) {
  if (!doc.is_object() || doc.size() != std::size(kFields)) {
    fail(ErrorCode::MalformedDocument, "envelope must be an object with exactly 7 fields");
  }
  MessageEnvelope env;
  const auto& perf = require(doc, "performative", &Json::is_string);
  const auto p = performative_from_string(perf.get<std::string>());
  if (!p) fail(ErrorCode::UnknownPerformative, perf.get<std::string>());
  env.performative = *p;
  const auto& proto = require(doc, "protocol", &Json::is_string);
  const auto pr = protocol_from_string(proto.get<std::string>());
  if (!pr) fail(ErrorCode::MalformedDocument, "unknown protocol " + proto.get<std::string>());
  env.protocol = *pr;
  env.sender = parse_agent(require(doc, "sender", &Json::is_string));
  env.receiver = parse_agent(require(doc, "receiver", &Json::is_string));
  env.conversation_id = require(doc, "conversation_id", &Json::is_string).get<std::string>();
  env.payload = require(doc, "payload", &Json::is_object);
  const auto& sent = require(doc, "sent_at", &Json::is_number_integer);
  env.sent_at = Time{sent.get<std::int64_t>()};
  if (!is_valid(env)) fail(ErrorCode::MalformedDocument, "envelope violates its invariants");
  return env;
}

Bytes encode(const MessageEnvelope& env) {
  std::string text;
  try {
    text = to_document(env).dump();
  } catch (const Json::exception& e) {
    fail(ErrorCode::InvalidEnvelope, e.what());
  }
  if (text.size() > kMaxDocumentBytes) {
    fail(ErrorCode::PayloadTooLarge, std::to_string(text.size()) + " bytes");
  }
  Bytes out;
  out.reserve(kLengthPrefixBytes + text.size());
  const auto n = static_cast<std::uint32_t>(text.size());
  out.push_back(static_cast<std::uint8_t>(n >> 24));
  out.push_back(static_cast<std::uint8_t>(n >> 16));
  out.push_back(static_cast<std::uint8_t>(n >> 8));
  out.push_back(static_cast<std::uint8_t>(n));
  out.insert(out.end(), text.begin(), text.end());
  return out;
}

MessageEnvelope decode(std::span<const std::uint8_t> frame) {
  if (frame.size() < kLengthPrefixBytes) fail(ErrorCode::Truncated, "missing length prefix");
  const std::uint32_t n = read_length(frame);
  if (n > kMaxDocumentBytes) fail(ErrorCode::PayloadTooLarge, std::to_string(n) + " bytes");
  const auto body = frame.subspan(kLengthPrefixBytes);
  if (body.size() < n) fail(ErrorCode::Truncated, "document shorter than its length prefix");
  if (body.size() > n) fail(ErrorCode::MalformedDocument, "trailing bytes after document");

  const std::string text(body.begin(), body.end());
  Json doc = Json::parse(text, nullptr, /*allow_exceptions=*/false);
  if (doc.is_discarded()) fail(ErrorCode::MalformedDocument, "not a JSON document");
  MessageEnvelope env = from_document(doc);
  // Canonical form check: anything encode() would not have produced is rejected.
  if (to_document(env).dump() != text) {
    fail(ErrorCode::MalformedDocument, "document is not in canonical form");
  }
  return env;
}

void FrameReader::feed(std::span<const std::uint8_t> bytes) {
  buffer_.insert(buffer_.end(), bytes.begin(), bytes.end());
}

std::optional<MessageEnvelope> FrameReader::next() {
  if (buffer_.size() < kLengthPrefixBytes) return std::nullopt;
  std::uint8_t prefix[kLengthPrefixBytes];
  std::copy_n(buffer_.begin(), kLengthPrefixBytes, prefix);
  const std::uint32_t n = read_length(prefix);
  if (n > kMaxDocumentBytes) fail(ErrorCode::PayloadTooLarge, std::to_string(n) + " bytes");
  if (buffer_.size() < kLengthPrefixBytes + n) return std::nullopt;
  Bytes frame(buffer_.begin(), buffer_.begin() + static_cast<std::ptrdiff_t>(kLengthPrefixBytes + n));
  buffer_.erase(buffer_.begin(), buffer_.begin() + static_cast<std::ptrdiff_t>(frame.size()));
  return decode(frame);
}

}  // namespace orgscada::wire
