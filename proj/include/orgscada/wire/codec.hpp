#pragma once

#include <cstddef>
#include <cstdint>
#include <deque>
#include <optional>
#include <span>
#include <vector>

#include "orgscada/wire/envelope.hpp"

namespace orgscada::wire {

using Bytes = std::vector<std::uint8_t>;

inline constexpr std::size_t kMaxDocumentBytes = 16u * 1024u * 1024u;
inline constexpr std::size_t kLengthPrefixBytes = 4;

// Frame = [u32 big-endian document length][canonical document]. The document is
// compact JSON with object keys in lexicographic order.
Bytes encode(const MessageEnvelope& env);

// Decodes exactly one frame. Only byte strings produced by encode() are
// accepted; everything else raises Error with Truncated, MalformedDocument or
// UnknownPerformative.
MessageEnvelope decode(std::span<const std::uint8_t> frame);

Json to_document(const MessageEnvelope& env);
MessageEnvelope from_document(const Json& doc);

// Incremental decoder for stream transports.
class FrameReader {
 public:
  void feed(std::span<const std::uint8_t> bytes);
  // Returns the next complete frame, nullopt if more bytes are needed. Throws
  // on a malformed frame or an oversize length prefix.
  std::optional<MessageEnvelope> next();
  std::size_t buffered() const { return buffer_.size(); }

 private:
  std::deque<std::uint8_t> buffer_;
};

}  // namespace orgscada::wire
