#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <set>
#include <string>
#include <utility>

#include "orgscada/kernel/node.hpp"
#include "orgscada/kernel/scheduler.hpp"
#include "orgscada/wire/transport.hpp"

namespace orgscada {

struct NetConfig {
  Duration default_hop_latency{100};
  Duration intra_org_latency{0};
  // Per ordered (from, to) org pair.
  std::map<std::pair<std::string, std::string>, Duration> hop_latency;
  std::uint64_t seed = 1;

  Duration hop(const std::string& from, const std::string& to) const;
};

// Deterministic network between nodes sharing one SimScheduler. Delivery
// happens exactly hop(from, to) after the send; equal latencies plus the
// scheduler's FIFO tie-break keep per-pair order.
class SimNetwork final : public Transport {
 public:
  SimNetwork(SimScheduler& scheduler, NetConfig config);

  void attach(Node& node);
  void detach(const std::string& org);

  bool send(const MessageEnvelope& env) override;

  // Fault injection: a downed ordered pair makes sends Unroutable.
  void set_link_down(const std::string& from, const std::string& to, bool down);

  const NetConfig& config() const { return config_; }
  std::size_t in_flight() const { return in_flight_; }
  std::uint64_t delivered() const { return delivered_; }

 private:
  SimScheduler& scheduler_;
  NetConfig config_;
  std::map<std::string, Node*> nodes_;
  std::set<std::pair<std::string, std::string>> down_;
  std::size_t in_flight_ = 0;
  std::uint64_t delivered_ = 0;
};

}  // namespace orgscada
