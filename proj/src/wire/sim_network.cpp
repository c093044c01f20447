#include "orgscada/wire/sim_network.hpp"

namespace orgscada {

Duration NetConfig::hop(const std::string& from, const std::string& to) const {
  if (from == to) return intra_org_latency;
  const auto it = hop_latency.find({from, to});
  return it == hop_latency.end() ? default_hop_latency : it->second;
}

SimNetwork::SimNetwork(SimScheduler& scheduler, NetConfig config)
    : scheduler_(scheduler), config_(std::move(config)) {}

void SimNetwork::attach(Node& node) {
  nodes_[node.org()] = &node;
  node.set_transport(this);
}

void SimNetwork::detach(const std::string& org) {
  const auto it = nodes_.find(org);
  if (it == nodes_.end()) return;
  it->second->set_transport(nullptr);
  nodes_.erase(it);
}

bool SimNetwork::send(const MessageEnvelope& env) {
  const std::string& from = env.sender.org_name;
  const std::string& to = env.receiver.org_name;
  if (!nodes_.contains(to) || down_.contains({from, to})) return false;
  ++in_flight_;
  scheduler_.post_after(config_.hop(from, to), [this, env, to] {
    --in_flight_;
    const auto it = nodes_.find(to);
    if (it == nodes_.end()) return;
    ++delivered_;
    it->second->deliver(env);
  });
  return true;
}

void SimNetwork::set_link_down(const std::string& from, const std::string& to, bool down) {
  if (down) {
    down_.insert({from, to});
  } else {
    down_.erase({from, to});
  }
}

}  // namespace orgscada
