#pragma once

#include <memory>

#include "orgscada/gateway/gateway.hpp"
#include "orgscada/wire/tcp_transport.hpp"

namespace orgscada {

// One organization running on the wall clock: event loop, TCP links to its
// acquaintances and, when http_listen is set, the gateway.
class LiveNode {
 public:
  explicit LiveNode(OrganizationConfig config, GatewayOptions gateway = {});
  ~LiveNode();
  LiveNode(const LiveNode&) = delete;
  LiveNode& operator=(const LiveNode&) = delete;

  // Listens, boots the organization and starts dialing peers.
  void start();
  void stop();

  // Address of a peer's listener, overriding the acquaintance file.
  void set_peer(const std::string& org, const std::string& address);

  Organization& org() { return *org_; }
  RealtimeLoop& loop() { return loop_; }
  TcpTransport& transport() { return *transport_; }
  int tcp_port() const { return transport_->port(); }
  int http_port() const { return gateway_ ? gateway_->port() : 0; }

 private:
  GatewayOptions gateway_options_;
  RealtimeLoop loop_;
  std::unique_ptr<Organization> org_;
  std::unique_ptr<TcpTransport> transport_;
  std::unique_ptr<Gateway> gateway_;
  bool started_ = false;
};

}  // namespace orgscada
