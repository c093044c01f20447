#include "orgscada/gateway/live_node.hpp"

namespace orgscada {

LiveNode::LiveNode(OrganizationConfig config, GatewayOptions gateway) : gateway_options_(std::move(gateway)) {
  org_ = std::make_unique<Organization>(std::move(config), loop_);
  transport_ = std::make_unique<TcpTransport>(org_->name(), [this](MessageEnvelope env) {
    loop_.post([this, env = std::move(env)]() mutable { org_->node().deliver(std::move(env)); });
  });
  org_->node().set_transport(transport_.get());
  for (const auto& a : org_->config().acquaintances) {
    if (!a.address.empty()) transport_->set_peer(a.org_name, a.address);
  }
}

LiveNode::~LiveNode() { stop(); }

void LiveNode::set_peer(const std::string& org, const std::string& address) { transport_->set_peer(org, address); }

void LiveNode::start() {
  const OrganizationConfig& c = org_->config();
  transport_->listen(c.listen_address.empty() ? "127.0.0.1:0" : c.listen_address);
  loop_.start();
  loop_.call([this] { org_->boot(); });
  transport_->keep_connected();
  if (!c.http_listen.empty()) {
    gateway_ = std::make_unique<Gateway>(*org_, loop_, gateway_options_);
    gateway_->start(c.http_listen);
  }
  started_ = true;
}

void LiveNode::stop() {
  if (!started_) return;
  started_ = false;
  gateway_.reset();
  transport_->stop();
  loop_.stop();
}

}  // namespace orgscada
