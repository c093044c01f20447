#include "orgscada/kernel/node.hpp"

#include <algorithm>

namespace orgscada {

std::string_view to_string(AgentRole r) {
  switch (r) {
    case AgentRole::GlobalSupervisor:
      return "GlobalSupervisor";
    case AgentRole::LocalSupervisor:
      return "LocalSupervisor";
    case AgentRole::ControlAgent:
      return "ControlAgent";
    case AgentRole::RemoteOperatorAgent:
      return "RemoteOperatorAgent";
  }
  return "?";
}

Time AgentContext::now() const { return node_.now(); }

void AgentContext::send(Performative p, const AgentId& to, Protocol protocol,
                        const std::string& conversation_id, Json payload) const {
  MessageEnvelope env;
  env.performative = p;
  env.sender = self_;
  env.receiver = to;
  env.conversation_id = conversation_id;
  env.protocol = protocol;
  env.payload = std::move(payload);
  node_.dispatch(std::move(env));
}

void AgentContext::reply(const MessageEnvelope& msg, Performative p, Json payload) const {
  send(p, msg.sender, msg.protocol, msg.conversation_id, std::move(payload));
}

void AgentContext::after(Duration delay, std::function<void(AgentContext&)> fn) const {
  node_.schedule_timer(self_, incarnation_, delay, std::move(fn));
}

Node::Node(std::string org_name, Scheduler& scheduler, Duration intra_latency)
    : org_(std::move(org_name)), scheduler_(scheduler), intra_latency_(intra_latency) {
  register_endpoint(std::string(kDirectoryEndpoint),
                    [this](const MessageEnvelope& env) { handle_directory_request(env); });
}

Node::~Node() { *alive_ = false; }

Node::Record* Node::find(const AgentId& id) {
  if (id.org_name != org_) return nullptr;
  const auto it = agents_.find(id.local_name);
  return it == agents_.end() ? nullptr : &it->second;
}

const Node::Record* Node::find(const AgentId& id) const {
  if (id.org_name != org_) return nullptr;
  const auto it = agents_.find(id.local_name);
  return it == agents_.end() ? nullptr : &it->second;
}

AgentId Node::create_agent(const AgentSpec& spec) {
  if (spec.local_name.empty() || spec.local_name.find('@') != std::string::npos ||
      endpoints_.contains(spec.local_name)) {
    fail(ErrorCode::InvalidArgument, "agent name '" + spec.local_name + "'");
  }
  if (agents_.contains(spec.local_name)) {
    fail(ErrorCode::DuplicateName, spec.local_name + "@" + org_);
  }
  std::unique_ptr<Agent> agent = factory_ ? factory_(spec) : nullptr;
  if (!agent) fail(ErrorCode::InvalidRole, std::string(to_string(spec.role)));

  const AgentId id{spec.local_name, org_};
  Record& record = agents_[spec.local_name];
  record.spec = spec;
  record.agent = std::move(agent);
  record.incarnation = next_incarnation_++;
  const auto incarnation = record.incarnation;
  std::weak_ptr<bool> alive = alive_;
  scheduler_.post([this, alive, id, incarnation] {
    if (alive.expired()) return;
    Record* r = find(id);
    if (!r || r->incarnation != incarnation || r->crashed) return;
    AgentContext ctx(*this, id, incarnation);
    r->agent->on_start(ctx);
  });
  return id;
}

std::vector<RemoteRegistration> Node::destroy_agent(const AgentId& id) {
  const auto it = id.org_name == org_ ? agents_.find(id.local_name) : agents_.end();
  if (it == agents_.end()) fail(ErrorCode::UnknownAgent, id.str());

  // Deferred: the agent may be running the handler that asked for this.
  graveyard_.push_back(std::move(it->second.agent));
  std::weak_ptr<bool> alive = alive_;
  scheduler_.post([this, alive] {
    if (!alive.expired()) graveyard_.clear();
  });
  agents_.erase(it);

  send_notifications(df_.deregister_provider(id));
  df_.drop_subscriber(id);

  std::vector<RemoteRegistration> remote;
  if (const auto r = remote_registrations_.find(id.local_name); r != remote_registrations_.end()) {
    remote.assign(r->second.begin(), r->second.end());
    remote_registrations_.erase(r);
  }
  for (const auto& reg : remote) {
    MessageEnvelope env;
    env.performative = Performative::Request;
    env.sender = AgentId{std::string(kDirectoryEndpoint), org_};
    env.receiver = AgentId{std::string(kDirectoryEndpoint), reg.org};
    env.conversation_id = next_conversation_id("dereg");
    env.protocol = Protocol::Admin;
    env.payload = Json{{"op", "deregister"}, {"service", reg.service}, {"provider", id.str()}};
    dispatch(std::move(env));
  }
  return remote;
}

void Node::crash_agent(const AgentId& id) {
  Record* r = find(id);
  if (!r) fail(ErrorCode::UnknownAgent, id.str());
  r->crashed = true;
  r->mailbox.clear();
}

AgentId Node::ams_lookup(std::string_view local_name) const {
  const auto it = agents_.find(local_name);
  if (it == agents_.end()) fail(ErrorCode::NotFound, std::string(local_name) + "@" + org_);
  return AgentId{it->first, org_};
}

bool Node::is_live(const AgentId& id) const { return find(id) != nullptr; }

bool Node::is_crashed(const AgentId& id) const {
  const Record* r = find(id);
  return r && r->crashed;
}

std::vector<AgentId> Node::agents() const {
  std::vector<AgentId> out;
  for (const auto& [name, record] : agents_) out.push_back(AgentId{name, org_});
  return out;
}

std::vector<AgentId> Node::agents_with_role(AgentRole role) const {
  std::vector<AgentId> out;
  for (const auto& [name, record] : agents_) {
    if (record.spec.role == role) out.push_back(AgentId{name, org_});
  }
  return out;
}

const AgentSpec& Node::spec_of(const AgentId& id) const {
  const Record* r = find(id);
  if (!r) fail(ErrorCode::UnknownAgent, id.str());
  return r->spec;
}

Agent* Node::find_agent(std::string_view local_name) const {
  const auto it = agents_.find(local_name);
  return it == agents_.end() ? nullptr : it->second.agent.get();
}

void Node::df_register(ServiceDescriptor entry) {
  if (entry.provider.org_name == org_ && !is_live(entry.provider)) {
    fail(ErrorCode::UnknownAgent, entry.provider.str());
  }
  entry.registered_at = now();
  send_notifications(df_.register_entry(std::move(entry)));
}

void Node::df_deregister(std::string_view service_name, const AgentId& provider) {
  send_notifications(df_.deregister(service_name, provider));
}

SubscriptionId Node::df_subscribe(std::string pattern, const AgentId& subscriber) {
  if (!is_live(subscriber)) fail(ErrorCode::UnknownAgent, subscriber.str());
  auto [id, immediate] = df_.subscribe(std::move(pattern), subscriber);
  send_notifications(immediate);
  return id;
}

void Node::send_notifications(const std::vector<DfNotification>& notifications) {
  for (const auto& n : notifications) {
    MessageEnvelope env;
    env.performative = Performative::Notify;
    env.sender = AgentId{std::string(kDirectoryEndpoint), org_};
    env.receiver = n.subscriber;
    env.conversation_id = "df-sub-" + std::to_string(n.subscription);
    env.protocol = Protocol::Admin;
    env.payload = Json{{"op", "df-notify"},
                       {"event", n.event == DfEvent::Registered ? "registered" : "deregistered"},
                       {"subscription", n.subscription},
                       {"descriptor", to_json(n.entry)}};
    dispatch(std::move(env));
  }
}

void Node::handle_directory_request(const MessageEnvelope& env) {
  if (env.performative != Performative::Request) return;
  const AgentId self{std::string(kDirectoryEndpoint), org_};
  auto answer = [&](Performative p, Json payload) {
    MessageEnvelope reply;
    reply.performative = p;
    reply.sender = self;
    reply.receiver = env.sender;
    reply.conversation_id = env.conversation_id;
    reply.protocol = env.protocol;
    reply.payload = std::move(payload);
    dispatch(std::move(reply));
  };
  const std::string op = env.payload.value("op", "");
  try {
    if (op == "register") {
      ServiceDescriptor d = descriptor_from_json(env.payload.at("descriptor"));
      const std::string service = d.service_name;
      df_register(std::move(d));
      answer(Performative::Inform, Json{{"op", "registered"}, {"service", service}});
    } else if (op == "deregister") {
      df_deregister(env.payload.at("service").get<std::string>(),
                    AgentId::parse(env.payload.at("provider").get<std::string>()));
    } else if (op == "search") {
      Json entries = Json::array();
      for (const auto& d : df_search(env.payload.value("pattern", "*"))) entries.push_back(to_json(d));
      answer(Performative::Inform, Json{{"op", "search-result"}, {"entries", std::move(entries)}});
    } else {
      answer(Performative::Failure, Json{{"reason", "InvalidArgument"}, {"op", op}});
    }
  } catch (const Error& e) {
    const ErrorCode code =
        op == "register" ? ErrorCode::RegistrationRejected : ErrorCode::InvalidArgument;
    answer(Performative::Failure, Json{{"reason", std::string(to_string(code))},
                                       {"detail", e.what()},
                                       {"op", op}});
  } catch (const Json::exception& e) {
    answer(Performative::Failure,
           Json{{"reason", "InvalidArgument"}, {"detail", e.what()}, {"op", op}});
  }
}

void Node::note_remote_registration(const std::string& local_name, RemoteRegistration reg) {
  remote_registrations_[local_name].insert(std::move(reg));
}

void Node::forget_remote_registration(const std::string& local_name,
                                      const RemoteRegistration& reg) {
  const auto it = remote_registrations_.find(local_name);
  if (it == remote_registrations_.end()) return;
  it->second.erase(reg);
  if (it->second.empty()) remote_registrations_.erase(it);
}

bool Node::is_registered_at(const std::string& org, const std::string& service,
                            const std::string& local_name) const {
  const auto it = remote_registrations_.find(local_name);
  return it != remote_registrations_.end() && it->second.contains(RemoteRegistration{org, service});
}

std::vector<RemoteRegistration> Node::remote_registrations_of(const std::string& local_name) const {
  const auto it = remote_registrations_.find(local_name);
  if (it == remote_registrations_.end()) return {};
  return {it->second.begin(), it->second.end()};
}

void Node::register_endpoint(std::string name, Endpoint endpoint) {
  endpoints_[std::move(name)] = std::move(endpoint);
}

void Node::unregister_endpoint(const std::string& name) {
  if (name != kDirectoryEndpoint) endpoints_.erase(name);
}

std::string Node::next_conversation_id(std::string_view tag) {
  return org_ + "-" + std::string(tag) + "-" + std::to_string(next_conversation_++);
}

void Node::dispatch(MessageEnvelope env) {
  env.sent_at = now();
  if (send_observer_) send_observer_(env);
  if (env.receiver.org_name == org_) {
    ++in_flight_;
    std::weak_ptr<bool> alive = alive_;
    scheduler_.post_after(intra_latency_, [this, alive, env = std::move(env)]() mutable {
      if (alive.expired()) return;
      --in_flight_;
      deliver(std::move(env));
    });
    return;
  }
  if (transport_ && transport_->send(env)) return;
  bounce(env, ErrorCode::Unroutable);
}

void Node::bounce(const MessageEnvelope& env, ErrorCode reason) {
  // Never bounce a bounce.
  if (env.performative == Performative::Failure) return;
  if (env.sender.org_name != org_) {
    // A dead letter from a remote sender goes back over the transport.
    MessageEnvelope failure = make_bounce(env, reason, now());
    if (transport_) transport_->send(failure);
    return;
  }
  MessageEnvelope failure = make_bounce(env, reason, now());
  ++in_flight_;
  std::weak_ptr<bool> alive = alive_;
  scheduler_.post([this, alive, failure = std::move(failure)]() mutable {
    if (alive.expired()) return;
    --in_flight_;
    deliver(std::move(failure));
  });
}

void Node::deliver(MessageEnvelope env) {
  if (env.receiver.org_name != org_) return;
  if (const auto ep = endpoints_.find(env.receiver.local_name); ep != endpoints_.end()) {
    ep->second(env);
    return;
  }
  Record* r = find(env.receiver);
  if (!r) {
    bounce(env, ErrorCode::DeadLetter);
    return;
  }
  if (r->crashed) return;
  r->mailbox.push_back(std::move(env));
  high_watermark_ = std::max(high_watermark_, r->mailbox.size());
  if (!r->draining) drain(r->spec.local_name, r->incarnation);
}

void Node::drain(const std::string& local_name, std::uint64_t incarnation) {
  const AgentId id{local_name, org_};
  Record* r = find(id);
  if (!r) return;
  r->draining = true;
  while (true) {
    r = find(id);
    if (!r || r->incarnation != incarnation || r->crashed || r->mailbox.empty()) break;
    MessageEnvelope msg = std::move(r->mailbox.front());
    r->mailbox.pop_front();
    Agent* agent = r->agent.get();
    AgentContext ctx(*this, id, incarnation);
    if (msg.protocol == Protocol::Admin && msg.performative == Performative::Request &&
        msg.payload.value("op", "") == "ping") {
      ctx.reply(msg, Performative::Inform, Json{{"op", "pong"}});
      continue;
    }
    agent->on_message(ctx, msg);
  }
  if (r && r->incarnation == incarnation) r->draining = false;
}

void Node::schedule_timer(const AgentId& id, std::uint64_t incarnation, Duration delay,
                          std::function<void(AgentContext&)> fn) {
  std::weak_ptr<bool> alive = alive_;
  scheduler_.post_after(delay, [this, alive, id, incarnation, fn = std::move(fn)] {
    if (alive.expired()) return;
    Record* r = find(id);
    if (!r || r->incarnation != incarnation || r->crashed) return;
    AgentContext ctx(*this, id, incarnation);
    fn(ctx);
  });
}

}  // namespace orgscada
