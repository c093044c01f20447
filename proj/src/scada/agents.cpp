#include "orgscada/scada/agents.hpp"

#include <algorithm>

namespace orgscada {

namespace {

AgentId console_of(const AgentContext& ctx) {
  return AgentId{std::string(kConsoleEndpoint), ctx.self().org_name};
}

AgentId ls_ra_of(const AgentContext& ctx) {
  return AgentId{std::string(kRaSupervisorName), ctx.self().org_name};
}

AgentId gs_of(const AgentContext& ctx) {
  return AgentId{std::string(kGlobalSupervisorName), ctx.self().org_name};
}

}  // namespace

Json sample_to_json(const plantsim::Sample& s) {
  return Json{{"var", s.var},
              {"value", s.value},
              {"quality", std::string(plantsim::to_string(s.quality))},
              {"t_ms", s.timestamp.count()}};
}

// ---------------------------------------------------------------- ControlAgent

ControlAgent::ControlAgent(const AgentSpec& spec, PlcLookup lookup)
    : spec_(spec), lookup_(std::move(lookup)) {}

ControlAgent::~ControlAgent() {
  for (auto& [plc, id] : plc_subscriptions_) plc->unsubscribe(id);
}

std::vector<std::string> ControlAgent::services() const {
  std::vector<std::string> out;
  for (const auto& [name, plc] : plcs_) out.push_back(name);
  return out;
}

void ControlAgent::on_start(AgentContext& ctx) {
  node_ = &ctx.node();
  self_ = ctx.self();
  for (const auto& name : spec_.config_payload.value("plcs", std::vector<std::string>{})) {
    plantsim::Plc* plc = lookup_(name);
    if (!plc) continue;
    plcs_[name] = plc;
    for (const auto& var : plc->variable_names()) {
      const auto id = plc->subscribe(var, [this, name](const plantsim::Sample& s) { on_sample(name, s); });
      plc_subscriptions_.emplace_back(plc, id);
    }
    ServiceDescriptor d;
    d.service_name = name;
    d.provider = self_;
    d.home_org = self_.org_name;
    ctx.node().df_register(d);
  }
  if (spec_.config_payload.contains("restore_remote")) {
    for (const auto& r : spec_.config_payload["restore_remote"]) {
      share(ctx, r.at("service").get<std::string>(), r.at("org").get<std::string>(), "");
    }
  }
}

void ControlAgent::share(AgentContext& ctx, const std::string& service, const std::string& org,
                         const std::string& conv) {
  if (!plcs_.contains(service)) {
    ctx.send(Performative::Inform, gs_of(ctx), Protocol::Admin, conv,
             Json{{"op", "share-failed"}, {"service", service}, {"org", org}, {"reason", "NotFound"}});
    return;
  }
  ServiceDescriptor d;
  d.service_name = service;
  d.provider = self_;
  d.home_org = self_.org_name;
  const std::string reg_conv = ctx.node().next_conversation_id("reg");
  pending_shares_[reg_conv] = PendingShare{org, service, conv};
  // Noted before the ack so a session that races the ack is still served.
  ctx.node().note_remote_registration(self_.local_name, RemoteRegistration{org, service});
  ctx.send(Performative::Request, AgentId{std::string(kDirectoryEndpoint), org}, Protocol::Admin,
           reg_conv, Json{{"op", "register"}, {"descriptor", to_json(d)}});
}

bool ControlAgent::may_serve(const Node& node, const std::string& org,
                             const std::string& service) const {
  return org == self_.org_name || node.is_registered_at(org, service, self_.local_name);
}

void ControlAgent::on_sample(const std::string& service, const plantsim::Sample& s) {
  // A hung or replaced agent stays silent.
  if (!node_ || node_->find_agent(self_.local_name) != this || node_->is_crashed(self_)) return;
  for (const auto& [ra, feed] : feeds_) {
    if (feed.service != service) continue;
    if (!feed.vars.empty() && !feed.vars.contains(s.var)) continue;
    MessageEnvelope env;
    env.performative = Performative::Notify;
    env.sender = self_;
    env.receiver = ra;
    env.conversation_id = feed.conversation_id;
    env.protocol = Protocol::DataFeed;
    Json payload = sample_to_json(s);
    payload["op"] = "data";
    payload["service"] = service;
    env.payload = std::move(payload);
    node_->dispatch(std::move(env));
  }
}

void ControlAgent::on_message(AgentContext& ctx, const MessageEnvelope& msg) {
  const std::string op = msg.payload.value("op", "");
  if (msg.protocol == Protocol::DataFeed) {
    handle_feed(ctx, msg);
    return;
  }
  if (msg.protocol != Protocol::Admin) return;

  if (msg.performative == Performative::Request && op == "share") {
    share(ctx, msg.payload.at("service").get<std::string>(), msg.payload.at("org").get<std::string>(),
          msg.conversation_id);
    return;
  }
  const auto pending = pending_shares_.find(msg.conversation_id);
  if (pending == pending_shares_.end()) return;
  const PendingShare p = pending->second;
  pending_shares_.erase(pending);
  if (msg.performative == Performative::Inform && op == "registered") {
    ctx.send(Performative::Inform, gs_of(ctx), Protocol::Admin, p.share_conv,
             Json{{"op", "shared"}, {"service", p.service}, {"org", p.org}});
  } else if (msg.performative == Performative::Failure) {
    ctx.node().forget_remote_registration(self_.local_name, RemoteRegistration{p.org, p.service});
    ctx.send(Performative::Inform, gs_of(ctx), Protocol::Admin, p.share_conv,
             Json{{"op", "share-failed"},
                  {"service", p.service},
                  {"org", p.org},
                  {"reason", msg.payload.value("reason", "")}});
  }
}

void ControlAgent::handle_feed(AgentContext& ctx, const MessageEnvelope& msg) {
  if (msg.performative == Performative::Failure) {
    // Our NOTIFY bounced: the operator agent is gone.
    if (msg.payload.value("undelivered", "") == "NOTIFY") feeds_.erase(msg.sender);
    return;
  }
  const std::string op = msg.payload.value("op", "");
  const std::string service = msg.payload.value("service", "");
  const auto plc_it = plcs_.find(service);
  auto refuse = [&](const std::string& reason) {
    ctx.reply(msg, Performative::Failure, Json{{"op", op}, {"reason", reason}, {"service", service}});
  };
  if (op == "unsubscribe") {
    feeds_.erase(msg.sender);
    return;
  }
  if (plc_it == plcs_.end()) return refuse("NotFound");
  if (!may_serve(ctx.node(), msg.sender.org_name, service)) return refuse("not-shared");
  plantsim::Plc& plc = *plc_it->second;

  try {
    if (msg.performative == Performative::Subscribe) {
      Feed feed{msg.conversation_id, service, {}};
      for (const auto& v : msg.payload.value("vars", std::vector<std::string>{})) {
        plc.read(v, ctx.now());  // UnknownVariable
        feed.vars.insert(v);
      }
      Json samples = Json::array();
      for (const auto& v : plc.variable_names()) {
        if (feed.vars.empty() || feed.vars.contains(v)) samples.push_back(sample_to_json(plc.read(v, ctx.now())));
      }
      feeds_[msg.sender] = std::move(feed);
      ctx.reply(msg, Performative::Inform,
                Json{{"op", "snapshot"}, {"service", service}, {"samples", std::move(samples)}});
    } else if (op == "read") {
      Json payload = sample_to_json(plc.read(msg.payload.at("var").get<std::string>(), ctx.now()));
      payload["op"] = "read";
      ctx.reply(msg, Performative::Inform, std::move(payload));
    } else if (op == "setpoint") {
      const std::string var = msg.payload.at("var").get<std::string>();
      const double value = msg.payload.at("value").get<double>();
      plc.validate_write(var, value);
      plc.write(var, value, ctx.now());
      ctx.reply(msg, Performative::Inform,
                Json{{"op", "setpoint"}, {"accepted", true}, {"var", var}, {"value", value}});
    } else {
      refuse("InvalidArgument");
    }
  } catch (const Error& e) {
    refuse(std::string(to_string(e.code())));
  } catch (const Json::exception&) {
    refuse("InvalidArgument");
  }
}

// --------------------------------------------------------------- OperatorAgent

namespace {
constexpr const char* kResolving = "Resolving";
constexpr const char* kOpen = "Open";
constexpr const char* kSuspended = "Suspended";
constexpr const char* kClosed = "Closed";
constexpr const char* kFailed = "Failed";
}  // namespace

OperatorAgent::OperatorAgent(const AgentSpec& spec)
    : service_(spec.config_payload.value("service", "")),
      vars_(spec.config_payload.value("vars", std::vector<std::string>{})),
      launch_index_(spec.config_payload.value("launch_index", 0)),
      fsm_(kResolving, {kClosed, kFailed}) {
  fsm_.add(kResolving, "access", kOpen)
      .add(kResolving, "fail", kFailed)
      .add(kResolving, "close", kClosed)
      .add(kOpen, "provider-lost", kSuspended)
      .add(kSuspended, "access", kOpen)
      .add(kOpen, "close", kClosed)
      .add(kSuspended, "close", kClosed);
}

bool OperatorAgent::is_open() const {
  return fsm_.state() == kOpen || fsm_.state() == kSuspended;
}

bool OperatorAgent::owes_tfja() const {
  if (fsm_.halted() || !trja_sent_) return false;
  return fsm_.state() == kResolving || (path_ && *path_ != PathClass::Local);
}

void OperatorAgent::to_console(AgentContext& ctx, Performative p, Json payload) const {
  payload["ra"] = ctx.self().str();
  payload["service"] = service_;
  ctx.send(p, console_of(ctx), Protocol::Admin, ctx.self().str(), std::move(payload));
}

void OperatorAgent::on_start(AgentContext& ctx) {
  started_ = ctx.now();
  if (!parse_service_name(service_)) {
    fail_open(ctx, std::string(to_string(ErrorCode::ServiceUnknownEverywhere)));
    return;
  }
  df_subscription_ = ctx.node().df_subscribe(service_, ctx.self());
  const auto hits = ctx.node().df_search(service_);
  trja_conv_ = ctx.node().next_conversation_id("trja");
  if (hits.empty()) {
    // Required service not available locally: bypass to the supervisors.
    trja_sent_ = true;
    ctx.send(Performative::Request, ls_ra_of(ctx), Protocol::Trigger, trja_conv_,
             Json{{"op", "trja"}, {"mode", "resolve"}, {"service", service_}, {"ra", ctx.self().str()}});
    return;
  }
  // Prefer a local provider when the DF holds both.
  auto best = std::find_if(hits.begin(), hits.end(), [&](const ServiceDescriptor& d) {
    return d.provider.org_name == ctx.self().org_name;
  });
  const ServiceDescriptor& d = best != hits.end() ? *best : hits.front();
  if (d.provider.org_name == ctx.self().org_name) {
    path_ = PathClass::Local;
  } else {
    path_ = PathClass::SharedAlready;
    trja_sent_ = true;
    ctx.send(Performative::Request, ls_ra_of(ctx), Protocol::Trigger, trja_conv_,
             Json{{"op", "trja"}, {"mode", "join"}, {"service", service_}, {"ra", ctx.self().str()}});
  }
  access(ctx, d);
}

void OperatorAgent::on_message(AgentContext& ctx, const MessageEnvelope& msg) {
  if (fsm_.halted()) return;
  if (msg.sender.local_name == kDirectoryEndpoint && msg.performative == Performative::Notify) {
    on_directory(ctx, msg);
  } else if (msg.protocol == Protocol::Trigger) {
    on_trigger(ctx, msg);
  } else if (msg.sender.local_name == kConsoleEndpoint && msg.protocol == Protocol::Admin) {
    on_console(ctx, msg);
  } else if (msg.protocol == Protocol::DataFeed) {
    on_feed(ctx, msg);
  }
}

void OperatorAgent::on_directory(AgentContext& ctx, const MessageEnvelope& msg) {
  const ServiceDescriptor d = descriptor_from_json(msg.payload.at("descriptor"));
  if (d.service_name != service_) return;
  const std::string event = msg.payload.value("event", "");
  if (event == "registered") {
    if (fsm_.state() == kResolving || fsm_.state() == kSuspended) access(ctx, d);
  } else if (event == "deregistered") {
    if (fsm_.state() == kOpen && provider_ && d.provider == *provider_) {
      // Another provider may still be listed.
      for (const auto& other : ctx.node().df_search(service_)) {
        if (other.provider != d.provider) {
          fsm_.fire("provider-lost");
          access(ctx, other);
          return;
        }
      }
      fsm_.fire("provider-lost");
      to_console(ctx, Performative::Inform, Json{{"op", "session"}, {"state", "suspended"}});
    }
  }
}

void OperatorAgent::access(AgentContext& ctx, const ServiceDescriptor& d) {
  const bool resumed = fsm_.state() == kSuspended;
  fsm_.fire("access");
  provider_ = d.provider;
  if (!access_time_) access_time_ = ctx.now();
  subscribe_feed(ctx);
  if (resumed) {
    to_console(ctx, Performative::Inform, Json{{"op", "session"}, {"state", "resumed"}});
  } else {
    maybe_report_open(ctx);
  }
}

void OperatorAgent::subscribe_feed(AgentContext& ctx) {
  feed_conv_ = ctx.node().next_conversation_id("feed");
  Json payload{{"op", "subscribe"}, {"service", service_}};
  if (!vars_.empty()) payload["vars"] = vars_;
  ctx.send(Performative::Subscribe, *provider_, Protocol::DataFeed, feed_conv_, std::move(payload));
}

void OperatorAgent::maybe_report_open(AgentContext& ctx) {
  if (!access_time_ || !path_) return;
  LatencyRecord r;
  r.requester_org = ctx.self().org_name;
  r.service_name = service_;
  r.path_class = *path_;
  r.t_service = *access_time_ - started_;
  r.launch_index = launch_index_;
  r.ra = ctx.self().str();
  Json payload{{"op", "session"}, {"state", "opened"}, {"latency", to_json(r)}};
  if (provider_) payload["provider"] = provider_->str();
  to_console(ctx, Performative::Inform, std::move(payload));
}

void OperatorAgent::on_trigger(AgentContext& ctx, const MessageEnvelope& msg) {
  const std::string op = msg.payload.value("op", "");
  if (msg.performative == Performative::Inform && op == "path") {
    if (path_) return;
    const auto c = path_class_from_string(msg.payload.value("class", ""));
    if (!c) return;
    path_ = *c;
    maybe_report_open(ctx);
  } else if (msg.performative == Performative::Failure) {
    if (fsm_.state() != kResolving) return;
    fail_open(ctx, msg.payload.value("reason", "Unroutable"));
  }
}

void OperatorAgent::fail_open(AgentContext& ctx, const std::string& reason) {
  fsm_.fire("fail");
  trja_sent_ = false;  // the supervisor already dropped us
  to_console(ctx, Performative::Failure, Json{{"op", "session"}, {"state", "failed"}, {"reason", reason}});
  ctx.node().destroy_agent(ctx.self());
}

void OperatorAgent::on_feed(AgentContext& ctx, const MessageEnvelope& msg) {
  const std::string op = msg.payload.value("op", "");
  if (msg.conversation_id == feed_conv_) {
    if (msg.performative == Performative::Inform && op == "snapshot") {
      for (const auto& s : msg.payload.at("samples")) {
        Json payload = s;
        payload["op"] = "data";
        to_console(ctx, Performative::Notify, std::move(payload));
      }
      if (!first_value_seen_) {
        first_value_seen_ = true;
        to_console(ctx, Performative::Inform,
                   Json{{"op", "first-value"}, {"t_first_value_ms", (ctx.now() - started_).count()}});
      }
    } else if (msg.performative == Performative::Notify && op == "data") {
      Json payload = msg.payload;
      payload.erase("service");
      to_console(ctx, Performative::Notify, std::move(payload));
    } else if (msg.performative == Performative::Failure) {
      to_console(ctx, Performative::Failure,
                 Json{{"op", "feed-error"}, {"reason", msg.payload.value("reason", "")}});
    }
    return;
  }
  const auto sp = setpoints_.find(msg.conversation_id);
  if (sp == setpoints_.end()) return;
  const std::string request_id = sp->second;
  setpoints_.erase(sp);
  Json verdict{{"op", "verdict"}, {"request_id", request_id}};
  if (msg.performative == Performative::Inform) {
    verdict["accepted"] = true;
    verdict["var"] = msg.payload.value("var", "");
    verdict["value"] = msg.payload.value("value", 0.0);
  } else {
    verdict["accepted"] = false;
    verdict["reason"] = msg.payload.value("reason", "");
  }
  to_console(ctx, Performative::Inform, std::move(verdict));
}

void OperatorAgent::on_console(AgentContext& ctx, const MessageEnvelope& msg) {
  const std::string op = msg.payload.value("op", "");
  if (op == "close") {
    close(ctx, "operator");
  } else if (op == "setpoint") {
    const std::string request_id = msg.payload.value("request_id", "");
    if (!is_open() || fsm_.state() == kSuspended) {
      const std::string reason = fsm_.state() == kSuspended ? "PeerUnreachable" : "SessionClosed";
      to_console(ctx, Performative::Inform,
                 Json{{"op", "verdict"}, {"request_id", request_id}, {"accepted", false}, {"reason", reason}});
      return;
    }
    const std::string conv = ctx.node().next_conversation_id("sp");
    setpoints_[conv] = request_id;
    ctx.send(Performative::Request, *provider_, Protocol::DataFeed, conv,
             Json{{"op", "setpoint"},
                  {"service", service_},
                  {"var", msg.payload.value("var", "")},
                  {"value", msg.payload.value("value", 0.0)}});
  }
}

void OperatorAgent::close(AgentContext& ctx, const std::string& reason) {
  const bool owes = owes_tfja();
  if (provider_ && is_open()) {
    ctx.send(Performative::Request, *provider_, Protocol::DataFeed, feed_conv_,
             Json{{"op", "unsubscribe"}, {"service", service_}});
  }
  fsm_.fire("close");
  if (owes) {
    ctx.send(Performative::Request, ls_ra_of(ctx), Protocol::Trigger, trja_conv_,
             Json{{"op", "tfja"}, {"service", service_}, {"ra", ctx.self().str()}});
  }
  for (const auto& [conv, request_id] : setpoints_) {
    to_console(ctx, Performative::Inform,
               Json{{"op", "verdict"}, {"request_id", request_id}, {"accepted", false}, {"reason", "SessionClosed"}});
  }
  setpoints_.clear();
  to_console(ctx, Performative::Inform, Json{{"op", "session"}, {"state", "closed"}, {"reason", reason}});
  ctx.node().destroy_agent(ctx.self());
}

}  // namespace orgscada
