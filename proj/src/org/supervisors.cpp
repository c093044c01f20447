#include "orgscada/org/supervisors.hpp"

#include <algorithm>

#include "orgscada/org/organization.hpp"

namespace orgscada {

namespace {

constexpr std::string_view kReawardSuffix = "/reaward";

AgentId gs_at(const std::string& org) { return AgentId{std::string(kGlobalSupervisorName), org}; }

std::string base_conversation(const std::string& conv) {
  if (conv.size() > kReawardSuffix.size() && conv.ends_with(kReawardSuffix)) {
    return conv.substr(0, conv.size() - kReawardSuffix.size());
  }
  return conv;
}

std::string unreachable_reason(const std::string& reason) {
  if (reason == "Unroutable" || reason == "DeadLetter") return std::string(to_string(ErrorCode::PeerUnreachable));
  return reason;
}

}  // namespace

// ------------------------------------------------------------ GlobalSupervisor

void GlobalSupervisor::on_start(AgentContext& ctx) {
  Node& node = ctx.node();
  node.create_agent(AgentSpec{std::string(kCaSupervisorName), AgentRole::LocalSupervisor,
                              Json{{"managed", std::string(to_string(AgentRole::ControlAgent))}}});
  node.create_agent(AgentSpec{std::string(kRaSupervisorName), AgentRole::LocalSupervisor,
                              Json{{"managed", std::string(to_string(AgentRole::RemoteOperatorAgent))}}});
  df_subscription_ = node.df_subscribe("*", ctx.self());
  ctx.after(org_.config().agent_defaults.adaptation_period, [this](AgentContext& c) { periodic(c); });
}

void GlobalSupervisor::periodic(AgentContext& ctx) {
  adaptation_step(ctx);
  ctx.after(org_.config().agent_defaults.adaptation_period, [this](AgentContext& c) { periodic(c); });
}

void GlobalSupervisor::on_message(AgentContext& ctx, const MessageEnvelope& msg) {
  switch (msg.protocol) {
    case Protocol::Trigger:
      on_trigger(ctx, msg);
      break;
    case Protocol::ContractNet:
      on_contract_net(ctx, msg);
      break;
    case Protocol::ShareExtension:
      on_share_extension(ctx, msg);
      break;
    case Protocol::Admin:
      if (msg.sender.local_name == kDirectoryEndpoint && msg.performative == Performative::Notify) {
        on_directory(ctx, msg);
      } else {
        on_admin(ctx, msg);
      }
      break;
    case Protocol::DataFeed:
      break;
  }
}

GlobalSupervisor::Resolution* GlobalSupervisor::resolution_by_conversation(const std::string& conv) {
  for (auto& [service, r] : pending_) {
    if (r.conversation_id == conv) return &r;
  }
  return nullptr;
}

// Triggers -------------------------------------------------------------------

void GlobalSupervisor::on_trigger(AgentContext& ctx, const MessageEnvelope& msg) {
  if (msg.performative != Performative::Request) return;
  const std::string op = msg.payload.value("op", "");
  if (op == "trja") {
    on_trja(ctx, msg);
  } else if (op == "tfja") {
    on_tfja(ctx, msg);
  }
}

void GlobalSupervisor::on_trja(AgentContext& ctx, const MessageEnvelope& msg) {
  OrgState& st = org_.state();
  const std::string service = msg.payload.value("service", "");
  const std::string mode = msg.payload.value("mode", "resolve");
  const AgentId ra = AgentId::parse(msg.payload.value("ra", ""));
  const std::string& conv = msg.conversation_id;
  const std::string self_org = ctx.self().org_name;
  st.log(ctx.now(), EventKind::TriggerReceived,
         Json{{"trigger", "TRJA"}, {"mode", mode}, {"service", service}, {"conversation_id", conv},
              {"ra", ra.str()}});

  auto tell_path = [&](PathClass c) {
    ctx.send(Performative::Inform, ra, Protocol::Trigger, conv,
             Json{{"op", "path"}, {"class", std::string(to_string(c))}, {"service", service}});
  };
  auto refuse = [&](ErrorCode code) {
    ctx.send(Performative::Failure, ra, Protocol::Trigger, conv,
             Json{{"op", "resolve-failed"}, {"reason", std::string(to_string(code))}, {"service", service}});
  };

  if (mode == "join") {
    ++st.share_refs[service];
    return;
  }

  // The entry may have arrived between the operator's search and now.
  const auto hits = ctx.node().df_search(service);
  if (!hits.empty()) {
    const bool local = std::any_of(hits.begin(), hits.end(), [&](const ServiceDescriptor& d) {
      return d.provider.org_name == self_org;
    });
    if (!local) ++st.share_refs[service];
    tell_path(local ? PathClass::Local : PathClass::SharedAlready);
    return;
  }
  if (auto it = pending_.find(service); it != pending_.end()) {
    // Concurrent requests for one service share one resolution.
    it->second.waiters.push_back(Waiter{ra, conv});
    tell_path(it->second.path);
    return;
  }
  const auto name = parse_service_name(service);
  if (!name) return refuse(ErrorCode::ServiceUnknownEverywhere);
  const std::string owner = name->owner_org();
  if (owner == self_org) {
    // Our own PLC whose agent is being recreated: the operator's DF
    // subscription fires once it is back.
    if (org_.plc(service)) return tell_path(PathClass::Local);
    return refuse(ErrorCode::ServiceUnknownEverywhere);
  }

  Resolution r;
  r.conversation_id = conv;
  r.service = service;
  r.waiters.push_back(Waiter{ra, conv});
  r.started = ctx.now();
  const auto link = st.links.find(owner);
  if (link != st.links.end() && link->second.inbound) {
    r.path = PathClass::ExtendOverlap;
    r.target_org = owner;
  } else {
    r.path = PathClass::NewOverlap;
  }
  Resolution& stored = pending_[service] = std::move(r);
  tell_path(stored.path);
  if (stored.path == PathClass::ExtendOverlap) {
    start_extension(ctx, stored);
  } else {
    start_contract_net(ctx, stored);
  }
}

void GlobalSupervisor::on_tfja(AgentContext& ctx, const MessageEnvelope& msg) {
  OrgState& st = org_.state();
  const std::string service = msg.payload.value("service", "");
  const std::string ra = msg.payload.value("ra", "");
  st.log(ctx.now(), EventKind::TriggerReceived,
         Json{{"trigger", "TFJA"}, {"service", service}, {"conversation_id", msg.conversation_id},
              {"ra", ra}});

  if (auto it = pending_.find(service); it != pending_.end()) {
    auto& waiters = it->second.waiters;
    const auto w = std::find_if(waiters.begin(), waiters.end(),
                                [&](const Waiter& x) { return x.ra.str() == ra; });
    if (w != waiters.end()) {
      waiters.erase(w);
      return;
    }
  }
  const auto name = parse_service_name(service);
  if (name && name->owner_org() == ctx.self().org_name) return;
  const auto ref = st.share_refs.find(service);
  if (ref == st.share_refs.end() || ref->second <= 0) {
    st.anomalies.push_back("unmatched TFJA for " + service + " (" + msg.conversation_id + ")");
    return;
  }
  if (--ref->second == 0) release_share(ctx, service, "tfja");
}

// Resolution paths -----------------------------------------------------------

void GlobalSupervisor::start_extension(AgentContext& ctx, Resolution& r) {
  ctx.send(Performative::Request, gs_at(r.target_org), Protocol::ShareExtension, r.conversation_id,
           Json{{"op", "share"}, {"service", r.service}, {"requester_org", ctx.self().org_name}});
  const std::string service = r.service;
  const std::string conv = r.conversation_id;
  ctx.after(2 * org_.config().agent_defaults.cfp_deadline, [this, service, conv](AgentContext& c) {
    const auto it = pending_.find(service);
    if (it != pending_.end() && it->second.conversation_id == conv) {
      fail_resolution(c, service, std::string(to_string(ErrorCode::Timeout)));
    }
  });
}

void GlobalSupervisor::start_contract_net(AgentContext& ctx, Resolution& r) {
  std::set<std::string> responders;
  for (const auto& a : org_.config().acquaintances) responders.insert(a.org_name);
  if (responders.empty()) {
    fail_resolution(ctx, r.service, std::string(to_string(ErrorCode::ServiceUnknownEverywhere)));
    return;
  }
  const Duration deadline = org_.config().agent_defaults.cfp_deadline;
  const std::string conv = r.conversation_id;
  cnp_.emplace(conv, ContractNet(conv, r.service, responders, ctx.now() + deadline));
  for (const auto& org : responders) {
    ctx.send(Performative::Cfp, gs_at(org), Protocol::ContractNet, conv,
             Json{{"op", "cfp"}, {"service", r.service}});
  }
  ctx.after(deadline, [this, conv](AgentContext& c) {
    const auto it = cnp_.find(conv);
    if (it != cnp_.end() && it->second.phase() == ContractNet::Phase::CfpSent) award(c, conv);
  });
}

void GlobalSupervisor::award(AgentContext& ctx, const std::string& conv) {
  auto it = cnp_.find(conv);
  if (it == cnp_.end()) return;
  ContractNet& cn = it->second;
  const std::string service = cn.service();
  const auto a = cn.award();
  if (!a) {
    cnp_.erase(it);
    fail_resolution(ctx, service, std::string(to_string(ErrorCode::ServiceUnknownEverywhere)));
    return;
  }
  ctx.send(Performative::AcceptProposal, gs_at(a->winner), Protocol::ContractNet, a->conversation_id,
           Json{{"op", "accept"}, {"service", service}, {"requester_org", ctx.self().org_name}});
  const int awards = cn.awards_made();
  ctx.after(org_.config().agent_defaults.cfp_deadline, [this, conv, awards](AgentContext& c) {
    const auto cur = cnp_.find(conv);
    if (cur != cnp_.end() && cur->second.phase() == ContractNet::Phase::Awarding &&
        cur->second.awards_made() == awards) {
      winner_failed(c, conv);
    }
  });
}

void GlobalSupervisor::winner_failed(AgentContext& ctx, const std::string& conv) {
  auto it = cnp_.find(conv);
  if (it == cnp_.end()) return;
  ContractNet& cn = it->second;
  const std::string service = cn.service();
  if (const auto a = cn.winner_failed()) {
    ctx.send(Performative::AcceptProposal, gs_at(a->winner), Protocol::ContractNet, a->conversation_id,
             Json{{"op", "accept"}, {"service", service}, {"requester_org", ctx.self().org_name}});
    const int awards = cn.awards_made();
    ctx.after(org_.config().agent_defaults.cfp_deadline, [this, conv, awards](AgentContext& c) {
      const auto cur = cnp_.find(conv);
      if (cur != cnp_.end() && cur->second.phase() == ContractNet::Phase::Awarding &&
          cur->second.awards_made() == awards) {
        winner_failed(c, conv);
      }
    });
    return;
  }
  for (const auto& org : cn.abort()) {
    ctx.send(Performative::RejectProposal, gs_at(org), Protocol::ContractNet, conv,
             Json{{"op", "reject"}, {"service", service}});
  }
  cnp_.erase(it);
  fail_resolution(ctx, service, std::string(to_string(ErrorCode::PeerUnreachable)));
}

void GlobalSupervisor::complete(AgentContext& ctx, const std::string& service, const AgentId& provider) {
  const auto it = pending_.find(service);
  if (it == pending_.end()) return;
  Resolution r = std::move(it->second);
  pending_.erase(it);
  OrgState& st = org_.state();

  if (const auto c = cnp_.find(r.conversation_id); c != cnp_.end()) {
    for (const auto& org : c->second.complete()) {
      ctx.send(Performative::RejectProposal, gs_at(org), Protocol::ContractNet, r.conversation_id,
               Json{{"op", "reject"}, {"service", service}});
    }
    cnp_.erase(c);
  }
  st.share_refs[service] += static_cast<int>(r.waiters.size());
  Json waiters = Json::array();
  for (const auto& w : r.waiters) waiters.push_back(w.ra.str());
  st.log(ctx.now(),
         r.path == PathClass::NewOverlap ? EventKind::OverlapEstablished : EventKind::ShareExtended,
         Json{{"service", service},
              {"peer", provider.org_name},
              {"role", "requester"},
              {"path", std::string(to_string(r.path))},
              {"conversation_id", r.conversation_id},
              {"waiters", std::move(waiters)},
              {"elapsed_ms", (ctx.now() - r.started).count()}});
}

void GlobalSupervisor::fail_resolution(AgentContext& ctx, const std::string& service,
                                       const std::string& reason) {
  const auto it = pending_.find(service);
  if (it == pending_.end()) return;
  Resolution r = std::move(it->second);
  pending_.erase(it);
  if (const auto c = cnp_.find(r.conversation_id); c != cnp_.end()) {
    for (const auto& org : c->second.abort()) {
      ctx.send(Performative::RejectProposal, gs_at(org), Protocol::ContractNet, r.conversation_id,
               Json{{"op", "reject"}, {"service", service}});
    }
    cnp_.erase(c);
  }
  org_.state().log(ctx.now(), EventKind::CnpFailed,
                   Json{{"service", service},
                        {"path", std::string(to_string(r.path))},
                        {"conversation_id", r.conversation_id},
                        {"reason", reason}});
  for (const auto& w : r.waiters) {
    ctx.send(Performative::Failure, w.ra, Protocol::Trigger, w.conversation_id,
             Json{{"op", "resolve-failed"}, {"reason", reason}, {"service", service}});
  }
}

// Contract Net ---------------------------------------------------------------

void GlobalSupervisor::on_contract_net(AgentContext& ctx, const MessageEnvelope& msg) {
  const std::string base = base_conversation(msg.conversation_id);
  const std::string service = msg.payload.value("service", "");
  const std::string peer = msg.sender.org_name;
  const auto mine = cnp_.find(base);

  switch (msg.performative) {
    case Performative::Cfp: {
      // Only an organization that provides the service itself can bid.
      const auto hits = ctx.node().df_search(service);
      const bool provides = std::any_of(hits.begin(), hits.end(), [&](const ServiceDescriptor& d) {
        return d.provider.org_name == ctx.self().org_name;
      });
      if (provides) {
        ctx.reply(msg, Performative::Propose,
                  Json{{"op", "propose"}, {"service", service}, {"load", org_.load()}});
      } else {
        ctx.reply(msg, Performative::RejectProposal,
                  Json{{"op", "refuse"}, {"service", service}, {"reason", "no-service"}});
      }
      return;
    }
    case Performative::Propose:
      if (mine == cnp_.end()) return;
      mine->second.on_propose(peer, msg.payload.value("load", 0.0));
      break;
    case Performative::RejectProposal:
      if (mine == cnp_.end()) return;  // a reject of our own bid
      mine->second.on_refuse(peer);
      break;
    case Performative::AcceptProposal:
      instruct_share(ctx, service, peer, msg.conversation_id, msg);
      return;
    case Performative::Failure: {
      if (mine == cnp_.end()) return;
      if (msg.payload.value("undelivered", "") == "CFP") {
        mine->second.on_refuse(peer);
        break;
      }
      if (mine->second.current_winner() == peer) winner_failed(ctx, base);
      return;
    }
    default:
      return;
  }
  const auto cur = cnp_.find(base);
  if (cur != cnp_.end() && cur->second.phase() == ContractNet::Phase::CfpSent && cur->second.all_replied()) {
    award(ctx, base);
  }
}

// Share extension and provider side -------------------------------------------

void GlobalSupervisor::instruct_share(AgentContext& ctx, const std::string& service,
                                      const std::string& requester_org, const std::string& conv,
                                      const MessageEnvelope& origin) {
  std::optional<AgentId> provider;
  for (const auto& d : ctx.node().df_search(service)) {
    if (d.provider.org_name == ctx.self().org_name) {
      provider = d.provider;
      break;
    }
  }
  if (!provider) {
    ctx.reply(origin, Performative::Failure,
              Json{{"op", origin.payload.value("op", "")}, {"reason", "NotFound"}, {"service", service}});
    return;
  }
  ctx.send(Performative::Request, *provider, Protocol::Admin, conv,
           Json{{"op", "share"}, {"service", service}, {"org", requester_org}});
}

void GlobalSupervisor::on_share_extension(AgentContext& ctx, const MessageEnvelope& msg) {
  const std::string op = msg.payload.value("op", "");
  const std::string service = msg.payload.value("service", "");
  OrgState& st = org_.state();
  if (msg.performative == Performative::Request && op == "share") {
    instruct_share(ctx, service, msg.payload.value("requester_org", msg.sender.org_name),
                   msg.conversation_id, msg);
  } else if (msg.performative == Performative::Failure) {
    if (Resolution* r = resolution_by_conversation(msg.conversation_id)) {
      fail_resolution(ctx, r->service, unreachable_reason(msg.payload.value("reason", "")));
    }
  } else if (msg.performative == Performative::Inform && op == "released") {
    const std::string peer = msg.sender.org_name;
    const auto link = st.links.find(peer);
    if (link != st.links.end()) {
      link->second.shared_out.erase(service);
      link->second.last_activity = ctx.now();
      if (link->second.empty() && !link->second.idle_since) link->second.idle_since = ctx.now();
    }
    for (const auto& d : ctx.node().df_search(service)) {
      if (d.provider.org_name == ctx.self().org_name) {
        ctx.node().forget_remote_registration(d.provider.local_name, RemoteRegistration{peer, service});
      }
    }
    st.log(ctx.now(), EventKind::ShareReleased,
           Json{{"service", service}, {"peer", peer}, {"role", "provider"}, {"reason", "released"}});
  }
}

void GlobalSupervisor::on_admin(AgentContext& ctx, const MessageEnvelope& msg) {
  const std::string op = msg.payload.value("op", "");
  OrgState& st = org_.state();
  if (msg.performative != Performative::Inform) return;
  if (op == "shared") {
    const std::string peer = msg.payload.value("org", "");
    const std::string service = msg.payload.value("service", "");
    OverlapLink& link = st.link(peer, ctx.now());
    const bool fresh = link.shared_out.insert(service).second;
    link.last_activity = ctx.now();
    link.idle_since.reset();
    if (fresh) {
      st.log(ctx.now(), EventKind::ShareExtended,
             Json{{"service", service}, {"peer", peer}, {"role", "provider"},
                  {"conversation_id", msg.conversation_id}});
    }
  } else if (op == "share-failed") {
    st.anomalies.push_back("share of " + msg.payload.value("service", "") + " to " +
                           msg.payload.value("org", "") + " failed: " + msg.payload.value("reason", ""));
  } else if (op == "recreated") {
    st.log(ctx.now(), EventKind::AgentRecreated,
           Json{{"agent", msg.payload.value("agent", "")},
                {"remote_registrations", msg.payload.value("remote_registrations", 0)}});
  } else if (op == "quarantined") {
    st.quarantined.insert(msg.payload.value("agent", ""));
    st.anomalies.push_back("quarantined " + msg.payload.value("agent", ""));
  }
}

void GlobalSupervisor::on_directory(AgentContext& ctx, const MessageEnvelope& msg) {
  const ServiceDescriptor d = descriptor_from_json(msg.payload.at("descriptor"));
  const std::string peer = d.provider.org_name;
  if (peer == ctx.self().org_name) return;
  OrgState& st = org_.state();
  const std::string event = msg.payload.value("event", "");
  if (event == "registered") {
    if (!ctx.node().df().contains(d.service_name, d.provider)) return;  // already gone again
    OverlapLink& link = st.link(peer, ctx.now());
    link.shared_in.insert(d.service_name);
    link.inbound = true;
    link.last_activity = ctx.now();
    link.idle_since.reset();
    complete(ctx, d.service_name, d.provider);
  } else if (event == "deregistered") {
    const auto link = st.links.find(peer);
    if (link == st.links.end()) return;
    const auto hits = ctx.node().df_search(d.service_name);
    const bool still = std::any_of(hits.begin(), hits.end(), [&](const ServiceDescriptor& x) {
      return x.provider.org_name == peer;
    });
    if (!still) link->second.shared_in.erase(d.service_name);
    if (link->second.empty() && !link->second.idle_since) link->second.idle_since = ctx.now();
  }
}

void GlobalSupervisor::release_share(AgentContext& ctx, const std::string& service,
                                     const std::string& reason) {
  OrgState& st = org_.state();
  st.share_refs.erase(service);
  for (const auto& d : ctx.node().df_search(service)) {
    const std::string peer = d.provider.org_name;
    if (peer == ctx.self().org_name) continue;
    ctx.node().df_deregister(service, d.provider);
    if (auto link = st.links.find(peer); link != st.links.end()) {
      link->second.shared_in.erase(service);
      link->second.last_activity = ctx.now();
      if (link->second.empty()) link->second.idle_since = ctx.now();
    }
    ctx.send(Performative::Inform, gs_at(peer), Protocol::ShareExtension,
             ctx.node().next_conversation_id("release"),
             Json{{"op", "released"}, {"service", service}, {"org", ctx.self().org_name}});
    st.log(ctx.now(), EventKind::ShareReleased,
           Json{{"service", service}, {"peer", peer}, {"role", "requester"}, {"reason", reason}});
  }
}

// Adaptation loop ------------------------------------------------------------

int GlobalSupervisor::adaptation_step(AgentContext& ctx) {
  OrgState& st = org_.state();
  Node& node = ctx.node();
  const std::string self_org = ctx.self().org_name;
  int actions = 0;

  // Monitor: the DF is the ground truth for what is shared in.
  std::map<std::string, std::set<std::string>> remote_entries;  // peer -> services
  for (const auto& d : node.df().entries()) {
    if (d.provider.org_name != self_org) remote_entries[d.provider.org_name].insert(d.service_name);
  }

  // Analyze + act: purge dangling shared_in entries.
  for (auto& [peer, link] : st.links) {
    std::vector<std::string> dangling;
    for (const auto& s : link.shared_in) {
      if (!remote_entries[peer].contains(s)) dangling.push_back(s);
    }
    for (const auto& s : dangling) {
      link.shared_in.erase(s);
      st.log(ctx.now(), EventKind::ShareReleased,
             Json{{"service", s}, {"peer", peer}, {"role", "requester"}, {"reason", "dangling"}});
      ++actions;
    }
  }
  // Restore missing shared_in entries; release shares nobody uses.
  for (const auto& [peer, services] : remote_entries) {
    for (const auto& s : services) {
      OverlapLink& link = st.link(peer, ctx.now());
      if (link.shared_in.insert(s).second) {
        link.inbound = true;
        link.idle_since.reset();
        st.log(ctx.now(), EventKind::ShareExtended,
               Json{{"service", s}, {"peer", peer}, {"role", "requester"}, {"reason", "restored"}});
        ++actions;
      }
      const auto ref = st.share_refs.find(s);
      if ((ref == st.share_refs.end() || ref->second <= 0) && !pending_.contains(s)) {
        release_share(ctx, s, "unused");
        ++actions;
      }
    }
  }
  // Expire idle links.
  const Duration grace = org_.config().agent_defaults.idle_grace;
  for (auto it = st.links.begin(); it != st.links.end();) {
    OverlapLink& link = it->second;
    if (!link.empty()) {
      link.idle_since.reset();
      ++it;
      continue;
    }
    if (!link.idle_since) link.idle_since = ctx.now();
    if (ctx.now() - *link.idle_since >= grace) {
      st.log(ctx.now(), EventKind::ShareReleased,
             Json{{"peer", it->first}, {"role", "link"}, {"reason", "idle"}});
      it = st.links.erase(it);
      ++actions;
    } else {
      ++it;
    }
  }
  return actions;
}

// ------------------------------------------------------------- LocalSupervisor

void LocalSupervisor::on_start(AgentContext& ctx) {
  if (managed_ == AgentRole::ControlAgent) {
    const std::size_t plcs = org_.plc_names().size();
    const std::size_t n = org_.config().agent_defaults.ca_count;
    create_control_agents(ctx, n == 0 || n >= plcs ? 0 : n);
  }
  ctx.after(org_.config().agent_defaults.heartbeat_period, [this](AgentContext& c) { heartbeat(c); });
}

void LocalSupervisor::create_control_agents(AgentContext& ctx, std::size_t agent_count) {
  const auto plcs = org_.plc_names();
  std::vector<std::pair<std::string, std::vector<std::string>>> plan;
  if (agent_count == 0) {
    for (const auto& p : plcs) {
      plan.emplace_back("C" + std::to_string(parse_service_name(p)->plc_index), std::vector<std::string>{p});
    }
  } else {
    const auto groups = balance_assignment(plcs, agent_count);
    for (std::size_t k = 0; k < groups.size(); ++k) plan.emplace_back("CG" + std::to_string(k + 1), groups[k]);
  }
  for (auto& [name, group] : plan) {
    ctx.node().create_agent(AgentSpec{name, AgentRole::ControlAgent, Json{{"plcs", group}}});
    assignment_[name] = group;
    health_[name] = Health{};
  }
}

void LocalSupervisor::on_message(AgentContext& ctx, const MessageEnvelope& msg) {
  const std::string op = msg.payload.value("op", "");
  if (msg.protocol == Protocol::Admin && msg.performative == Performative::Inform && op == "pong") {
    if (auto h = health_.find(msg.sender.local_name); h != health_.end()) {
      h->second.awaiting = false;
      h->second.misses = 0;
    }
    return;
  }
  if (msg.protocol == Protocol::Trigger && msg.performative == Performative::Request &&
      managed_ == AgentRole::RemoteOperatorAgent) {
    // Dynamic agents never talk to the static part directly.
    Json payload = msg.payload;
    payload["relayed_by"] = ctx.self().str();
    ctx.send(Performative::Request, AgentId{std::string(kGlobalSupervisorName), ctx.self().org_name},
             Protocol::Trigger, msg.conversation_id, std::move(payload));
  }
}

void LocalSupervisor::heartbeat(AgentContext& ctx) {
  for (const auto& id : ctx.node().agents_with_role(managed_)) {
    Health& h = health_[id.local_name];
    h.awaiting = true;
    ctx.send(Performative::Request, id, Protocol::Admin, "hb-" + id.local_name, Json{{"op", "ping"}});
  }
  const Duration period = org_.config().agent_defaults.heartbeat_period;
  ctx.after(period / 2, [this](AgentContext& c) { evaluate(c); });
  ctx.after(period, [this](AgentContext& c) { heartbeat(c); });
}

void LocalSupervisor::evaluate(AgentContext& ctx) {
  const int limit = org_.config().agent_defaults.heartbeat_miss_limit;
  std::vector<AgentId> dead;
  for (auto it = health_.begin(); it != health_.end();) {
    const AgentId id{it->first, ctx.self().org_name};
    if (!ctx.node().is_live(id)) {
      // Gone from the AMS: operators are not brought back, control agents are.
      if (managed_ == AgentRole::RemoteOperatorAgent || !assignment_.contains(it->first)) {
        it = health_.erase(it);
        continue;
      }
      if (++it->second.misses >= limit) dead.push_back(id);
      ++it;
      continue;
    }
    if (it->second.awaiting && ++it->second.misses >= limit) dead.push_back(id);
    ++it;
  }
  for (const auto& id : dead) {
    if (managed_ == AgentRole::ControlAgent) {
      recreate(ctx, id);
    } else {
      retire_operator(ctx, id);
    }
  }
}

void LocalSupervisor::recreate(AgentContext& ctx, const AgentId& id) {
  const Duration period = org_.config().agent_defaults.heartbeat_period;
  Health& h = health_[id.local_name];
  std::erase_if(h.recreated_at, [&](Time t) { return ctx.now() - t > 10 * period; });
  if (h.recreated_at.size() >= 3) {
    quarantine(ctx, id);
    return;
  }
  AgentSpec spec{id.local_name, AgentRole::ControlAgent, Json{{"plcs", assignment_[id.local_name]}}};
  std::vector<RemoteRegistration> remote;
  if (ctx.node().is_live(id)) {
    spec = ctx.node().spec_of(id);
    remote = ctx.node().destroy_agent(id);
  }
  Json restore = Json::array();
  for (const auto& r : remote) restore.push_back(Json{{"org", r.org}, {"service", r.service}});
  spec.config_payload["restore_remote"] = restore;
  ctx.node().create_agent(spec);
  h.recreated_at.push_back(ctx.now());
  h.awaiting = false;
  h.misses = 0;
  ++recreations_total_;
  ctx.send(Performative::Inform, AgentId{std::string(kGlobalSupervisorName), ctx.self().org_name},
           Protocol::Admin, "ls-" + id.local_name,
           Json{{"op", "recreated"}, {"agent", id.str()}, {"remote_registrations", remote.size()}});
}

void LocalSupervisor::quarantine(AgentContext& ctx, const AgentId& id) {
  Node& node = ctx.node();
  std::vector<RemoteRegistration> remote;
  if (node.is_live(id)) remote = node.destroy_agent(id);
  health_.erase(id.local_name);
  assignment_.erase(id.local_name);
  ctx.send(Performative::Inform, AgentId{std::string(kGlobalSupervisorName), ctx.self().org_name},
           Protocol::Admin, "ls-" + id.local_name, Json{{"op", "quarantined"}, {"agent", id.str()}});

  const bool multi = id.local_name.starts_with("CG");
  if (!multi || assignment_.empty()) return;
  // Spread the orphaned PLCs again over the remaining group agents.
  std::vector<std::string> plcs;
  std::set<RemoteRegistration> regs(remote.begin(), remote.end());
  std::size_t next_index = 1;
  for (const auto& [name, group] : assignment_) {
    next_index = std::max<std::size_t>(next_index, std::stoul(name.substr(2)) + 1);
    for (const auto& r : node.destroy_agent(AgentId{name, ctx.self().org_name})) regs.insert(r);
    health_.erase(name);
  }
  for (const auto& p : org_.plc_names()) plcs.push_back(p);
  const std::size_t count = assignment_.size();
  assignment_.clear();
  const auto groups = balance_assignment(plcs, count);
  for (std::size_t k = 0; k < groups.size(); ++k) {
    const std::string name = "CG" + std::to_string(next_index + k);
    Json restore = Json::array();
    for (const auto& r : regs) {
      if (std::find(groups[k].begin(), groups[k].end(), r.service) != groups[k].end()) {
        restore.push_back(Json{{"org", r.org}, {"service", r.service}});
      }
    }
    node.create_agent(AgentSpec{name, AgentRole::ControlAgent, Json{{"plcs", groups[k]}, {"restore_remote", restore}}});
    assignment_[name] = groups[k];
    health_[name] = Health{};
  }
}

void LocalSupervisor::retire_operator(AgentContext& ctx, const AgentId& id) {
  auto* ra = ctx.node().agent_as<OperatorAgent>(id.local_name);
  const AgentId gs{std::string(kGlobalSupervisorName), ctx.self().org_name};
  if (ra && ra->owes_tfja()) {
    ctx.send(Performative::Request, gs, Protocol::Trigger, ra->trigger_conversation(),
             Json{{"op", "tfja"}, {"service", ra->service()}, {"ra", id.str()}, {"relayed_by", ctx.self().str()}});
  }
  ctx.send(Performative::Inform, AgentId{std::string(kConsoleEndpoint), ctx.self().org_name}, Protocol::Admin,
           id.str(),
           Json{{"op", "session"}, {"state", "closed"}, {"reason", "agent-died"}, {"ra", id.str()},
                {"service", ra ? ra->service() : std::string()}});
  ctx.node().destroy_agent(id);
  health_.erase(id.local_name);
}

}  // namespace orgscada
