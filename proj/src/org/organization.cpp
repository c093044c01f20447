#include "orgscada/org/organization.hpp"

#include <cstdio>

#include "orgscada/org/supervisors.hpp"

namespace orgscada {

Organization::Organization(OrganizationConfig config, Scheduler& scheduler)
    : config_(std::move(config)), scheduler_(scheduler) {
  validate(config_);
  for (const auto& p : config_.plcs) {
    plant_[p.plc_name] = std::make_unique<plantsim::Plc>(p, config_.seed, config_.agent_defaults.poll_period,
                                                         scheduler_.now());
  }
  node_ = std::make_unique<Node>(config_.org_name, scheduler_);
  node_->set_factory([this](const AgentSpec& spec) { return make_agent(spec); });
  node_->register_endpoint(std::string(kConsoleEndpoint),
                           [this](const MessageEnvelope& env) { on_console(env); });
  node_->register_endpoint("finder", [this](const MessageEnvelope& env) { on_finder(env); });
}

Organization::~Organization() {
  *alive_ = false;
  node_.reset();
}

std::unique_ptr<Agent> Organization::make_agent(const AgentSpec& spec) {
  switch (spec.role) {
    case AgentRole::GlobalSupervisor:
      if (spec.local_name != kGlobalSupervisorName) return nullptr;
      return std::make_unique<GlobalSupervisor>(*this);
    case AgentRole::LocalSupervisor: {
      const std::string managed = spec.config_payload.value("managed", "");
      if (managed == to_string(AgentRole::ControlAgent)) {
        return std::make_unique<LocalSupervisor>(*this, AgentRole::ControlAgent);
      }
      if (managed == to_string(AgentRole::RemoteOperatorAgent)) {
        return std::make_unique<LocalSupervisor>(*this, AgentRole::RemoteOperatorAgent);
      }
      return nullptr;
    }
    case AgentRole::ControlAgent:
      return std::make_unique<ControlAgent>(spec, [this](const std::string& name) { return plc(name); });
    case AgentRole::RemoteOperatorAgent:
      return std::make_unique<OperatorAgent>(spec);
  }
  return nullptr;
}

void Organization::boot() {
  node_->create_agent(AgentSpec{std::string(kGlobalSupervisorName), AgentRole::GlobalSupervisor, {}});
  schedule_tick();
}

void Organization::schedule_tick() {
  const Duration poll = config_.agent_defaults.poll_period;
  std::weak_ptr<bool> alive = alive_;
  scheduler_.post_after(poll, [this, alive, poll] {
    if (alive.expired()) return;
    if (!plant_paused_) {
      for (auto& [name, plc] : plant_) {
        plc->tick(scheduler_.now(), poll);
        if (control_hook_) control_hook_(*plc, scheduler_.now());
      }
    }
    schedule_tick();
  });
}

plantsim::Plc* Organization::plc(const std::string& name) {
  const auto it = plant_.find(name);
  return it == plant_.end() ? nullptr : it->second.get();
}

std::vector<std::string> Organization::plc_names() const {
  // Config order, which is also the PLC index order in generated configs.
  std::vector<std::string> out;
  for (const auto& p : config_.plcs) out.push_back(p.plc_name);
  return out;
}

AgentId Organization::launch_operator(const std::string& service, std::vector<std::string> vars) {
  const int index = static_cast<int>(++launches_);
  Json cfg{{"service", service}, {"launch_index", index}};
  if (!vars.empty()) cfg["vars"] = vars;
  std::string name;
  do {
    name = "R" + std::to_string(next_ra_++);
  } while (node_->find_agent(name));
  launch_index_of_[name + "@" + config_.org_name] = index;
  return node_->create_agent(AgentSpec{name, AgentRole::RemoteOperatorAgent, std::move(cfg)});
}

bool Organization::session_exists(const AgentId& ra) const {
  return ra.org_name == config_.org_name && node_->agent_as<OperatorAgent>(ra.local_name) != nullptr;
}

void Organization::close_operator(const AgentId& ra) {
  if (!session_exists(ra)) return;
  MessageEnvelope env;
  env.performative = Performative::Request;
  env.sender = AgentId{std::string(kConsoleEndpoint), config_.org_name};
  env.receiver = ra;
  env.conversation_id = ra.str();
  env.protocol = Protocol::Admin;
  env.payload = Json{{"op", "close"}};
  node_->dispatch(std::move(env));
}

void Organization::setpoint(const AgentId& ra, const std::string& var, double value,
                            const std::string& request_id) {
  if (!session_exists(ra)) {
    std::weak_ptr<bool> alive = alive_;
    scheduler_.post([this, alive, ra, request_id] {
      if (alive.expired()) return;
      const SessionEvent ev{scheduler_.now(), ra, "verdict",
                            Json{{"op", "verdict"}, {"request_id", request_id}, {"accepted", false},
                                 {"reason", std::string(to_string(ErrorCode::SessionClosed))},
                                 {"ra", ra.str()}}};
      const auto listeners = listeners_;
      for (const auto& [id, l] : listeners) l(ev);
    });
    return;
  }
  MessageEnvelope env;
  env.performative = Performative::Request;
  env.sender = AgentId{std::string(kConsoleEndpoint), config_.org_name};
  env.receiver = ra;
  env.conversation_id = ra.str();
  env.protocol = Protocol::Admin;
  env.payload = Json{{"op", "setpoint"}, {"var", var}, {"value", value}, {"request_id", request_id}};
  node_->dispatch(std::move(env));
}

int Organization::add_listener(SessionListener listener) {
  const int id = next_listener_++;
  listeners_[id] = std::move(listener);
  return id;
}

void Organization::remove_listener(int id) { listeners_.erase(id); }

void Organization::on_console(const MessageEnvelope& env) {
  if (env.performative == Performative::Failure && !env.payload.contains("ra")) return;  // bounce
  const std::string op = env.payload.value("op", "");
  AgentId ra = env.sender;
  if (env.payload.contains("ra")) ra = AgentId::parse(env.payload["ra"].get<std::string>());
  const std::string key = ra.str();

  if (op == "session") {
    const std::string state = env.payload.value("state", "");
    if (state == "opened" && env.payload.contains("latency")) {
      record_of_ra_[key] = records_.size();
      records_.push_back(latency_record_from_json(env.payload["latency"]));
    } else if (state == "failed") {
      failures_.push_back(OpenFailure{key, env.payload.value("service", ""), env.payload.value("reason", ""),
                                      launch_index_of_.contains(key) ? launch_index_of_[key] : 0});
    }
  } else if (op == "first-value") {
    if (const auto it = record_of_ra_.find(key); it != record_of_ra_.end()) {
      records_[it->second].t_first_value = Duration{env.payload.value("t_first_value_ms", std::int64_t{0})};
    }
  }
  const SessionEvent ev{scheduler_.now(), ra, op, env.payload};
  // Listeners may remove themselves while being called.
  const auto listeners = listeners_;
  for (const auto& [id, l] : listeners) l(ev);
}

std::size_t Organization::operator_count() const {
  return node_->agents_with_role(AgentRole::RemoteOperatorAgent).size();
}

std::size_t Organization::control_agent_count() const {
  return node_->agents_with_role(AgentRole::ControlAgent).size();
}

double Organization::load() const {
  const std::size_t cas = control_agent_count();
  return static_cast<double>(operator_count()) / static_cast<double>(cas == 0 ? 1 : cas);
}

Json Organization::services_json() const {
  Json out = Json::array();
  for (const auto& d : node_->df().entries()) out.push_back(to_json(d));
  return out;
}

void Organization::query_reachable(Duration timeout, std::function<void(Json)> done) {
  const std::string conv = node_->next_conversation_id("reach");
  ReachableQuery& q = queries_[conv];
  q.done = std::move(done);
  for (const auto& d : node_->df().entries()) {
    q.entries[{d.service_name, d.provider.str()}] = to_json(d);
  }
  for (const auto& a : config_.acquaintances) {
    q.waiting.insert(a.org_name);
    MessageEnvelope env;
    env.performative = Performative::Request;
    env.sender = AgentId{"finder", config_.org_name};
    env.receiver = AgentId{"df", a.org_name};
    env.conversation_id = conv;
    env.protocol = Protocol::Admin;
    env.payload = Json{{"op", "search"}, {"pattern", "*"}};
    node_->dispatch(std::move(env));
  }
  std::weak_ptr<bool> alive = alive_;
  scheduler_.post_after(timeout, [this, alive, conv] {
    if (!alive.expired()) finish_query(conv);
  });
  if (q.waiting.empty()) finish_query(conv);
}

void Organization::on_finder(const MessageEnvelope& env) {
  const auto it = queries_.find(env.conversation_id);
  if (it == queries_.end()) return;
  ReachableQuery& q = it->second;
  // Answers and bounces both carry the peer's df as sender.
  const std::string peer = env.sender.org_name;
  if (env.performative == Performative::Inform) {
    for (const auto& e : env.payload.value("entries", Json::array())) {
      q.entries.try_emplace({e.value("service_name", ""), e.value("provider", "")}, e);
    }
  }
  q.waiting.erase(peer);
  if (q.waiting.empty()) finish_query(env.conversation_id);
}

void Organization::finish_query(const std::string& conv) {
  const auto it = queries_.find(conv);
  if (it == queries_.end()) return;
  ReachableQuery q = std::move(it->second);
  queries_.erase(it);
  Json out = Json::array();
  for (auto& [key, e] : q.entries) out.push_back(std::move(e));
  q.done(std::move(out));
}

Json Organization::topology() const {
  Json orgs = Json::array({config_.org_name});
  for (const auto& a : config_.acquaintances) orgs.push_back(a.org_name);
  Json links = Json::array();
  for (const auto& [peer, link] : state_.links) {
    std::set<std::string> shared(link.shared_in.begin(), link.shared_in.end());
    shared.insert(link.shared_out.begin(), link.shared_out.end());
    links.push_back(Json{{"a", std::min(config_.org_name, peer)},
                         {"b", std::max(config_.org_name, peer)},
                         {"shared", shared},
                         {"shared_in", link.shared_in},
                         {"shared_out", link.shared_out}});
  }
  return Json{{"org", config_.org_name},
              {"orgs", orgs},
              {"links", links},
              {"generated_at_ms", scheduler_.now().count()}};
}

std::string Organization::state_hash() const {
  Json links = Json::array();
  for (const auto& [peer, link] : state_.links) links.push_back(to_json(link));
  Json agents = Json::array();
  for (const auto& id : node_->agents()) agents.push_back(id.str());
  const Json doc{{"df", services_json()},
                 {"links", links},
                 {"refs", state_.share_refs},
                 {"agents", agents},
                 {"events", state_.events.size()},
                 {"subscriptions", node_->df().subscription_count()}};
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(plantsim::fnv1a(doc.dump())));
  return buf;
}

}  // namespace orgscada
