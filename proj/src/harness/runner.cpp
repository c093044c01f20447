#include "orgscada/harness/runner.hpp"

#include <algorithm>

#include "orgscada/harness/oracle.hpp"

namespace orgscada {

namespace {

std::string base_of(const std::string& conv) {
  const std::string suffix = "/reaward";
  if (conv.size() > suffix.size() && conv.ends_with(suffix)) return conv.substr(0, conv.size() - suffix.size());
  return conv;
}

std::vector<LoggedEvent> merged_events(const World& world) {
  std::vector<LoggedEvent> out;
  for (const Organization* o : world.orgs()) {
    for (const auto& e : o->state().events) out.push_back(LoggedEvent{o->name(), e});
  }
  // Org order and log order are already the insertion order.
  std::stable_sort(out.begin(), out.end(),
                   [](const LoggedEvent& a, const LoggedEvent& b) { return a.event.at < b.event.at; });
  return out;
}

}  // namespace

Json events_to_json(const std::vector<LoggedEvent>& events) {
  Json out = Json::array();
  for (const auto& e : events) {
    Json j = to_json(e.event);
    j["org"] = e.org;
    out.push_back(std::move(j));
  }
  return out;
}

// ---------------------------------------------------------------- Contract Net

void ContractNetMonitor::observe(const MessageEnvelope& env) {
  if (env.protocol != Protocol::ContractNet) return;
  const std::string base = base_of(env.conversation_id);
  switch (env.performative) {
    case Performative::Propose:
      ++proposals_[{base, env.sender.org_name}];
      break;
    case Performative::AcceptProposal:
      ++accepts_[env.conversation_id];
      ++accepts_total_;
      ++answers_[{base, env.receiver.org_name}];
      break;
    case Performative::RejectProposal:
      // Refusals travel responder -> initiator; answers initiator -> responder.
      if (env.payload.value("op", "") == "reject") ++answers_[{base, env.receiver.org_name}];
      break;
    default:
      break;
  }
}

std::vector<std::string> ContractNetMonitor::violations(bool final) const {
  std::vector<std::string> out;
  for (const auto& [conv, n] : accepts_) {
    if (n > 1) out.push_back("conversation " + conv + " has " + std::to_string(n) + " ACCEPT_PROPOSAL");
  }
  for (const auto& [key, n] : answers_) {
    if (n > 1) out.push_back("proposal of " + key.second + " in " + key.first + " answered " + std::to_string(n) + " times");
    if (!proposals_.contains(key)) out.push_back(key.second + " answered in " + key.first + " without proposing");
  }
  if (final) {
    for (const auto& [key, n] : proposals_) {
      if (!answers_.contains(key)) out.push_back("proposal of " + key.second + " in " + key.first + " never answered");
    }
  }
  return out;
}

// ------------------------------------------------------------------ Invariants

std::vector<std::string> check_overlap_soundness(const World& world) {
  std::vector<std::string> out;
  for (const Organization* o : world.orgs()) {
    std::set<std::pair<std::string, std::string>> in_df;  // (peer, service)
    for (const auto& d : o->node().df().entries()) {
      if (d.provider.org_name != o->name()) in_df.insert({d.provider.org_name, d.service_name});
    }
    std::set<std::pair<std::string, std::string>> in_links;
    for (const auto& [peer, link] : o->state().links) {
      for (const auto& s : link.shared_in) in_links.insert({peer, s});
    }
    for (const auto& p : in_df) {
      if (!in_links.contains(p)) {
        out.push_back(o->name() + " DF holds " + p.second + " from " + p.first + " but shared_in lacks it");
      }
    }
    for (const auto& p : in_links) {
      if (!in_df.contains(p)) {
        out.push_back(o->name() + " shared_in lists " + p.second + " from " + p.first + " but the DF lacks it");
      }
    }
  }
  return out;
}

std::vector<std::string> check_session_accounting(const World& world) {
  std::vector<std::string> out;
  for (const Organization* o : world.orgs()) {
    std::map<std::string, int> open;
    for (const auto& id : o->node().agents_with_role(AgentRole::RemoteOperatorAgent)) {
      const auto* ra = o->node().agent_as<OperatorAgent>(id.local_name);
      if (ra && ra->is_open() && ra->owes_tfja()) ++open[ra->service()];
    }
    std::map<std::string, int> refs;
    for (const auto& [s, n] : o->state().share_refs) {
      if (n != 0) refs[s] = n;
    }
    if (refs != open) {
      for (const auto& [s, n] : refs) {
        if (open[s] != n) {
          out.push_back(o->name() + " " + s + ": TRJA-TFJA = " + std::to_string(n) + " but " +
                        std::to_string(open[s]) + " open cross-org sessions");
        }
      }
      for (const auto& [s, n] : open) {
        if (n != 0 && !refs.contains(s)) {
          out.push_back(o->name() + " " + s + ": " + std::to_string(n) + " open cross-org sessions, no refcount");
        }
      }
    }
  }
  return out;
}

std::vector<std::string> check_causation(const std::vector<LoggedEvent>& events) {
  std::vector<std::string> out;
  std::set<std::pair<std::string, std::string>> trja_seen;  // (org, conv)
  for (const auto& e : events) {
    const Json& d = e.event.detail;
    if (e.event.kind == EventKind::TriggerReceived && d.value("trigger", "") == "TRJA") {
      trja_seen.insert({e.org, d.value("conversation_id", "")});
    }
    if (e.event.kind == EventKind::OverlapEstablished) {
      const std::string conv = d.value("conversation_id", "");
      if (!trja_seen.contains({e.org, conv})) {
        out.push_back(e.org + " established an overlap for " + d.value("service", "") +
                      " without a prior TRJA " + conv);
      }
    }
  }
  return out;
}

std::vector<std::string> check_hop_oracle(const RunResult& result, const Scenario& scenario) {
  std::vector<std::string> out;
  if (!scenario.net.hop_latency.empty()) return out;
  const bool disturbed = std::any_of(scenario.script.begin(), scenario.script.end(), [](const ScriptAction& a) {
    return a.kind == ActionKind::Kill || a.kind == ActionKind::Pause;
  });
  if (disturbed) return out;
  const Duration hop = scenario.net.default_hop_latency;
  for (const auto& r : result.report.rows) {
    // A request that joined someone else's resolution finishes early.
    const auto leader = result.resolution_leader.find(r.ra);
    if (leader != result.resolution_leader.end() && leader->second != r.ra) continue;
    const Duration expected = hop_count_oracle(r.path_class) * hop;
    const auto diff = r.t_service - expected;
    if (diff > Duration{1} || diff < Duration{-1}) {
      out.push_back(r.ra + " " + r.service_name + " " + std::string(to_string(r.path_class)) + ": t_service " +
                    std::to_string(r.t_service.count()) + " ms, oracle " + std::to_string(expected.count()) + " ms");
    }
  }
  return out;
}

std::vector<std::string> check_monotone_learning(const LatencyReport& report) {
  std::vector<std::string> out;
  std::map<std::pair<std::string, std::string>, int> fresh;
  for (const auto& r : report.rows) {
    if (r.path_class != PathClass::NewOverlap) continue;
    const auto name = parse_service_name(r.service_name);
    const std::string owner = name ? name->owner_org() : "?";
    if (++fresh[{r.requester_org, owner}] == 2) {
      out.push_back("second NewOverlap " + r.requester_org + " -> " + owner + " (" + r.service_name + ")");
    }
  }
  return out;
}

// ------------------------------------------------------------------------ run

RunResult run(const Scenario& scenario) {
  validate(scenario);
  World world(scenario.orgs, scenario.net);
  ContractNetMonitor cnp;
  RunResult result;
  for (Organization* o : world.orgs()) {
    o->node().set_send_observer([&](const MessageEnvelope& env) {
      ++result.messages;
      cnp.observe(env);
    });
  }
  world.boot();

  std::set<std::string> violations;
  auto at_quiescence = [&] {
    ++result.quiescent_checks;
    for (auto& v : check_overlap_soundness(world)) violations.insert("overlap soundness: " + v);
    for (auto& v : check_session_accounting(world)) violations.insert("session accounting: " + v);
  };

  std::map<std::string, AgentId> sessions;  // "<org>/<label>" -> RA
  int setpoints = 0;
  for (const auto& a : scenario.script) {
    world.run_until(a.at, at_quiescence);
    Organization& org = world.org(a.org);
    const std::string key = a.org + "/" + a.session;
    switch (a.kind) {
      case ActionKind::Open:
        sessions[key] = org.launch_operator(a.service);
        break;
      case ActionKind::Close:
        if (const auto it = sessions.find(key); it != sessions.end()) org.close_operator(it->second);
        break;
      case ActionKind::Setpoint:
        if (const auto it = sessions.find(key); it != sessions.end()) {
          org.setpoint(it->second, a.var, a.value, "sp-" + std::to_string(++setpoints));
        }
        break;
      case ActionKind::Kill: {
        const AgentId id{a.agent, a.org};
        if (org.node().is_live(id) && !org.node().is_crashed(id)) org.node().crash_agent(id);
        break;
      }
      case ActionKind::Pause:
        org.pause_plant(true);
        break;
      case ActionKind::Resume:
        org.pause_plant(false);
        break;
    }
  }
  world.run_until(scenario.end_time(), at_quiescence);

  std::vector<std::string> org_names;
  std::vector<LatencyRecord> rows;
  std::vector<OpenFailure> failures;
  for (const Organization* o : world.orgs()) {
    org_names.push_back(o->name());
    rows.insert(rows.end(), o->latency_records().begin(), o->latency_records().end());
    failures.insert(failures.end(), o->open_failures().begin(), o->open_failures().end());
    for (const auto& a : o->state().anomalies) result.anomalies.push_back(o->name() + ": " + a);
    result.topology[o->name()] = o->topology();
  }
  result.report = make_report(org_names, std::move(rows), std::move(failures));
  result.events = merged_events(world);
  for (const auto& e : result.events) {
    const Json& d = e.event.detail;
    if ((e.event.kind == EventKind::OverlapEstablished || e.event.kind == EventKind::ShareExtended) &&
        d.value("role", "") == "requester" && d.contains("waiters")) {
      const auto& w = d["waiters"];
      for (const auto& ra : w) result.resolution_leader[ra.get<std::string>()] = w.front().get<std::string>();
    }
  }

  for (auto& v : cnp.violations(true)) violations.insert("contract net: " + v);
  for (auto& v : check_causation(result.events)) violations.insert("causation: " + v);
  for (auto& v : check_hop_oracle(result, scenario)) violations.insert("hop oracle: " + v);
  result.violations.assign(violations.begin(), violations.end());
  return result;
}

}  // namespace orgscada
