#include "orgscada/harness/scenario.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <map>
#include <random>
#include <set>
#include <sstream>

namespace orgscada {

std::string_view to_string(ActionKind k) {
  switch (k) {
    case ActionKind::Open:
      return "open";
    case ActionKind::Close:
      return "close";
    case ActionKind::Setpoint:
      return "setpoint";
    case ActionKind::Kill:
      return "kill";
    case ActionKind::Pause:
      return "pause";
    case ActionKind::Resume:
      return "resume";
  }
  return "?";
}

namespace {

ActionKind action_from_string(const std::string& s) {
  for (auto k : {ActionKind::Open, ActionKind::Close, ActionKind::Setpoint, ActionKind::Kill,
                 ActionKind::Pause, ActionKind::Resume}) {
    if (to_string(k) == s) return k;
  }
  fail(ErrorCode::ScenarioInvalid, "unknown action '" + s + "'");
}

[[noreturn]] void invalid(const std::string& what) { fail(ErrorCode::ScenarioInvalid, what); }

}  // namespace

Time Scenario::end_time() const {
  if (end) return *end;
  Time last{0};
  for (const auto& a : script) last = std::max(last, a.at);
  return last + settle;
}

void validate(const Scenario& s) {
  std::set<std::string> names;
  for (const auto& o : s.orgs) {
    if (!names.insert(o.org_name).second) invalid("duplicate organization " + o.org_name);
    try {
      validate(o);
    } catch (const Error& e) {
      invalid(e.what());
    }
    for (const auto& a : o.acquaintances) {
      if (!std::any_of(s.orgs.begin(), s.orgs.end(), [&](const auto& x) { return x.org_name == a.org_name; })) {
        invalid(o.org_name + " lists unknown acquaintance " + a.org_name);
      }
    }
  }
  Time prev{0};
  std::set<std::string> sessions;
  for (const auto& a : s.script) {
    if (a.at < prev) invalid("script times decrease at " + std::to_string(a.at.count()) + " ms");
    prev = a.at;
    if (!names.contains(a.org)) invalid("action references unknown organization '" + a.org + "'");
    switch (a.kind) {
      case ActionKind::Open:
        if (a.service.empty()) invalid("open without service");
        sessions.insert(a.org + "/" + (a.session.empty() ? a.service : a.session));
        break;
      case ActionKind::Close:
      case ActionKind::Setpoint:
        if (!sessions.contains(a.org + "/" + a.session)) invalid("unknown session '" + a.session + "'");
        if (a.kind == ActionKind::Setpoint && a.var.empty()) invalid("setpoint without var");
        break;
      case ActionKind::Kill:
        if (a.agent.empty()) invalid("kill without agent");
        break;
      case ActionKind::Pause:
      case ActionKind::Resume:
        break;
    }
  }
  if (s.end && *s.end < prev) invalid("end before the last action");
}

OrganizationConfig make_org(int org_index, int first_plc, int plc_count, std::uint64_t seed) {
  OrganizationConfig cfg;
  cfg.org_name = "O" + std::to_string(org_index);
  cfg.seed = seed;
  for (int j = 0; j < plc_count; ++j) {
    cfg.plcs.push_back(plantsim::synthetic_plc(cfg.org_name + ".PLC" + std::to_string(first_plc + j)));
  }
  return cfg;
}

void fully_acquaint(std::vector<OrganizationConfig>& orgs) {
  for (auto& o : orgs) {
    o.acquaintances.clear();
    for (const auto& p : orgs) {
      if (p.org_name != o.org_name) o.acquaintances.push_back(Acquaintance{p.org_name, ""});
    }
  }
}

// ------------------------------------------------------------------- JSON form

Scenario scenario_from_json(const Json& j) {
  Scenario s;
  try {
    s.name = j.value("name", "unnamed");
    s.seed = j.value("seed", std::uint64_t{1});
    if (j.contains("net")) {
      const Json& n = j["net"];
      s.net.default_hop_latency = Duration{n.value("default_hop_ms", 100)};
      s.net.intra_org_latency = Duration{n.value("intra_org_ms", 0)};
      for (const auto& h : n.value("hops", Json::array())) {
        s.net.hop_latency[{h.at("from").get<std::string>(), h.at("to").get<std::string>()}] =
            Duration{h.at("ms").get<std::int64_t>()};
      }
    }
    s.net.seed = s.seed;
    int next_plc = 1;
    bool explicit_acq = false;
    for (const auto& o : j.at("orgs")) {
      const std::string name = o.at("name").get<std::string>();
      const auto parsed = parse_service_name(name + ".PLC1");
      if (!parsed) invalid("organization name must be O<i>: " + name);
      OrganizationConfig cfg;
      const Json& plcs = o.at("plcs");
      if (plcs.is_number_integer()) {
        const int first = o.value("first_plc", next_plc);
        cfg = make_org(parsed->org_index, first, plcs.get<int>(), s.seed);
        next_plc = first + plcs.get<int>();
      } else {
        cfg.org_name = name;
        cfg.seed = s.seed;
        for (const auto& p : plcs) cfg.plcs.push_back(plantsim::synthetic_plc(p.get<std::string>()));
      }
      if (o.contains("acquaintances")) {
        explicit_acq = true;
        for (const auto& a : o["acquaintances"]) cfg.acquaintances.push_back(Acquaintance{a.get<std::string>(), ""});
      }
      if (o.contains("defaults")) {
        const Json& d = o["defaults"];
        auto& ad = cfg.agent_defaults;
        ad.poll_period = Duration{d.value("poll_period_ms", ad.poll_period.count())};
        ad.heartbeat_period = Duration{d.value("heartbeat_period_ms", ad.heartbeat_period.count())};
        ad.heartbeat_miss_limit = d.value("heartbeat_miss_limit", ad.heartbeat_miss_limit);
        ad.cfp_deadline = Duration{d.value("cfp_deadline_ms", ad.cfp_deadline.count())};
        ad.idle_grace = Duration{d.value("idle_grace_ms", ad.idle_grace.count())};
        ad.adaptation_period = Duration{d.value("adaptation_period_ms", ad.adaptation_period.count())};
        ad.ca_count = d.value("ca_count", ad.ca_count);
      }
      s.orgs.push_back(std::move(cfg));
    }
    if (!explicit_acq) fully_acquaint(s.orgs);
    for (const auto& a : j.value("script", Json::array())) {
      ScriptAction act;
      act.at = Duration{a.at("at_ms").get<std::int64_t>()};
      act.org = a.at("org").get<std::string>();
      act.kind = action_from_string(a.at("action").get<std::string>());
      act.service = a.value("service", "");
      act.session = a.value("session", act.kind == ActionKind::Open ? act.service : "");
      act.agent = a.value("agent", "");
      act.var = a.value("var", "");
      act.value = a.value("value", 0.0);
      s.script.push_back(std::move(act));
    }
    if (j.contains("end_ms")) s.end = Duration{j["end_ms"].get<std::int64_t>()};
    s.settle = Duration{j.value("settle_ms", 2000)};
  } catch (const Json::exception& e) {
    invalid(std::string("scenario document: ") + e.what());
  } catch (const Error& e) {
    if (e.code() == ErrorCode::ScenarioInvalid) throw;
    invalid(e.what());
  }
  validate(s);
  return s;
}

Json to_json(const Scenario& s) {
  Json net{{"default_hop_ms", s.net.default_hop_latency.count()},
           {"intra_org_ms", s.net.intra_org_latency.count()},
           {"hops", Json::array()}};
  for (const auto& [pair, d] : s.net.hop_latency) {
    net["hops"].push_back(Json{{"from", pair.first}, {"to", pair.second}, {"ms", d.count()}});
  }
  Json orgs = Json::array();
  for (const auto& o : s.orgs) {
    Json plcs = Json::array();
    for (const auto& p : o.plcs) plcs.push_back(p.plc_name);
    Json acq = Json::array();
    for (const auto& a : o.acquaintances) acq.push_back(a.org_name);
    const auto& d = o.agent_defaults;
    orgs.push_back(Json{{"name", o.org_name},
                        {"plcs", plcs},
                        {"acquaintances", acq},
                        {"defaults",
                         {{"poll_period_ms", d.poll_period.count()},
                          {"heartbeat_period_ms", d.heartbeat_period.count()},
                          {"heartbeat_miss_limit", d.heartbeat_miss_limit},
                          {"cfp_deadline_ms", d.cfp_deadline.count()},
                          {"idle_grace_ms", d.idle_grace.count()},
                          {"adaptation_period_ms", d.adaptation_period.count()},
                          {"ca_count", d.ca_count}}}});
  }
  Json script = Json::array();
  for (const auto& a : s.script) {
    Json x{{"at_ms", a.at.count()}, {"org", a.org}, {"action", std::string(to_string(a.kind))}};
    if (!a.service.empty()) x["service"] = a.service;
    if (!a.session.empty()) x["session"] = a.session;
    if (!a.agent.empty()) x["agent"] = a.agent;
    if (a.kind == ActionKind::Setpoint) {
      x["var"] = a.var;
      x["value"] = a.value;
    }
    script.push_back(std::move(x));
  }
  Json j{{"name", s.name}, {"seed", s.seed}, {"net", net}, {"orgs", orgs}, {"script", script},
         {"settle_ms", s.settle.count()}};
  if (s.end) j["end_ms"] = s.end->count();
  return j;
}

Scenario load_scenario(const std::string& path_or_builtin) {
  if (auto b = builtin_scenario(path_or_builtin)) return *b;
  std::ifstream in(path_or_builtin);
  if (!in) invalid("no builtin or readable file named '" + path_or_builtin + "'");
  Json j;
  try {
    j = Json::parse(in);
  } catch (const Json::exception& e) {
    invalid(path_or_builtin + ": " + e.what());
  }
  return scenario_from_json(j);
}

// ------------------------------------------------------------------- Builtins

namespace {

std::vector<OrganizationConfig> grid(int orgs, int plcs_each, std::uint64_t seed) {
  std::vector<OrganizationConfig> out;
  for (int i = 1; i <= orgs; ++i) out.push_back(make_org(i, (i - 1) * plcs_each + 1, plcs_each, seed));
  fully_acquaint(out);
  return out;
}

ScriptAction open(Time at, const std::string& org, const std::string& service, std::string session = "") {
  ScriptAction a;
  a.at = at;
  a.org = org;
  a.kind = ActionKind::Open;
  a.service = service;
  a.session = session.empty() ? service : session;
  return a;
}

ScriptAction close(Time at, const std::string& org, const std::string& session) {
  ScriptAction a;
  a.at = at;
  a.org = org;
  a.kind = ActionKind::Close;
  a.session = session;
  return a;
}

}  // namespace

// Launch order per organization, one service per row.
const std::vector<std::vector<std::string>>& table3_launch_order() {
  static const std::vector<std::vector<std::string>> order = {
      {"O1.PLC1", "O2.PLC7", "O2.PLC8", "O2.PLC8", "O3.PLC14", "O3.PLC15", "O4.PLC19", "O4.PLC20",
       "O4.PLC21", "O3.PLC17", "O4.PLC23", "O4.PLC20"},
      {"O2.PLC7", "O1.PLC1", "O1.PLC2", "O1.PLC3", "O3.PLC13", "O3.PLC14", "O4.PLC19", "O4.PLC20",
       "O4.PLC21", "O2.PLC8", "O1.PLC5", "O1.PLC6"},
      {"O3.PLC13", "O3.PLC14", "O3.PLC15", "O1.PLC1", "O1.PLC5", "O2.PLC7", "O2.PLC8", "O4.PLC19",
       "O4.PLC20", "O3.PLC16", "O3.PLC17", "O3.PLC18"},
      {"O4.PLC19", "O4.PLC20", "O4.PLC21", "O4.PLC22", "O4.PLC23", "O4.PLC24", "O1.PLC1", "O1.PLC4",
       "O3.PLC13", "O3.PLC14", "O2.PLC7", "O2.PLC8"},
  };
  return order;
}

Scenario table3_scenario(std::uint64_t seed) {
  Scenario s;
  s.name = "table3";
  s.seed = seed;
  s.orgs = grid(4, 6, seed);
  s.net.seed = seed;
  const auto& order = table3_launch_order();
  for (std::size_t row = 0; row < order[0].size(); ++row) {
    for (std::size_t o = 0; o < order.size(); ++o) {
      const std::string org = "O" + std::to_string(o + 1);
      s.script.push_back(open(Duration{static_cast<std::int64_t>(row + 1) * 500}, org, order[o][row],
                              "row" + std::to_string(row + 1)));
    }
  }
  return s;
}

Scenario fig11_scenario(std::uint64_t seed) {
  Scenario s;
  s.name = "fig11";
  s.seed = seed;
  s.orgs = grid(3, 6, seed);
  s.net.seed = seed;
  s.script = {
      open(Duration{1000}, "O1", "O2.PLC7"),   // T1 first contact, new overlap
      open(Duration{2000}, "O1", "O2.PLC8"),   // T2 extension over the same link
      open(Duration{3000}, "O3", "O1.PLC1"),   // T3 a second overlap
      open(Duration{4000}, "O2", "O3.PLC13"),  // T4 a third one
      close(Duration{5000}, "O1", "O2.PLC7"),  // T5 TFJA, share released
      close(Duration{6000}, "O1", "O2.PLC8"),  // T6 last share on the link released
  };
  // T7: the empty O1-O2 link retires after the idle grace.
  s.end = Duration{6000} + s.orgs[0].agent_defaults.idle_grace + Duration{2000};
  return s;
}

Scenario random_scenario(std::uint64_t seed, const RandomScenarioOptions& opt) {
  std::mt19937_64 rng(seed);
  auto pick = [&](int lo, int hi) {
    return lo + static_cast<int>(rng() % static_cast<std::uint64_t>(hi - lo + 1));
  };
  Scenario s;
  s.name = "random-" + std::to_string(seed);
  s.seed = seed;
  s.net.seed = seed;
  const int n = pick(opt.min_orgs, opt.max_orgs);
  int next_plc = 1;
  std::vector<std::string> services;
  for (int i = 1; i <= n; ++i) {
    const int count = pick(opt.min_plcs, opt.max_plcs);
    s.orgs.push_back(make_org(i, next_plc, count, seed));
    for (const auto& p : s.orgs.back().plcs) services.push_back(p.plc_name);
    next_plc += count;
  }
  fully_acquaint(s.orgs);

  Time t{500};
  std::map<std::string, std::vector<std::string>> open_sessions;  // org -> labels
  int label = 0;
  for (int k = 0; k < opt.opens; ++k) {
    const std::string org = "O" + std::to_string(pick(1, n));
    const int roll = pick(0, 9);
    if (opt.closes && roll < 3 && !open_sessions[org].empty()) {
      auto& labels = open_sessions[org];
      const std::size_t idx = rng() % labels.size();
      s.script.push_back(close(t, org, labels[idx]));
      labels.erase(labels.begin() + static_cast<std::ptrdiff_t>(idx));
    } else if (opt.kills && roll == 3) {
      const std::string victim = services[rng() % services.size()];
      ScriptAction a;
      a.at = t;
      a.org = victim.substr(0, victim.find('.'));
      a.kind = ActionKind::Kill;
      a.agent = "C" + std::to_string(parse_service_name(victim)->plc_index);
      s.script.push_back(a);
    } else {
      const std::string l = "s" + std::to_string(++label);
      s.script.push_back(open(t, org, services[rng() % services.size()], l));
      open_sessions[org].push_back(l);
    }
    t += opt.spacing;
  }
  // Kills need room for recovery before the run ends.
  s.settle = opt.kills ? Duration{6000} : Duration{2000};
  return s;
}

void apply_seed(Scenario& s, std::uint64_t seed) {
  s.seed = seed;
  s.net.seed = seed;
  for (auto& o : s.orgs) o.seed = seed;
}

std::vector<std::string> builtin_scenarios() { return {"table3", "fig11", "random"}; }

std::optional<Scenario> builtin_scenario(const std::string& name, std::uint64_t seed) {
  if (name == "table3") return table3_scenario(seed);
  if (name == "fig11") return fig11_scenario(seed);
  if (name == "random") return random_scenario(seed);
  return std::nullopt;
}

}  // namespace orgscada
