#include "orgscada/harness/probes.hpp"

#include <cmath>
#include <map>
#include <random>

#include "orgscada/harness/scenario.hpp"
#include "orgscada/harness/world.hpp"

namespace orgscada {

namespace {

std::unique_ptr<World> two_orgs(std::uint64_t seed) {
  std::vector<OrganizationConfig> orgs{make_org(1, 1, 3, seed), make_org(2, 4, 3, seed)};
  fully_acquaint(orgs);
  NetConfig net;
  net.seed = seed;
  auto w = std::make_unique<World>(std::move(orgs), net);
  w->boot();
  return w;
}

bool df_has_live(const Organization& o, const std::string& service, const Node& owner) {
  for (const auto& d : o.node().df().search(service)) {
    if (owner.is_live(d.provider) && !owner.is_crashed(d.provider)) return true;
  }
  return false;
}

}  // namespace

bool RecoveryProbe::ok() const {
  return local_restored && *local_restored <= bound && remote_restored && *remote_restored <= bound &&
         sessions_kept && !reopened && local_data_after > 0 && remote_data_after > 0;
}

RecoveryProbe probe_ca_recovery(int plc_index, std::uint64_t seed) {
  auto w = two_orgs(seed);
  RecoveryProbe p;
  const bool in_o1 = plc_index <= 3;
  Organization& owner = w->org(in_o1 ? "O1" : "O2");
  Organization& requester = w->org(in_o1 ? "O2" : "O1");
  p.plc = owner.name() + ".PLC" + std::to_string(plc_index);
  p.agent = "C" + std::to_string(plc_index);
  const AgentDefaults& d = owner.config().agent_defaults;
  p.bound = (d.heartbeat_miss_limit + 1) * d.heartbeat_period;

  w->run_until(Time{1000});
  const AgentId local_ra = owner.launch_operator(p.plc);
  const AgentId remote_ra = requester.launch_operator(p.plc);

  std::optional<Time> restored_at;
  std::map<std::string, int> opened;
  auto listen = [&](const AgentId& ra, int* after) {
    return [&, ra, after](const SessionEvent& e) {
      if (e.ra != ra) return;
      if (e.type == "session" && e.payload.value("state", "") == "opened") ++opened[ra.str()];
      if (e.type == "data" && restored_at && e.at >= *restored_at) ++*after;
    };
  };
  owner.add_listener(listen(local_ra, &p.local_data_after));
  requester.add_listener(listen(remote_ra, &p.remote_data_after));

  const Time kill_at{6000};
  w->run_until(kill_at);
  const AgentId victim{p.agent, owner.name()};
  owner.node().crash_agent(victim);

  // Watch at 10 ms resolution until both directories list a live provider again.
  bool recreated = false;
  for (Time t = kill_at + Duration{10}; t <= kill_at + 3 * p.bound; t += Duration{10}) {
    w->run_until(t);
    if (!recreated) {
      for (const auto& e : owner.state().events) {
        recreated = recreated || (e.kind == EventKind::AgentRecreated && e.at >= kill_at);
      }
    }
    if (!recreated) continue;
    if (!p.local_restored && df_has_live(owner, p.plc, owner.node())) p.local_restored = t - kill_at;
    if (!p.remote_restored && df_has_live(requester, p.plc, owner.node())) p.remote_restored = t - kill_at;
    if (p.local_restored && p.remote_restored) break;
  }
  if (p.remote_restored) restored_at = kill_at + *p.remote_restored;
  w->run_until(w->now() + Duration{5000});

  auto kept = [](const Organization& o, const AgentId& ra) {
    const auto* a = o.node().agent_as<OperatorAgent>(ra.local_name);
    return a && a->is_open() && o.session_exists(ra);
  };
  p.sessions_kept = kept(owner, local_ra) && kept(requester, remote_ra);
  p.reopened = opened[local_ra.str()] > 1 || opened[remote_ra.str()] > 1;
  return p;
}

SetpointProbe probe_setpoint_safety(std::uint64_t seed, int attempts) {
  auto w = two_orgs(seed);
  Organization& o1 = w->org("O1");
  w->run_until(Time{500});
  const std::vector<std::pair<AgentId, std::string>> sessions{{o1.launch_operator("O1.PLC1"), "O1.PLC1"},
                                                              {o1.launch_operator("O2.PLC5"), "O2.PLC5"}};
  w->run_until(Time{3000});

  SetpointProbe p;
  std::map<std::string, std::string> expected;  // request id -> "" (accept) or reason
  std::map<std::string, bool> answered;
  o1.add_listener([&](const SessionEvent& e) {
    if (e.type != "verdict") return;
    const std::string id = e.payload.value("request_id", "");
    const auto it = expected.find(id);
    if (it == expected.end()) return;
    answered[id] = true;
    const bool acc = e.payload.value("accepted", false);
    acc ? ++p.accepted : ++p.rejected;
    const std::string reason = acc ? "" : e.payload.value("reason", "");
    if (reason != it->second) {
      p.problems.push_back(id + ": expected '" + it->second + "', got '" + reason + "'");
    }
  });

  auto check_bounds = [&] {
    for (Organization* o : w->orgs()) {
      for (const auto& name : o->plc_names()) {
        plantsim::Plc* plc = o->plc(name);
        for (const auto& v : plc->config().variables) {
          const double x = plc->read(v.name, w->now()).value;
          if (!(x >= v.min && x <= v.max)) {
            p.problems.push_back(name + "." + v.name + " = " + std::to_string(x) + " at " +
                                 std::to_string(w->now().count()) + " ms");
          }
        }
      }
    }
  };

  std::mt19937_64 rng(seed);
  const auto catalog = plantsim::synthetic_plc("x").variables;
  for (int i = 0; i < attempts; ++i) {
    const auto& [ra, service] = sessions[rng() % sessions.size()];
    std::string var;
    double lo = 0, hi = 1;
    bool writable = false, known = true;
    if (rng() % 8 == 0) {
      var = "valve" + std::to_string(rng() % 3);
      known = false;
    } else {
      const auto& v = catalog[rng() % catalog.size()];
      var = v.name;
      lo = v.min;
      hi = v.max;
      writable = v.writable;
    }
    const double span = hi - lo;
    double value = 0;
    switch (rng() % 4) {
      case 0: value = (rng() % 2) ? lo : hi; break;  // exact bounds are legal
      case 1: value = lo - span * std::uniform_real_distribution<double>(1e-6, 2.0)(rng); break;
      case 2: value = hi + span * std::uniform_real_distribution<double>(1e-6, 2.0)(rng); break;
      default: value = std::uniform_real_distribution<double>(lo, hi)(rng); break;
    }
    std::string reason;
    if (!known) {
      reason = "UnknownVariable";
    } else if (!writable) {
      reason = "NotWritable";
    } else if (value < lo || value > hi) {
      reason = "OutOfRange";
    }
    const std::string id = "sp" + std::to_string(i);
    expected[id] = reason;
    ++p.attempts;
    o1.setpoint(ra, var, value, id);
    w->run_until(w->now() + Duration{std::int64_t(20 + rng() % 200)});
    check_bounds();
  }
  w->run_until(w->now() + Duration{2000});
  check_bounds();
  for (const auto& [id, r] : expected) {
    if (!answered.contains(id)) ++p.unanswered;
  }
  return p;
}

}  // namespace orgscada
