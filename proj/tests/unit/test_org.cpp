#include <doctest.h>

#include <algorithm>
#include <functional>
#include <random>

#include "orgscada/harness/probes.hpp"
#include "orgscada/harness/runner.hpp"
#include "orgscada/org/supervisors.hpp"

using namespace orgscada;

namespace {

std::unique_ptr<World> make_world(int orgs, int plcs_each, std::size_t ca_count = 0) {
  std::vector<OrganizationConfig> cfgs;
  for (int i = 1; i <= orgs; ++i) {
    cfgs.push_back(make_org(i, (i - 1) * plcs_each + 1, plcs_each, 1));
    cfgs.back().agent_defaults.ca_count = ca_count;
  }
  fully_acquaint(cfgs);
  auto w = std::make_unique<World>(std::move(cfgs), NetConfig{});
  w->boot();
  return w;
}

ErrorCode code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  return ErrorCode::InvalidArgument;
}

int count_events(const Organization& o, EventKind k, const std::string& reason = "") {
  return static_cast<int>(std::count_if(o.state().events.begin(), o.state().events.end(), [&](const auto& e) {
    return e.kind == k && (reason.empty() || e.detail.value("reason", "") == reason);
  }));
}

const LatencyRecord& record_of(const Organization& o, const AgentId& ra) {
  for (const auto& r : o.latency_records()) {
    if (r.ra == ra.str()) return r;
  }
  FAIL("no latency record for " << ra.str());
  throw;
}

}  // namespace

// ------------------------------------------------------------- Contract Net

TEST_CASE("contract net awards the lowest load, ties to the smallest name") {
  ContractNet c("cnp-1", "O2.PLC7", {"O2", "O3", "O4"}, Time{2000});
  c.on_propose("O3", 0.5);
  c.on_propose("O2", 0.5);
  c.on_propose("O9", 0.0);  // not asked
  c.on_refuse("O4");
  c.on_propose("O4", 0.1);  // already refused
  CHECK(c.all_replied());
  CHECK(c.proposals().size() == 2);
  const auto a = c.award();
  REQUIRE(a);
  CHECK(a->winner == "O2");
  CHECK(a->conversation_id == "cnp-1");
  CHECK(c.phase() == ContractNet::Phase::Awarding);
  const auto rejects = c.complete();
  CHECK(rejects == std::vector<std::string>{"O3"});
  CHECK(c.phase() == ContractNet::Phase::Done);
}

TEST_CASE("a failed winner is replaced once, under a new conversation") {
  ContractNet c("cnp-2", "s", {"A", "B", "C"}, Time{0});
  c.on_propose("A", 1);
  c.on_propose("B", 2);
  c.on_propose("C", 3);
  REQUIRE(c.award()->winner == "A");
  const auto re = c.winner_failed();
  REQUIRE(re);
  CHECK(re->winner == "B");
  CHECK(re->conversation_id != "cnp-2");
  CHECK(c.awards_made() == 2);
  CHECK_FALSE(c.winner_failed());
  CHECK(c.phase() == ContractNet::Phase::Failed);
}

TEST_CASE("contract net with no proposals fails; abort owes rejects") {
  ContractNet none("c", "s", {"A"}, Time{0});
  none.on_refuse("A");
  CHECK_FALSE(none.award());
  CHECK(none.phase() == ContractNet::Phase::Failed);

  ContractNet c("c", "s", {"A", "B"}, Time{0});
  c.on_propose("A", 1);
  c.on_propose("B", 1);
  auto owed = c.abort();
  std::sort(owed.begin(), owed.end());
  CHECK(owed == std::vector<std::string>{"A", "B"});
}

TEST_CASE("contract net safety under random replies and winner failures") {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 500; ++trial) {
    const int n = 1 + static_cast<int>(rng() % 6);
    std::set<std::string> responders;
    for (int i = 0; i < n; ++i) responders.insert("O" + std::to_string(i + 2));
    ContractNet c("c" + std::to_string(trial), "s", responders, Time{0});
    for (const auto& r : responders) {
      switch (rng() % 3) {
        case 0: c.on_propose(r, static_cast<double>(rng() % 4)); break;
        case 1: c.on_refuse(r); break;
        default: break;  // silent
      }
    }
    std::map<std::string, int> accepts_per_conv;
    std::set<std::string> accepted;
    auto a = c.award();
    while (a) {
      ++accepts_per_conv[a->conversation_id];
      CHECK(c.proposals().contains(a->winner));
      CHECK(accepted.insert(a->winner).second);
      if (rng() % 2) break;
      a = c.winner_failed();
    }
    for (const auto& [conv, k] : accepts_per_conv) CHECK(k == 1);
    CHECK(c.awards_made() <= 2);
    const auto owed = c.phase() == ContractNet::Phase::Awarding ? c.complete() : c.abort();
    for (const auto& r : owed) {
      CHECK(c.proposals().contains(r));
      CHECK_FALSE(accepted.contains(r));
    }
    // Every proposer ends with exactly one answer: an accept or a reject.
    std::set<std::string> answered(owed.begin(), owed.end());
    answered.insert(accepted.begin(), accepted.end());
    CHECK(answered.size() == c.proposals().size());
  }
}

TEST_CASE("balance assignment keeps groups within one PLC") {
  const std::vector<std::string> plcs{"a", "b", "c", "d", "e", "f", "g"};
  for (std::size_t k = 1; k <= 9; ++k) {
    const auto groups = balance_assignment(plcs, k);
    CHECK(groups.size() == std::min(k, plcs.size()));
    std::size_t lo = plcs.size(), hi = 0;
    std::vector<std::string> all;
    for (const auto& g : groups) {
      lo = std::min(lo, g.size());
      hi = std::max(hi, g.size());
      all.insert(all.end(), g.begin(), g.end());
    }
    CHECK(hi - lo <= 1);
    std::sort(all.begin(), all.end());
    CHECK(all == plcs);
  }
}

// ------------------------------------------------------------------ Config

TEST_CASE("configuration xml round trip") {
  OrganizationConfig c = make_org(2, 4, 2, 9);
  c.listen_address = "127.0.0.1:7402";
  c.http_listen = "127.0.0.1:8402";
  c.acquaintances = {{"O1", "127.0.0.1:7401"}, {"O3", "127.0.0.1:7403"}};
  c.agent_defaults.ca_count = 1;
  c.agent_defaults.idle_grace = Duration{30000};
  const OrganizationConfig back = parse_config_xml(to_processes_xml(c), to_acquaintances_xml(c));
  CHECK(back.org_name == "O2");
  CHECK(back.listen_address == c.listen_address);
  CHECK(back.http_listen == c.http_listen);
  CHECK(back.seed == 9);
  REQUIRE(back.acquaintances.size() == 2);
  CHECK(back.acquaintances[1].address == "127.0.0.1:7403");
  CHECK(back.agent_defaults.ca_count == 1);
  CHECK(back.agent_defaults.idle_grace == Duration{30000});
  REQUIRE(back.plcs.size() == 2);
  CHECK(back.plcs[1].plc_name == "O2.PLC5");
  CHECK(back.plcs[0].variables.size() == 3);
  CHECK(back.plcs[0].variables[1].writable == false);
  CHECK(back.plcs[0].variables[0].max == doctest::Approx(150.0));
}

TEST_CASE("invalid configurations are rejected") {
  OrganizationConfig c = make_org(1, 1, 1, 1);
  CHECK_NOTHROW(validate(c));
  OrganizationConfig foreign = c;
  foreign.plcs[0].plc_name = "O2.PLC1";
  CHECK(code_of([&] { validate(foreign); }) == ErrorCode::ConfigInvalid);
  OrganizationConfig self = c;
  self.acquaintances = {{"O1", ""}};
  CHECK(code_of([&] { validate(self); }) == ErrorCode::ConfigInvalid);
  CHECK(code_of([] { parse_config_xml("<processes>", "<organization name='O1'/>"); }) == ErrorCode::ConfigInvalid);
  CHECK(code_of([] { split_address("nohost"); }) == ErrorCode::ConfigInvalid);
  CHECK(split_address("10.0.0.1:7000") == std::pair<std::string, int>{"10.0.0.1", 7000});
}

// ---------------------------------------------------------------- Lifecycle

TEST_CASE("boot creates the static part and one control agent per PLC") {
  auto w = make_world(1, 6);
  w->run_until(Time{100});
  const Organization& o = w->org("O1");
  CHECK(o.node().agents_with_role(AgentRole::GlobalSupervisor).size() == 1);
  CHECK(o.node().agents_with_role(AgentRole::LocalSupervisor).size() == 2);
  CHECK(o.control_agent_count() == 6);
  CHECK(o.node().df().entries().size() == 6);
  CHECK(o.operator_count() == 0);
}

TEST_CASE("grouped control agents share PLCs evenly") {
  auto w = make_world(1, 5, 2);
  w->run_until(Time{100});
  Organization& o = w->org("O1");
  CHECK(o.control_agent_count() == 2);
  const auto* ls = o.node().agent_as<LocalSupervisor>("LS-CA");
  REQUIRE(ls);
  const auto a = ls->assignment();
  REQUIRE(a.size() == 2);
  CHECK(a.at("CG1").size() + a.at("CG2").size() == 5);
  CHECK(o.node().df().entries().size() == 5);
}

TEST_CASE("resolution routes take 0, 200 and 400 ms on 100 ms hops") {
  auto w = make_world(2, 3);
  Organization& o1 = w->org("O1");
  w->run_until(Time{1000});
  const AgentId local = o1.launch_operator("O1.PLC1");
  const AgentId fresh = o1.launch_operator("O2.PLC4");
  w->run_until(Time{3000});
  const AgentId extend = o1.launch_operator("O2.PLC5");
  w->run_until(Time{5000});
  const AgentId shared = o1.launch_operator("O2.PLC4");
  w->run_until(Time{7000});

  CHECK(record_of(o1, local).path_class == PathClass::Local);
  CHECK(record_of(o1, local).t_service == Duration{0});
  CHECK(record_of(o1, fresh).path_class == PathClass::NewOverlap);
  CHECK(record_of(o1, fresh).t_service == Duration{400});
  CHECK(record_of(o1, extend).path_class == PathClass::ExtendOverlap);
  CHECK(record_of(o1, extend).t_service == Duration{200});
  CHECK(record_of(o1, shared).path_class == PathClass::SharedAlready);
  CHECK(record_of(o1, shared).t_service == Duration{0});

  CHECK(o1.state().share_refs.at("O2.PLC4") == 2);
  CHECK(o1.state().links.at("O2").shared_in == std::set<std::string>{"O2.PLC4", "O2.PLC5"});
  CHECK(w->org("O2").state().links.at("O1").shared_out == std::set<std::string>{"O2.PLC4", "O2.PLC5"});
}

TEST_CASE("unknown services fail the open everywhere") {
  auto w = make_world(2, 2);
  Organization& o1 = w->org("O1");
  w->run_until(Time{1000});
  const AgentId ra = o1.launch_operator("O7.PLC99");
  w->run_until(Time{8000});
  REQUIRE(o1.open_failures().size() == 1);
  CHECK(o1.open_failures()[0].reason == "ServiceUnknownEverywhere");
  CHECK_FALSE(o1.session_exists(ra));
  CHECK(count_events(o1, EventKind::CnpFailed) == 1);
  CHECK(o1.state().share_refs.empty());
}

TEST_CASE("the last TFJA releases the share, the idle link expires later") {
  auto w = make_world(2, 2);
  Organization& o1 = w->org("O1");
  Organization& o2 = w->org("O2");
  w->run_until(Time{1000});
  const AgentId a = o1.launch_operator("O2.PLC3");
  const AgentId b = o1.launch_operator("O2.PLC3");
  w->run_until(Time{3000});
  o1.close_operator(a);
  w->run_until(Time{4000});
  CHECK(o1.state().share_refs.at("O2.PLC3") == 1);
  CHECK(o1.node().df().search("O2.PLC3").size() == 1);

  o1.close_operator(b);
  o1.close_operator(b);  // idempotent
  w->run_until(Time{5000});
  CHECK(o1.node().df().search("O2.PLC3").empty());
  CHECK(o1.state().links.at("O2").shared_in.empty());
  CHECK(o2.state().links.at("O1").shared_out.empty());
  CHECK(count_events(o1, EventKind::ShareReleased) == 1);
  CHECK(o1.state().anomalies.empty());

  const Duration grace = o1.config().agent_defaults.idle_grace;
  w->run_until(Time{5000} + grace - Duration{2000});
  CHECK(o1.state().links.contains("O2"));
  w->run_until(Time{5000} + grace + Duration{2000});
  CHECK_FALSE(o1.state().links.contains("O2"));
  CHECK_FALSE(o2.state().links.contains("O1"));
}

TEST_CASE("adaptation purges dangling entries and restores missing ones") {
  auto w = make_world(2, 2);
  Organization& o1 = w->org("O1");
  w->run_until(Time{1000});
  o1.launch_operator("O2.PLC3");
  w->run_until(Time{4000});

  // Fixpoint: nothing to do while the world is steady.
  const int before = static_cast<int>(o1.state().events.size());
  const std::string hash = o1.state_hash();
  w->run_until(Time{9000});
  CHECK(static_cast<int>(o1.state().events.size()) == before);
  CHECK(o1.state_hash() == hash);

  o1.state().links.at("O2").shared_in.insert("O2.PLC4");
  o1.state().links.at("O2").shared_in.erase("O2.PLC3");
  w->run_until(Time{10500});
  CHECK(o1.state().links.at("O2").shared_in == std::set<std::string>{"O2.PLC3"});
  CHECK(count_events(o1, EventKind::ShareReleased, "dangling") == 1);
  CHECK(count_events(o1, EventKind::ShareExtended, "restored") == 1);
  CHECK(check_overlap_soundness(*w).empty());
}

// ------------------------------------------------------------ Supervision

TEST_CASE("every killed control agent comes back within the bound") {
  for (int plc = 1; plc <= 6; ++plc) {
    const RecoveryProbe p = probe_ca_recovery(plc);
    CAPTURE(p.plc);
    REQUIRE(p.local_restored);
    REQUIRE(p.remote_restored);
    CHECK(*p.local_restored <= p.bound);
    CHECK(*p.remote_restored <= p.bound);
    CHECK(p.sessions_kept);
    CHECK_FALSE(p.reopened);
    CHECK(p.local_data_after > 0);
    CHECK(p.remote_data_after > 0);
    CHECK(p.ok());
  }
}

namespace {

// Crashes `name` again each time it is recreated, until the supervisor gives up.
void storm(World& w, Organization& o, const std::string& name, Time until) {
  const auto* ls = o.node().agent_as<LocalSupervisor>("LS-CA");
  std::size_t seen = ls->recreations();
  o.node().crash_agent(AgentId{name, o.name()});
  while (w.now() < until && o.state().quarantined.empty()) {
    w.run_until(w.now() + Duration{10});
    if (ls->recreations() != seen) {
      seen = ls->recreations();
      const AgentId id{name, o.name()};
      if (o.node().is_live(id)) o.node().crash_agent(id);
    }
  }
}

}  // namespace

TEST_CASE("a crash storm quarantines the control agent") {
  auto w = make_world(1, 3);
  Organization& o = w->org("O1");
  w->run_until(Time{1000});
  storm(*w, o, "C2", Time{30000});
  CHECK(o.state().quarantined.contains("C2@O1"));
  w->run_until(w->now() + Duration{10000});
  CHECK_FALSE(o.node().is_live(AgentId{"C2", "O1"}));
  CHECK(o.node().df().search("O1.PLC2").empty());
  CHECK(o.node().df().search("O1.PLC1").size() == 1);
  CHECK(count_events(o, EventKind::AgentRecreated) == 3);
}

TEST_CASE("quarantine in grouped mode rebalances onto fresh agents") {
  auto w = make_world(1, 4, 2);
  Organization& o = w->org("O1");
  w->run_until(Time{1000});
  storm(*w, o, "CG1", Time{30000});
  REQUIRE_FALSE(o.state().quarantined.empty());
  w->run_until(w->now() + Duration{3000});
  const auto* ls = o.node().agent_as<LocalSupervisor>("LS-CA");
  const auto a = ls->assignment();
  REQUIRE(a.size() == 1);
  CHECK(a.begin()->first == "CG3");
  CHECK(a.begin()->second.size() == 4);
  CHECK(o.node().df().entries().size() == 4);
  for (const auto& d : o.node().df().entries()) CHECK(d.provider.local_name == "CG3");
}

TEST_CASE("a crashed operator agent is retired and its share released") {
  auto w = make_world(2, 2);
  Organization& o1 = w->org("O1");
  w->run_until(Time{1000});
  const AgentId ra = o1.launch_operator("O2.PLC3");
  w->run_until(Time{3000});
  o1.node().crash_agent(ra);
  w->run_until(Time{10000});
  CHECK_FALSE(o1.node().is_live(ra));
  CHECK(o1.state().share_refs["O2.PLC3"] == 0);
  CHECK(o1.node().df().search("O2.PLC3").empty());
  CHECK(check_session_accounting(*w).empty());
}
