// One line per acceptance criterion: PASS/FAIL, name, measured detail.
#include <chrono>
#include <fstream>
#include <iostream>
#include <iterator>
#include <random>
#include <sstream>

#include "orgscada/harness/probes.hpp"
#include "orgscada/harness/runner.hpp"
#include "orgscada/org/contract_net.hpp"
#include "orgscada/wire/codec.hpp"

using namespace orgscada;

namespace {

int failures = 0;

void report(bool ok, const std::string& name, const std::string& detail) {
  std::cout << (ok ? "PASS " : "FAIL ") << name << " : " << detail << std::endl;
  if (!ok) ++failures;
}

std::string fixture(const std::string& name) { return std::string(ORGSCADA_FIXTURES) + "/" + name; }

wire::Bytes read_bytes(const std::string& name) {
  std::ifstream in(fixture(name), std::ios::binary);
  return wire::Bytes(std::istreambuf_iterator<char>(in), {});
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string first(const std::vector<std::string>& v) { return v.empty() ? "" : " first: " + v.front(); }

// ---------------------------------------------------------------------------

void table3(RunResult& out) {
  const auto t0 = std::chrono::steady_clock::now();
  const Scenario s = table3_scenario();
  out = run(s);
  const double wall = seconds_since(t0);

  std::map<std::pair<std::string, int>, std::string> expected;
  std::ifstream in(fixture("table3_expected.txt"));
  for (std::string line; std::getline(in, line);) {
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ls(line);
    std::string org, cls;
    int row = 0;
    ls >> org >> row >> cls;
    expected[{org, row}] = cls;
  }
  int match = 0;
  std::string mismatch;
  for (const auto& r : out.report.rows) {
    const auto it = expected.find({r.requester_org, r.launch_index});
    if (it != expected.end() && it->second == to_string(r.path_class)) {
      ++match;
    } else if (mismatch.empty()) {
      mismatch = " mismatch at " + r.requester_org + " row " + std::to_string(r.launch_index);
    }
  }
  const auto& sum = out.report.summary;
  auto mean = [&](PathClass c) { return sum.contains(c) ? sum.at(c).mean_ms : -1.0; };
  const bool ordered = mean(PathClass::Local) >= 0 && mean(PathClass::Local) == mean(PathClass::SharedAlready) &&
                       mean(PathClass::SharedAlready) < mean(PathClass::ExtendOverlap) &&
                       mean(PathClass::ExtendOverlap) < mean(PathClass::NewOverlap);
  const double sim_s = static_cast<double>(s.end_time().count()) / 1000.0;
  std::ostringstream d;
  d << match << "/" << expected.size() << " rows match; means L=" << mean(PathClass::Local)
    << " S=" << mean(PathClass::SharedAlready) << " E=" << mean(PathClass::ExtendOverlap)
    << " N=" << mean(PathClass::NewOverlap) << " ms; sim " << sim_s << " s, wall " << wall << " s" << mismatch;
  report(match == static_cast<int>(expected.size()) && out.report.rows.size() == expected.size() && ordered &&
             out.violations.empty() && sim_s < 10.0 && wall < 60.0,
         "table3-ordinal", d.str());
}

void hop_oracle() {
  int scenarios = 0, rows = 0, leaders = 0;
  std::vector<std::string> bad;
  std::mt19937_64 pick(99);
  for (std::uint64_t seed = 1; seed <= 120; ++seed) {
    RandomScenarioOptions opt;
    opt.opens = 8 + static_cast<int>(pick() % 12);
    const RunResult r = run(random_scenario(seed, opt));
    ++scenarios;
    rows += static_cast<int>(r.report.rows.size());
    for (const auto& v : r.violations) bad.push_back("seed " + std::to_string(seed) + ": " + v);
  }
  // Overlapping requests: every request that led its own resolution.
  for (std::uint64_t seed = 1; seed <= 60; ++seed) {
    RandomScenarioOptions opt;
    opt.spacing = Duration{40};
    opt.opens = 16;
    const RunResult r = run(random_scenario(1000 + seed, opt));
    ++scenarios;
    for (const auto& row : r.report.rows) {
      const auto l = r.resolution_leader.find(row.ra);
      leaders += l == r.resolution_leader.end() || l->second == row.ra;
    }
    for (const auto& v : r.violations) bad.push_back("seed " + std::to_string(1000 + seed) + ": " + v);
  }
  std::ostringstream d;
  d << scenarios << " random scenarios (2-6 orgs, 1-8 PLCs), " << rows << " sequential rows + " << leaders
    << " concurrent leaders checked, " << bad.size() << " mismatches" << first(bad);
  report(bad.empty() && scenarios >= 100, "hop-count-oracle", d.str());
}

void monotone(const RunResult& t3) {
  const auto v = check_monotone_learning(t3.report);
  std::map<std::pair<std::string, std::string>, int> later;  // rows after the first New per pair
  std::set<std::pair<std::string, std::string>> seen;
  int bad_later = 0;
  for (const auto& r : t3.report.rows) {
    const auto name = parse_service_name(r.service_name);
    if (!name || name->owner_org() == r.requester_org) continue;
    const std::pair<std::string, std::string> pair{r.requester_org, name->owner_org()};
    if (seen.contains(pair)) {
      bad_later += r.path_class != PathClass::ExtendOverlap && r.path_class != PathClass::SharedAlready;
    }
    if (r.path_class == PathClass::NewOverlap) seen.insert(pair);
  }
  std::ostringstream d;
  d << seen.size() << " ordered pairs learned once each; " << bad_later << " later cross-pair rows not Extend/Shared"
    << first(v);
  report(v.empty() && bad_later == 0, "monotone-learning", d.str());
}

void soundness() {
  RandomScenarioOptions opt;
  opt.min_orgs = opt.max_orgs = 3;
  opt.closes = true;
  opt.kills = true;
  opt.opens = 24;
  opt.spacing = Duration{200};
  int checks = 0, kills = 0;
  std::vector<std::string> bad;
  for (std::uint64_t seed = 1; seed <= 60; ++seed) {
    const Scenario s = random_scenario(seed, opt);
    for (const auto& a : s.script) kills += a.kind == ActionKind::Kill;
    const RunResult r = run(s);
    checks += r.quiescent_checks;
    for (const auto& v : r.violations) bad.push_back("seed " + std::to_string(seed) + ": " + v);
  }

  // Contract Net over random responder sets with winner failures.
  std::mt19937_64 rng(17);
  int negotiations = 0, reawards = 0;
  for (int trial = 0; trial < 2000; ++trial) {
    std::set<std::string> responders;
    const int n = 1 + static_cast<int>(rng() % 8);
    for (int i = 0; i < n; ++i) responders.insert("O" + std::to_string(i + 2));
    ContractNet c("c" + std::to_string(trial), "s", responders, Time{0});
    for (const auto& r : responders) {
      if (rng() % 3 == 0) c.on_refuse(r);
      else if (rng() % 4 != 0) c.on_propose(r, static_cast<double>(rng() % 3));
    }
    std::map<std::string, int> per_conv;
    std::set<std::string> accepted;
    for (auto a = c.award(); a; a = (rng() % 2) ? c.winner_failed() : std::nullopt) {
      ++per_conv[a->conversation_id];
      accepted.insert(a->winner);
      reawards += per_conv.size() > 1;
    }
    const auto owed = c.phase() == ContractNet::Phase::Awarding ? c.complete() : c.abort();
    std::set<std::string> answered(owed.begin(), owed.end());
    for (const auto& w : accepted) {
      if (answered.contains(w)) bad.push_back("cnp: " + w + " accepted and rejected");
      answered.insert(w);
    }
    for (const auto& [conv, k] : per_conv) {
      if (k > 1) bad.push_back("cnp: conversation " + conv + " accepted twice");
    }
    if (answered.size() != c.proposals().size()) bad.push_back("cnp: a proposer got no answer in trial " + std::to_string(trial));
    ++negotiations;
  }
  const RunResult wf = run(load_scenario(fixture("winner_failure.json")));
  for (const auto& v : wf.violations) bad.push_back("winner failure: " + v);
  const bool wf_ok = wf.report.failures.size() == 1 && wf.report.failures[0].reason == "PeerUnreachable";
  std::ostringstream d;
  d << "60 interleavings over 3 orgs (" << kills << " kills), " << checks << " quiescent checks; " << negotiations
    << " negotiations, " << reawards << " re-awards; injected winner failure "
    << (wf_ok ? "handled" : "mishandled") << "; " << bad.size() << " violations" << first(bad);
  report(bad.empty() && wf_ok && checks > 0, "overlap-soundness+cnp-safety", d.str());
}

void fault_recovery() {
  std::vector<std::string> bad;
  Duration worst{0};
  Duration bound{0};
  for (int plc = 1; plc <= 6; ++plc) {
    const RecoveryProbe p = probe_ca_recovery(plc);
    bound = p.bound;
    if (p.local_restored) worst = std::max(worst, *p.local_restored);
    if (p.remote_restored) worst = std::max(worst, *p.remote_restored);
    if (!p.ok()) {
      std::ostringstream e;
      e << p.agent << "@" << p.plc << " local=" << (p.local_restored ? p.local_restored->count() : -1)
        << " remote=" << (p.remote_restored ? p.remote_restored->count() : -1) << " kept=" << p.sessions_kept
        << " data=" << p.local_data_after << "/" << p.remote_data_after;
      bad.push_back(e.str());
    }
  }
  std::ostringstream d;
  d << "6 control agents killed; worst re-registration " << worst.count() << " ms, bound " << bound.count()
    << " ms; sessions resumed without reopening" << first(bad);
  report(bad.empty(), "fault-recovery", d.str());
}

void setpoints() {
  int attempts = 0, accepted = 0, rejected = 0;
  std::vector<std::string> bad;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const SetpointProbe p = probe_setpoint_safety(seed, 400);
    attempts += p.attempts;
    accepted += p.accepted;
    rejected += p.rejected;
    bad.insert(bad.end(), p.problems.begin(), p.problems.end());
    if (p.unanswered) bad.push_back(std::to_string(p.unanswered) + " unanswered");
  }
  std::ostringstream d;
  d << attempts << " random setpoints, " << accepted << " accepted, " << rejected
    << " rejected with the expected reason; " << bad.size() << " wrong verdicts or out-of-bounds values" << first(bad);
  report(bad.empty() && accepted > 0 && rejected > 0, "setpoint-safety", d.str());
}

void determinism() {
  int runs = 0;
  std::vector<std::string> bad;
  std::vector<Scenario> all{table3_scenario(3), fig11_scenario(3)};
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    RandomScenarioOptions opt;
    opt.closes = true;
    opt.kills = seed % 2 == 0;
    opt.spacing = Duration{100};
    all.push_back(random_scenario(seed, opt));
  }
  for (const auto& s : all) {
    const RunResult a = run(s);
    const RunResult b = run(s);
    ++runs;
    if (to_json(a.report).dump() != to_json(b.report).dump()) bad.push_back(s.name + " report differs");
    if (events_to_json(a.events).dump() != events_to_json(b.events).dump()) bad.push_back(s.name + " events differ");
  }
  std::ostringstream d;
  d << runs << " scenarios run twice; reports and event logs byte-identical" << first(bad);
  report(bad.empty(), "determinism", d.str());
}

void codec() {
  std::vector<std::string> bad;
  MessageEnvelope inform;
  inform.performative = Performative::Inform;
  inform.sender = AgentId{"C1", "O1"};
  inform.receiver = AgentId{"R1", "O1"};
  inform.conversation_id = "O1-read-1";
  inform.protocol = Protocol::DataFeed;
  inform.payload = Json{{"op", "read"}, {"var", "temperature"}, {"value", 42.5}, {"quality", "Good"}};
  inform.sent_at = Time{1000};

  int fixtures = 0;
  for (const char* name : {"golden_inform.frame", "golden_cfp.frame", "golden_empty_payload.frame"}) {
    const auto bytes = read_bytes(name);
    try {
      const MessageEnvelope env = wire::decode(bytes);
      ++fixtures;
      if (wire::encode(env) != bytes) bad.push_back(std::string(name) + " does not re-encode identically");
      if (std::string(name) == "golden_inform.frame" && !(env == inform)) bad.push_back("inform decodes wrong");
      if (std::string(name) == "golden_cfp.frame" &&
          !(env.performative == Performative::Cfp && env.sender == AgentId{"GS", "O1"} &&
            env.receiver == AgentId{"GS", "O2"} && env.payload == Json{{"service", "O2.PLC7"}} &&
            env.sent_at == Time{300})) {
        bad.push_back("cfp decodes wrong");
      }
      if (std::string(name) == "golden_empty_payload.frame" && !env.payload.empty()) bad.push_back("payload not empty");
    } catch (const std::exception& e) {
      bad.push_back(std::string(name) + ": " + e.what());
    }
  }
  std::mt19937_64 rng(4242);
  const auto seed_frame = wire::encode(inform);
  int structured = 0, accepted = 0, crashes = 0;
  for (int i = 0; i < 10000; ++i) {
    wire::Bytes frame;
    if (i % 2 == 0) {
      frame = seed_frame;
      for (int k = 0, n = 1 + static_cast<int>(rng() % 8); k < n; ++k) frame[rng() % frame.size()] = static_cast<std::uint8_t>(rng());
      if (rng() % 5 == 0) frame.resize(rng() % frame.size());
    } else {
      frame.resize(rng() % 96);
      for (auto& b : frame) b = static_cast<std::uint8_t>(rng());
    }
    try {
      const auto env = wire::decode(frame);
      ++accepted;
      if (wire::encode(env) != frame) bad.push_back("fuzz: accepted a non-canonical frame");
    } catch (const Error&) {
      ++structured;
    } catch (...) {
      ++crashes;
    }
  }
  std::ostringstream d;
  d << fixtures << "/3 golden frames decode exactly and re-encode identically; 10000 fuzz frames: " << structured
    << " structured errors, " << accepted << " canonical accepts, " << crashes << " crashes" << first(bad);
  report(bad.empty() && fixtures == 3 && crashes == 0, "codec", d.str());
}

}  // namespace

int main() {
  RunResult t3;
  table3(t3);
  hop_oracle();
  monotone(t3);
  soundness();
  fault_recovery();
  setpoints();
  determinism();
  codec();
  std::cout << (failures == 0 ? "all criteria pass" : std::to_string(failures) + " criteria fail") << std::endl;
  return failures == 0 ? 0 : 1;
}
