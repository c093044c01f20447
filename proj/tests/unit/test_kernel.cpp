#include "doctest.h"

#include <random>

#include "orgscada/kernel/fsm.hpp"
#include "orgscada/kernel/node.hpp"
#include "orgscada/wire/sim_network.hpp"

using namespace orgscada;
using namespace std::chrono_literals;

namespace {

struct Inbox {
  std::vector<std::pair<Time, MessageEnvelope>> messages;

  std::vector<MessageEnvelope> with_op(const std::string& op) const {
    std::vector<MessageEnvelope> out;
    for (const auto& [t, m] : messages) {
      if (m.payload.value("op", "") == op) out.push_back(m);
    }
    return out;
  }
};

class Recorder : public Agent {
 public:
  explicit Recorder(Inbox& inbox) : inbox_(inbox) {}
  void on_message(AgentContext& ctx, const MessageEnvelope& msg) override {
    inbox_.messages.emplace_back(ctx.now(), msg);
  }

 private:
  Inbox& inbox_;
};

struct Fixture {
  SimScheduler sched;
  Node node{"O1", sched};
  std::map<std::string, Inbox> inboxes;

  Fixture() {
    node.set_factory([this](const AgentSpec& spec) -> std::unique_ptr<Agent> {
      if (spec.role == AgentRole::GlobalSupervisor) return nullptr;
      return std::make_unique<Recorder>(inboxes[spec.local_name]);
    });
  }

  AgentId make(const std::string& name, AgentRole role = AgentRole::ControlAgent) {
    return node.create_agent(AgentSpec{name, role, Json::object()});
  }

  ServiceDescriptor service(const std::string& name, const AgentId& provider) {
    return ServiceDescriptor{name, ServiceType::ProcessAccess, provider, provider.org_name, Time{0}};
  }

  void settle() { sched.run_until(sched.now()); }
};

MessageEnvelope request(const AgentId& from, const AgentId& to, int n) {
  MessageEnvelope env;
  env.performative = Performative::Request;
  env.sender = from;
  env.receiver = to;
  env.conversation_id = "c";
  env.protocol = Protocol::DataFeed;
  env.payload = Json{{"op", "seq"}, {"n", n}};
  return env;
}

}  // namespace

TEST_CASE("create_agent renders name@org and registers in the white pages") {
  Fixture f;
  const AgentId id = f.make("LS-CA", AgentRole::LocalSupervisor);
  CHECK(id.str() == "LS-CA@O1");
  CHECK(f.node.ams_lookup("LS-CA") == id);
  CHECK(f.node.spec_of(id).role == AgentRole::LocalSupervisor);
}

TEST_CASE("create_agent rejects a live duplicate name") {
  Fixture f;
  f.make("LS-CA");
  try {
    f.make("LS-CA");
    FAIL("expected DuplicateName");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::DuplicateName);
  }
}

TEST_CASE("create_agent reports InvalidRole when no behaviour exists for the role") {
  Fixture f;
  try {
    f.make("GS", AgentRole::GlobalSupervisor);
    FAIL("expected InvalidRole");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::InvalidRole);
  }
}

TEST_CASE("destroy_agent removes white and yellow page entries") {
  Fixture f;
  const AgentId c1 = f.make("C1");
  f.node.df_register(f.service("O1.PLC1", c1));
  CHECK(f.node.df_search("O1.PLC1").size() == 1);
  f.node.destroy_agent(c1);
  CHECK(f.node.df_search("O1.PLC1").empty());
  CHECK_FALSE(f.node.is_live(c1));
  try {
    f.node.ams_lookup("C1");
    FAIL("expected NotFound");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::NotFound);
  }
  try {
    f.node.destroy_agent(c1);
    FAIL("expected UnknownAgent");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::UnknownAgent);
  }
}

TEST_CASE("destroying a remotely registered agent deregisters it from the peer DF") {
  SimScheduler sched;
  SimNetwork net(sched, NetConfig{});
  Node o1("O1", sched);
  Node o2("O2", sched);
  net.attach(o1);
  net.attach(o2);
  Inbox inbox;
  o2.set_factory([&](const AgentSpec&) { return std::make_unique<Recorder>(inbox); });
  const AgentId c7 = o2.create_agent(AgentSpec{"C7", AgentRole::ControlAgent, {}});
  o1.df_register(ServiceDescriptor{"O2.PLC7", ServiceType::ProcessAccess, c7, "O2", Time{0}});
  o2.note_remote_registration("C7", RemoteRegistration{"O1", "O2.PLC7"});
  CHECK(o2.is_registered_at("O1", "O2.PLC7", "C7"));

  const auto remote = o2.destroy_agent(c7);
  REQUIRE(remote.size() == 1);
  CHECK(remote[0].org == "O1");
  sched.run_until(99ms);
  CHECK(o1.df_search("O2.PLC7").size() == 1);
  sched.run_until(100ms);
  CHECK(o1.df_search("O2.PLC7").empty());
}

TEST_CASE("ams_lookup misses an agent between destroy and re-creation") {
  Fixture f;
  const AgentId c1 = f.make("C1");
  f.node.destroy_agent(c1);
  CHECK_THROWS_AS(f.node.ams_lookup("C1"), Error);
  f.make("C1");
  CHECK(f.node.ams_lookup("C1") == c1);
}

TEST_CASE("df_register, search and wildcard ordering") {
  Fixture f;
  for (int j = 1; j <= 6; ++j) {
    const AgentId c = f.make("C" + std::to_string(j));
    f.sched.run_until(Time{j * 10});
    f.node.df_register(f.service("O1.PLC" + std::to_string(j), c));
  }
  CHECK(f.node.df_search("O1.PLC1").size() == 1);
  CHECK(f.node.df_search("O2.PLC7").empty());
  const auto all = f.node.df_search("O1.*");
  REQUIRE(all.size() == 6);
  for (std::size_t i = 1; i < all.size(); ++i) {
    CHECK(all[i - 1].registered_at <= all[i].registered_at);
  }
  CHECK(all.front().service_name == "O1.PLC1");
}

TEST_CASE("df_register accepts a remote provider and rejects exact duplicates") {
  Fixture f;
  const AgentId remote{"C7", "O2"};
  f.node.df_register(f.service("O2.PLC7", remote));
  CHECK(f.node.df_search("O2.PLC7").at(0).provider == remote);
  try {
    f.node.df_register(f.service("O2.PLC7", remote));
    FAIL("expected DuplicateEntry");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::DuplicateEntry);
  }
}

TEST_CASE("df_register rejects a dead local provider and a malformed service name") {
  Fixture f;
  CHECK_THROWS_AS(f.node.df_register(f.service("O1.PLC1", AgentId{"ghost", "O1"})), Error);
  const AgentId c = f.make("C1");
  CHECK_THROWS_AS(f.node.df_register(f.service("PLC1", c)), Error);
  CHECK_THROWS_AS(f.node.df_register(f.service("O0.PLC1", c)), Error);
}

TEST_CASE("df_subscribe delivers existing matches immediately and future ones once") {
  Fixture f;
  const AgentId ra = f.make("R1", AgentRole::RemoteOperatorAgent);
  const AgentId c1 = f.make("C1");
  const AgentId c2 = f.make("C2");
  f.node.df_register(f.service("O1.PLC1", c1));
  f.node.df_register(f.service("O1.PLC2", c2));
  f.node.df_subscribe("O1.*", ra);
  f.settle();
  CHECK(f.inboxes["R1"].with_op("df-notify").size() == 2);

  f.node.df_subscribe("O2.PLC8", ra);
  f.node.df_register(f.service("O2.PLC8", AgentId{"C8", "O2"}));
  f.settle();
  CHECK(f.inboxes["R1"].with_op("df-notify").size() == 3);
}

TEST_CASE("duplicate subscriptions get distinct ids but notifications are deduplicated") {
  Fixture f;
  const AgentId ra = f.make("R1", AgentRole::RemoteOperatorAgent);
  const auto a = f.node.df_subscribe("O2.PLC8", ra);
  const auto b = f.node.df_subscribe("O2.PLC8", ra);
  CHECK(a != b);
  f.node.df_register(f.service("O2.PLC8", AgentId{"C8", "O2"}));
  f.settle();
  CHECK(f.inboxes["R1"].with_op("df-notify").size() == 1);
}

TEST_CASE("df_subscribe requires a live subscriber") {
  Fixture f;
  try {
    f.node.df_subscribe("*", AgentId{"nobody", "O1"});
    FAIL("expected UnknownAgent");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::UnknownAgent);
  }
}

TEST_CASE("subscriptions are dropped when the subscriber is destroyed") {
  Fixture f;
  const AgentId ra = f.make("R1", AgentRole::RemoteOperatorAgent);
  f.node.df_subscribe("*", ra);
  CHECK(f.node.df().subscription_count() == 1);
  f.node.destroy_agent(ra);
  CHECK(f.node.df().subscription_count() == 0);
}

TEST_CASE("subscription exactness over random operation sequences") {
  std::mt19937_64 rng(12345);
  for (int trial = 0; trial < 50; ++trial) {
    Fixture f;
    std::vector<AgentId> subscribers;
    for (int i = 0; i < 3; ++i) subscribers.push_back(f.make("R" + std::to_string(i)));
    std::vector<AgentId> providers;
    for (int i = 1; i <= 4; ++i) providers.push_back(AgentId{"C" + std::to_string(i), "O2"});
    const std::vector<std::string> patterns = {"O2.PLC1", "O2.*", "*", "O2.PLC3", "O3.*"};
    // Expected registrations notifications per subscriber, computed independently.
    std::map<std::string, int> expected;
    std::map<std::string, std::set<std::string>> patterns_of;
    std::set<std::pair<std::string, std::string>> registered;
    for (int step = 0; step < 40; ++step) {
      const int op = static_cast<int>(rng() % 3);
      const auto& sub = subscribers[rng() % subscribers.size()];
      const auto& prov = providers[rng() % providers.size()];
      const std::string svc = "O2.PLC" + std::to_string(1 + rng() % 4);
      auto matches = [&](const std::string& who, const std::string& name) {
        for (const auto& p : patterns_of[who]) {
          if (pattern_matches(p, name)) return true;
        }
        return false;
      };
      if (op == 0) {
        const auto& pattern = patterns[rng() % patterns.size()];
        // Entries already present and newly matched are delivered now.
        for (const auto& [s, p] : registered) {
          if (!matches(sub.local_name, s) && pattern_matches(pattern, s)) ++expected[sub.local_name];
        }
        patterns_of[sub.local_name].insert(pattern);
        f.node.df_subscribe(pattern, sub);
      } else if (op == 1 && !registered.contains({svc, prov.local_name})) {
        registered.insert({svc, prov.local_name});
        for (const auto& s : subscribers) {
          if (matches(s.local_name, svc)) ++expected[s.local_name];
        }
        f.node.df_register(f.service(svc, prov));
      } else if (op == 2 && registered.contains({svc, prov.local_name})) {
        registered.erase({svc, prov.local_name});
        f.node.df_deregister(svc, prov);
      }
    }
    f.settle();
    for (const auto& s : subscribers) {
      int got = 0;
      for (const auto& m : f.inboxes[s.local_name].with_op("df-notify")) {
        if (m.payload["event"] == "registered") ++got;
      }
      CHECK(got == expected[s.local_name]);
    }
  }
}

TEST_CASE("dispatch: local delivery in the same tick, FIFO per pair") {
  Fixture f;
  const AgentId a = f.make("A");
  const AgentId b = f.make("B");
  f.sched.run_until(5ms);
  for (int n = 0; n < 3; ++n) f.node.dispatch(request(a, b, n));
  f.settle();
  const auto& got = f.inboxes["B"].messages;
  REQUIRE(got.size() == 3);
  for (int n = 0; n < 3; ++n) {
    CHECK(got[n].first == 5ms);
    CHECK(got[n].second.payload["n"] == n);
  }
}

TEST_CASE("dispatch to a destroyed agent returns FAILURE DeadLetter to the sender") {
  Fixture f;
  const AgentId a = f.make("A");
  const AgentId b = f.make("B");
  f.node.destroy_agent(b);
  f.node.dispatch(request(a, b, 1));
  f.settle();
  const auto& got = f.inboxes["A"].messages;
  REQUIRE(got.size() == 1);
  CHECK(got[0].second.performative == Performative::Failure);
  CHECK(got[0].second.payload["reason"] == "DeadLetter");
}

TEST_CASE("dispatch to an unknown organization returns FAILURE Unroutable") {
  Fixture f;
  const AgentId a = f.make("A");
  f.node.dispatch(request(a, AgentId{"X", "O9"}, 1));
  f.settle();
  REQUIRE(f.inboxes["A"].messages.size() == 1);
  CHECK(f.inboxes["A"].messages[0].second.payload["reason"] == "Unroutable");
}

TEST_CASE("crashed agents keep their white-page entry but handle nothing") {
  Fixture f;
  const AgentId a = f.make("A");
  const AgentId b = f.make("B");
  f.node.crash_agent(b);
  CHECK(f.node.ams_lookup("B") == b);
  f.node.dispatch(request(a, b, 1));
  f.settle();
  CHECK(f.inboxes["B"].messages.empty());
  CHECK(f.inboxes["A"].messages.empty());
}

TEST_CASE("ping requests are answered by the runtime") {
  Fixture f;
  const AgentId a = f.make("A");
  const AgentId b = f.make("B");
  MessageEnvelope ping;
  ping.performative = Performative::Request;
  ping.sender = a;
  ping.receiver = b;
  ping.conversation_id = "hb";
  ping.protocol = Protocol::Admin;
  ping.payload = Json{{"op", "ping"}};
  f.node.dispatch(ping);
  f.settle();
  CHECK(f.inboxes["A"].with_op("pong").size() == 1);
  CHECK(f.inboxes["B"].messages.empty());
}

TEST_CASE("model principle: white-page soundness over random create/destroy") {
  std::mt19937_64 rng(7);
  Fixture f;
  std::set<std::string> live;
  const AgentId sender = f.make("S");
  for (int step = 0; step < 300; ++step) {
    const std::string name = "N" + std::to_string(rng() % 8);
    if (live.contains(name)) {
      f.node.destroy_agent(AgentId{name, "O1"});
      live.erase(name);
    } else {
      f.make(name);
      live.insert(name);
    }
    const std::string probe = "N" + std::to_string(rng() % 8);
    bool found = true;
    try {
      f.node.ams_lookup(probe);
    } catch (const Error&) {
      found = false;
    }
    CHECK(found == live.contains(probe));
    if (found) {
      const auto before = f.inboxes["S"].messages.size();
      f.node.dispatch(request(sender, AgentId{probe, "O1"}, step));
      f.settle();
      CHECK(f.inboxes["S"].messages.size() == before);
    }
  }
}

TEST_CASE("SimScheduler runs equal-time events in posting order") {
  SimScheduler s;
  std::vector<int> order;
  s.post_at(10ms, [&] { order.push_back(2); });
  s.post_at(5ms, [&] { order.push_back(1); });
  s.post_at(10ms, [&] { order.push_back(3); });
  s.run_until(20ms);
  CHECK(order == std::vector<int>{1, 2, 3});
  CHECK(s.now() == 20ms);
}

TEST_CASE("Fsm transitions and halting") {
  Fsm fsm("Idle", {"Done"});
  fsm.add("Idle", "start", "Running").add("Running", "finish", "Done");
  CHECK(fsm.state() == "Idle");
  CHECK_FALSE(fsm.can_fire("finish"));
  CHECK_THROWS_AS(fsm.fire("finish"), Error);
  fsm.fire("start");
  fsm.fire("finish");
  CHECK(fsm.halted());
  CHECK(fsm.states() == std::set<std::string>{"Idle", "Running", "Done"});
  CHECK_THROWS_AS(fsm.add("Done", "again", "Idle"), Error);
}

TEST_CASE("parse_service_name") {
  const auto s = parse_service_name("O2.PLC7");
  REQUIRE(s);
  CHECK(s->org_index == 2);
  CHECK(s->plc_index == 7);
  CHECK(s->owner_org() == "O2");
  CHECK_FALSE(parse_service_name("O0.PLC1"));
  CHECK_FALSE(parse_service_name("O1.PLC"));
  CHECK_FALSE(parse_service_name("O1.PLC01"));
  CHECK_FALSE(parse_service_name("X1.PLC1"));
}
