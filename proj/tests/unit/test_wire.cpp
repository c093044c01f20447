#include "doctest.h"

#include <fstream>
#include <iterator>
#include <random>

#include "orgscada/wire/codec.hpp"
#include "orgscada/wire/sim_network.hpp"

using namespace orgscada;
using namespace std::chrono_literals;

namespace {

wire::Bytes read_fixture(const std::string& name) {
  std::ifstream in(std::string(ORGSCADA_FIXTURES) + "/" + name, std::ios::binary);
  REQUIRE(in.good());
  return wire::Bytes(std::istreambuf_iterator<char>(in), {});
}

MessageEnvelope minimal_inform() {
  MessageEnvelope env;
  env.performative = Performative::Inform;
  env.sender = AgentId{"C1", "O1"};
  env.receiver = AgentId{"R1", "O1"};
  env.conversation_id = "O1-read-1";
  env.protocol = Protocol::DataFeed;
  env.payload = Json{{"op", "read"}, {"var", "temperature"}, {"value", 42.5}, {"quality", "Good"}};
  env.sent_at = Time{1000};
  return env;
}

ErrorCode decode_error(const wire::Bytes& bytes) {
  try {
    wire::decode(bytes);
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("decode unexpectedly succeeded");
  return ErrorCode::InvalidArgument;
}

wire::Bytes frame_of(const std::string& text) {
  wire::Bytes out;
  const auto n = static_cast<std::uint32_t>(text.size());
  out.push_back(static_cast<std::uint8_t>(n >> 24));
  out.push_back(static_cast<std::uint8_t>(n >> 16));
  out.push_back(static_cast<std::uint8_t>(n >> 8));
  out.push_back(static_cast<std::uint8_t>(n));
  out.insert(out.end(), text.begin(), text.end());
  return out;
}

}  // namespace

TEST_CASE("minimal INFORM encodes to the golden frame") {
  CHECK(wire::encode(minimal_inform()) == read_fixture("golden_inform.frame"));
}

TEST_CASE("golden frames decode and re-encode byte-identically") {
  for (const char* name : {"golden_inform.frame", "golden_cfp.frame", "golden_empty_payload.frame"}) {
    CAPTURE(name);
    const auto bytes = read_fixture(name);
    const MessageEnvelope env = wire::decode(bytes);
    CHECK(wire::encode(env) == bytes);
  }
  const MessageEnvelope cfp = wire::decode(read_fixture("golden_cfp.frame"));
  CHECK(cfp.performative == Performative::Cfp);
  CHECK(cfp.protocol == Protocol::ContractNet);
  CHECK(cfp.sender == AgentId{"GS", "O1"});
  CHECK(cfp.payload["service"] == "O2.PLC7");
  CHECK(cfp.sent_at == 300ms);
}

TEST_CASE("decode error paths") {
  CHECK(decode_error({}) == ErrorCode::Truncated);
  CHECK(decode_error({0, 0, 0}) == ErrorCode::Truncated);
  auto frame = wire::encode(minimal_inform());
  frame.pop_back();
  CHECK(decode_error(frame) == ErrorCode::Truncated);
  CHECK(decode_error(frame_of("{not json")) == ErrorCode::MalformedDocument);
  CHECK(decode_error(frame_of("[]")) == ErrorCode::MalformedDocument);

  Json doc = wire::to_document(minimal_inform());
  doc["performative"] = "DANCE";
  CHECK(decode_error(frame_of(doc.dump())) == ErrorCode::UnknownPerformative);

  // Non-canonical spacing is outside the image of encode.
  CHECK(decode_error(frame_of(wire::to_document(minimal_inform()).dump(1))) ==
        ErrorCode::MalformedDocument);

  // Contract Net performative outside a Contract Net conversation.
  doc = wire::to_document(minimal_inform());
  doc["performative"] = "PROPOSE";
  CHECK(decode_error(frame_of(doc.dump())) == ErrorCode::MalformedDocument);

  auto extra = wire::encode(minimal_inform());
  extra.push_back('x');
  CHECK(decode_error(extra) == ErrorCode::MalformedDocument);
}

TEST_CASE("encode rejects oversize payloads and invalid envelopes") {
  MessageEnvelope big = minimal_inform();
  big.payload = Json{{"blob", std::string(17u * 1024u * 1024u, 'a')}};
  try {
    wire::encode(big);
    FAIL("expected PayloadTooLarge");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::PayloadTooLarge);
  }
  MessageEnvelope bad = minimal_inform();
  bad.performative = Performative::Cfp;
  CHECK_THROWS_AS(wire::encode(bad), Error);
}

TEST_CASE("encode/decode identity over random valid envelopes") {
  std::mt19937_64 rng(99);
  const Performative perfs[] = {Performative::Request, Performative::Inform, Performative::Failure,
                                Performative::Subscribe, Performative::Notify};
  for (int i = 0; i < 500; ++i) {
    MessageEnvelope env;
    const bool cnp = rng() % 4 == 0;
    env.protocol = cnp ? Protocol::ContractNet : static_cast<Protocol>(rng() % 5);
    env.performative = cnp ? static_cast<Performative>(2 + rng() % 4) : perfs[rng() % 5];
    if (!cnp && env.protocol == Protocol::ContractNet) env.performative = Performative::Inform;
    env.sender = AgentId{"A" + std::to_string(rng() % 100), "O" + std::to_string(1 + rng() % 9)};
    env.receiver = AgentId{"B" + std::to_string(rng() % 100), "O" + std::to_string(1 + rng() % 9)};
    env.conversation_id = "conv-" + std::to_string(rng());
    env.payload = Json{{"n", static_cast<std::int64_t>(rng() % 100000) - 50000},
                       {"x", static_cast<double>(rng() % 100000) / 7.0},
                       {"s", std::string(rng() % 20, 'q')},
                       {"nested", Json{{"list", Json::array({1, "two", nullptr, true})}}}};
    env.sent_at = Time{static_cast<std::int64_t>(rng() % 1000000)};
    const auto bytes = wire::encode(env);
    const auto back = wire::decode(bytes);
    CHECK(back == env);
    CHECK(wire::encode(back) == bytes);
  }
}

TEST_CASE("fuzz: 10^4 mutated and random frames never crash the decoder") {
  std::mt19937_64 rng(2024);
  const auto seed_frame = wire::encode(minimal_inform());
  int structured_errors = 0;
  for (int i = 0; i < 10000; ++i) {
    wire::Bytes frame;
    if (i % 2 == 0) {
      frame = seed_frame;
      const int flips = 1 + static_cast<int>(rng() % 8);
      for (int k = 0; k < flips; ++k) {
        frame[rng() % frame.size()] = static_cast<std::uint8_t>(rng());
      }
      if (rng() % 5 == 0) frame.resize(rng() % frame.size());
    } else {
      frame.resize(rng() % 64);
      for (auto& b : frame) b = static_cast<std::uint8_t>(rng());
    }
    try {
      const auto env = wire::decode(frame);
      // Anything accepted must be canonical.
      CHECK(wire::encode(env) == frame);
    } catch (const Error&) {
      ++structured_errors;
    }
  }
  CHECK(structured_errors > 9000);
}

TEST_CASE("FrameReader reassembles frames split at arbitrary boundaries") {
  const auto a = wire::encode(minimal_inform());
  const auto b = read_fixture("golden_cfp.frame");
  wire::Bytes stream = a;
  stream.insert(stream.end(), b.begin(), b.end());
  wire::FrameReader reader;
  std::vector<MessageEnvelope> got;
  for (std::size_t i = 0; i < stream.size(); i += 7) {
    const auto n = std::min<std::size_t>(7, stream.size() - i);
    reader.feed(std::span(stream).subspan(i, n));
    while (auto env = reader.next()) got.push_back(*env);
  }
  REQUIRE(got.size() == 2);
  CHECK(got[0] == minimal_inform());
  CHECK(got[1].performative == Performative::Cfp);
  CHECK(reader.buffered() == 0);
}

namespace {

struct Sink : Agent {
  std::vector<std::pair<Time, MessageEnvelope>>* out;
  explicit Sink(std::vector<std::pair<Time, MessageEnvelope>>* o) : out(o) {}
  void on_message(AgentContext& ctx, const MessageEnvelope& msg) override {
    out->emplace_back(ctx.now(), msg);
  }
};

struct TwoOrgs {
  SimScheduler sched;
  SimNetwork net{sched, NetConfig{}};
  Node o1{"O1", sched};
  Node o2{"O2", sched};
  std::vector<std::pair<Time, MessageEnvelope>> at_o1, at_o2;

  TwoOrgs() {
    net.attach(o1);
    net.attach(o2);
    o1.set_factory([this](const AgentSpec&) { return std::make_unique<Sink>(&at_o1); });
    o2.set_factory([this](const AgentSpec&) { return std::make_unique<Sink>(&at_o2); });
    o1.create_agent(AgentSpec{"A", AgentRole::ControlAgent, {}});
    o2.create_agent(AgentSpec{"B", AgentRole::ControlAgent, {}});
  }

  MessageEnvelope msg(const AgentId& from, const AgentId& to, int n) {
    MessageEnvelope env;
    env.performative = Performative::Request;
    env.sender = from;
    env.receiver = to;
    env.conversation_id = "x";
    env.protocol = Protocol::Admin;
    env.payload = Json{{"op", "n"}, {"n", n}};
    return env;
  }
};

}  // namespace

TEST_CASE("sim_send delivers exactly one hop latency later, FIFO per pair") {
  TwoOrgs w;
  w.sched.run_until(1000ms);
  w.o1.dispatch(w.msg({"A", "O1"}, {"B", "O2"}, 1));
  w.sched.run_until(1001ms);
  w.o1.dispatch(w.msg({"A", "O1"}, {"B", "O2"}, 2));
  w.sched.run_until(5000ms);
  REQUIRE(w.at_o2.size() == 2);
  CHECK(w.at_o2[0].first == 1100ms);
  CHECK(w.at_o2[1].first == 1101ms);
  CHECK(w.at_o2[0].second.payload["n"] == 1);
}

TEST_CASE("request/response across two orgs costs two hops") {
  TwoOrgs w;
  w.o1.dispatch(w.msg({"A", "O1"}, {"B", "O2"}, 1));
  w.sched.run_until(100ms);
  REQUIRE(w.at_o2.size() == 1);
  w.o2.dispatch(w.msg({"B", "O2"}, {"A", "O1"}, 2));
  w.sched.run_until(1000ms);
  REQUIRE(w.at_o1.size() == 1);
  CHECK(w.at_o1[0].first == 200ms);
}

TEST_CASE("sim_send to an unrouted org bounces Unroutable; downed links too") {
  TwoOrgs w;
  w.o1.dispatch(w.msg({"A", "O1"}, {"Z", "O3"}, 1));
  w.net.set_link_down("O1", "O2", true);
  w.o1.dispatch(w.msg({"A", "O1"}, {"B", "O2"}, 2));
  w.sched.run_until(1000ms);
  REQUIRE(w.at_o1.size() == 2);
  for (const auto& [t, m] : w.at_o1) {
    CHECK(m.performative == Performative::Failure);
    CHECK(m.payload["reason"] == "Unroutable");
    CHECK(t == 0ms);
  }
  CHECK(w.at_o2.empty());
}

TEST_CASE("remote dead letter returns to the sender over the network") {
  TwoOrgs w;
  w.o1.dispatch(w.msg({"A", "O1"}, {"Gone", "O2"}, 1));
  w.sched.run_until(1000ms);
  REQUIRE(w.at_o1.size() == 1);
  CHECK(w.at_o1[0].first == 200ms);
  CHECK(w.at_o1[0].second.payload["reason"] == "DeadLetter");
}

TEST_CASE("per-pair hop overrides") {
  NetConfig cfg;
  cfg.hop_latency[{"O1", "O2"}] = 250ms;
  CHECK(cfg.hop("O1", "O2") == 250ms);
  CHECK(cfg.hop("O2", "O1") == 100ms);
  CHECK(cfg.hop("O1", "O1") == 0ms);
}
