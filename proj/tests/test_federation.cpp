#include <doctest.h>

#include <future>
#include <random>
#include <thread>

#include "sagin/federation.hpp"
#include "sagin/serialize.hpp"

using namespace sagin;
using namespace sagin::fed;

namespace {

ParamSet scalar(float v) {
  ParamSet p;
  p.tensors.push_back({{1}, {v}});
  return p;
}

ParamSet random_set(std::mt19937_64& rng, float scale = 1.0f) {
  std::normal_distribution<float> g(0.0f, scale);
  ParamSet p;
  p.tensors.push_back({{3, 2}, nn::TensorData<float>(6)});
  p.tensors.push_back({{3}, nn::TensorData<float>(3)});
  for (auto& t : p.tensors)
    for (auto& x : t.data) x = g(rng);
  return p;
}

FederationServer soft_server(std::vector<std::uint32_t> roster, double eps, std::uint64_t layout) {
  FederationConfig c;
  c.epsilon = eps;
  c.roster = std::move(roster);
  return FederationServer(c, {{PayloadKind::kTrend1, layout}, {PayloadKind::kTrend2, layout}});
}

}  // namespace

TEST_CASE("soft aggregation endpoints") {
  std::mt19937_64 rng(1);
  const ParamSet g = random_set(rng), l = random_set(rng);
  CHECK(aggregate_soft(g, l, 1.0) == l);
  CHECK(aggregate_soft(g, l, 0.0) == g);
}

TEST_CASE("soft aggregation stays between its inputs") {
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int i = 0; i < 100; ++i) {
    const ParamSet g = random_set(rng), l = random_set(rng);
    const ParamSet m = aggregate_soft(g, l, u(rng));
    for (std::size_t t = 0; t < m.tensors.size(); ++t) {
      for (std::size_t k = 0; k < m.tensors[t].data.size(); ++k) {
        const float lo = std::min(g.tensors[t].data[k], l.tensors[t].data[k]);
        const float hi = std::max(g.tensors[t].data[k], l.tensors[t].data[k]);
        CHECK(m.tensors[t].data[k] >= lo);
        CHECK(m.tensors[t].data[k] <= hi);
      }
    }
  }
}

TEST_CASE("three-agent scalar chain") {
  // 0 -> 0.5 -> 1.25 -> 2.125 with eps = 1/2 and locals 1, 2, 3
  ParamSet g = scalar(0.0f);
  for (float l : {1.0f, 2.0f, 3.0f}) g = aggregate_soft(g, scalar(l), 0.5);
  CHECK(g.tensors[0].data[0] == 2.125f);

  FederationServer s = soft_server({0, 1, 2}, 0.5, scalar(0).layout_id());
  s.set_globals(scalar(0.0f), scalar(10.0f));
  std::vector<RoundMessage> msgs;
  for (std::uint32_t a : {2u, 0u, 1u}) {
    msgs.push_back(make_message(0, a, PayloadKind::kTrend1, scalar(static_cast<float>(a + 1))));
    msgs.push_back(make_message(0, a, PayloadKind::kTrend2, scalar(10.0f)));
  }
  const Distribution d = s.run_round(msgs);
  CHECK(d.params.at(PayloadKind::kTrend1).tensors[0].data[0] == 2.125f);
  CHECK(d.params.at(PayloadKind::kTrend2).tensors[0].data[0] == 10.0f);
  CHECK(s.global(PayloadKind::kTrend1) == scalar(2.125f));
  CHECK(d.outgoing.size() == 2);
  CHECK(d.outgoing[0].agent == kServerId);
  CHECK(s.round() == 1);
}

TEST_CASE("mean aggregation matches a longhand sum") {
  std::mt19937_64 rng(3);
  std::vector<ParamSet> locals;
  for (int i = 0; i < 5; ++i) locals.push_back(random_set(rng, 10.0f));
  const ParamSet m = aggregate_mean(locals);
  for (std::size_t t = 0; t < m.tensors.size(); ++t) {
    for (std::size_t k = 0; k < m.tensors[t].data.size(); ++k) {
      float sum = 0.0f;
      for (const auto& l : locals) sum += l.tensors[t].data[k];
      CHECK(m.tensors[t].data[k] == sum / 5.0f);
    }
  }
  CHECK_THROWS(aggregate_mean({}));
  std::vector<ParamSet> mixed{random_set(rng), scalar(1)};
  CHECK_THROWS(aggregate_mean(mixed));
}

TEST_CASE("full-model payload splits back into its parts") {
  std::mt19937_64 rng(4);
  const ParamSet a = random_set(rng), b = scalar(3), c = random_set(rng);
  const ParamSet full = concat_model({&a, &b, &c});
  CHECK(full.tensors.size() == 5);
  const auto parts = split_model(full, {2, 1, 2});
  CHECK(parts[0] == a);
  CHECK(parts[1] == b);
  CHECK(parts[2] == c);
  CHECK_THROWS(split_model(full, {2, 2}));
}

TEST_CASE("message encoding") {
  const RoundMessage m = make_message(0x01020304, 7, PayloadKind::kTrend2, scalar(1.5f));
  const auto bytes = encode(m);
  CHECK(bytes[0] == 1);
  CHECK(bytes[3] == 4);
  CHECK(bytes[7] == 7);
  CHECK(bytes[8] == 1);
  CHECK(decode(bytes) == m);
  auto bad = bytes;
  bad[8] = 3;
  CHECK_THROWS(decode(bad));
  CHECK_THROWS(decode(std::span(bytes).first(5)));
  const auto framed = frame(m);
  CHECK(framed.size() == bytes.size() + 4);
  CHECK(framed[3] == bytes.size() % 256);
}

TEST_CASE("rounds reject malformed message sets without changing state") {
  const auto layout = scalar(0).layout_id();
  FederationServer s = soft_server({0, 1}, 0.5, layout);
  s.set_globals(scalar(0), scalar(0));
  auto full = [](std::uint32_t round) {
    std::vector<RoundMessage> v;
    for (std::uint32_t a : {0u, 1u}) {
      v.push_back(make_message(round, a, PayloadKind::kTrend1, scalar(1)));
      v.push_back(make_message(round, a, PayloadKind::kTrend2, scalar(1)));
    }
    return v;
  };
  auto missing = full(0);
  missing.pop_back();
  CHECK_THROWS_AS(s.run_round(missing), RoundError);
  auto dup = full(0);
  dup.push_back(dup[0]);
  CHECK_THROWS_AS(s.run_round(dup), RoundError);
  CHECK_THROWS_AS(s.run_round(full(1)), RoundError);
  auto foreign = full(0);
  foreign[0].agent = 9;
  CHECK_THROWS_AS(s.run_round(foreign), RoundError);
  auto wrong_kind = full(0);
  wrong_kind[0].kind = PayloadKind::kFullModel;
  CHECK_THROWS_AS(s.run_round(wrong_kind), RoundError);
  auto wrong_layout = full(0);
  std::mt19937_64 rng(1);
  wrong_layout[0].payload = nn::serialize(random_set(rng));
  CHECK_THROWS(s.run_round(wrong_layout));

  CHECK(s.round() == 0);
  CHECK(s.global(PayloadKind::kTrend1) == scalar(0));
  s.run_round(full(0));
  CHECK(s.global(PayloadKind::kTrend1) == scalar(0.75f));
}

TEST_CASE("server modes constrain payload kinds") {
  FederationConfig c;
  c.roster = {0};
  CHECK_THROWS(FederationServer(c, {{PayloadKind::kFullModel, 1}}));
  c.mode = Mode::kFedAvgMean;
  CHECK_THROWS(FederationServer(c, {{PayloadKind::kTrend1, 1}}));
  CHECK_NOTHROW(FederationServer(c, {{PayloadKind::kFullModel, 1}}));
  c.roster = {0, 0};
  CHECK_THROWS(FederationServer(c, {{PayloadKind::kFullModel, 1}}));
  c.roster = {0};
  c.epsilon = 0.0;
  CHECK_THROWS(c.validate());
}

TEST_CASE("soft round without globals is refused") {
  FederationServer s = soft_server({0}, 0.5, scalar(0).layout_id());
  CHECK_THROWS_AS(s.run_round({}), RoundError);
}

TEST_CASE("fedavg round averages full models") {
  FederationConfig c;
  c.roster = {0, 1, 2};
  c.mode = Mode::kFedAvgMean;
  FederationServer s(c, {{PayloadKind::kFullModel, scalar(0).layout_id()}});
  std::vector<RoundMessage> msgs;
  for (std::uint32_t a : {0u, 1u, 2u}) msgs.push_back(make_message(0, a, PayloadKind::kFullModel, scalar(a * 3.0f)));
  const Distribution d = s.run_round(msgs);
  CHECK(d.params.at(PayloadKind::kFullModel) == scalar(3.0f));
}

TEST_CASE("observer sees every message in and out") {
  FederationServer s = soft_server({0, 1}, 0.5, scalar(0).layout_id());
  s.set_globals(scalar(0), scalar(0));
  std::vector<RoundMessage> seen;
  s.set_observer([&](const RoundMessage& m) { seen.push_back(m); });
  std::vector<RoundMessage> msgs;
  for (std::uint32_t a : {0u, 1u}) {
    msgs.push_back(make_message(0, a, PayloadKind::kTrend1, scalar(1)));
    msgs.push_back(make_message(0, a, PayloadKind::kTrend2, scalar(1)));
  }
  s.run_round(msgs);
  CHECK(seen.size() == 6);
  for (const auto& m : seen) CHECK(m.kind != PayloadKind::kFullModel);
}

TEST_CASE("a round over loopback TCP matches the in-process round") {
  const auto layout = scalar(0).layout_id();
  FederationServer net = soft_server({0, 1, 2}, 0.5, layout);
  FederationServer local = soft_server({0, 1, 2}, 0.5, layout);
  net.set_globals(scalar(0), scalar(4));
  local.set_globals(scalar(0), scalar(4));
  std::vector<std::vector<RoundMessage>> per_agent(3);
  std::vector<RoundMessage> all;
  for (std::uint32_t a = 0; a < 3; ++a) {
    per_agent[a].push_back(make_message(0, a, PayloadKind::kTrend1, scalar(a + 1.0f)));
    per_agent[a].push_back(make_message(0, a, PayloadKind::kTrend2, scalar(-1.0f * a)));
    all.insert(all.end(), per_agent[a].begin(), per_agent[a].end());
  }
  TcpListener listener;
  auto server = std::async(std::launch::async, [&] { return serve_round(net, listener, 2); });
  std::vector<std::future<std::vector<RoundMessage>>> clients;
  for (std::uint32_t a = 0; a < 3; ++a) {
    // connect one at a time so accept order follows the roster
    clients.push_back(std::async(std::launch::async, [&, a] {
      return exchange_round(listener.port(), per_agent[a], 2, std::chrono::milliseconds(5000));
    }));
    std::this_thread::sleep_for(std::chrono::milliseconds(20));
  }
  const Distribution d = server.get();
  const Distribution expected = local.run_round(all);
  CHECK(d.params == expected.params);
  for (auto& c : clients) {
    const auto replies = c.get();
    REQUIRE(replies.size() == 2);
    CHECK(replies == expected.outgoing);
  }
}

TEST_CASE("connecting to a closed port times out") {
  std::uint16_t port = 0;
  {
    TcpListener l;
    port = l.port();
  }
  CHECK_THROWS(TcpStream::connect(port, std::chrono::milliseconds(200)));
}
