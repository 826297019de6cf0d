#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <set>

#include "sagin/ddqn.hpp"
#include "sagin/replay.hpp"
#include "sagin/sac.hpp"

using namespace sagin;
using namespace sagin::agent;

namespace {

// Network whose output is the bias of the last layer regardless of input.
ParamSet constant_net(const NetSpec& spec, std::vector<float> out) {
  ParamSet p = nn::zero_params<float>(spec);
  p.tensors.back().data.assign(out.begin(), out.end());
  return p;
}

SacConfig small_sac() {
  SacConfig c;
  c.hidden = {4};
  c.batch_size = 2;
  c.warmup = 2;
  c.replay_capacity = 16;
  return c;
}

Transition make_t(float reward, bool terminal, float x = 0.0f) {
  Transition t;
  t.obs = Observation::Constant(3, x);
  t.next_obs = Observation::Constant(3, -x);
  t.reward = reward;
  t.terminal = terminal;
  return t;
}

// pi = (1/4, 3/4); local and global trends both give min(Q1, Q2) = (1, 1/2).
SacAgent worksheet_agent() {
  SacAgent a(3, 2, small_sac(), 1);
  a.set_policy(constant_net(a.policy_spec(), {0.0f, std::log(3.0f)}));
  a.set_trends(constant_net(a.trend_spec(), {1.0f, 2.0f}), constant_net(a.trend_spec(), {1.5f, 0.5f}));
  a.set_global_trends(constant_net(a.trend_spec(), {1.0f, 2.0f}), constant_net(a.trend_spec(), {1.5f, 0.5f}));
  return a;
}

}  // namespace

TEST_CASE("soft value worksheet") {
  const SacAgent a = worksheet_agent();
  const double v = 0.25 * (1.0 - std::log(0.25)) + 0.75 * (0.5 - std::log(0.75));
  CHECK(a.soft_value(Observation::Zero(3)) == doctest::Approx(v).epsilon(1e-6));
}

TEST_CASE("losses agree with a longhand evaluation") {
  SacAgent a = worksheet_agent();
  std::vector<Transition> ts{make_t(1.0f, false, 0.5f), make_t(-2.0f, true, -0.3f)};
  const Batch b = [&] {
    ts[0].action = 1;
    ts[1].action = 0;
    return make_batch(ts);
  }();
  const double v = 0.25 * (1.0 - std::log(0.25)) + 0.75 * (0.5 - std::log(0.75));
  const double y0 = 1.0 + 0.99 * v;
  const double y1 = -2.0;
  const double l1 = (0.5 * std::pow(2.0 - y0, 2) + 0.5 * std::pow(1.0 - y1, 2)) / 2;
  const double l2 = (0.5 * std::pow(0.5 - y0, 2) + 0.5 * std::pow(1.5 - y1, 2)) / 2;
  CHECK(a.trend_loss(b) == doctest::Approx((l1 + l2) / 2).epsilon(1e-5));

  const double j = 0.25 * (std::log(0.25) - 1.0) + 0.75 * (std::log(0.75) - 0.5);
  CHECK(a.policy_loss(b) == doctest::Approx(j).epsilon(1e-5));

  const double h = -(0.25 * std::log(0.25) + 0.75 * std::log(0.75));
  CHECK(a.alpha_loss(b) == doctest::Approx(1.0 * (h + 4.0)).epsilon(1e-5));
  a.set_log_alpha(std::log(0.5));
  CHECK(a.alpha_loss(b) == doctest::Approx(0.5 * (h + 4.0)).epsilon(1e-5));
}

TEST_CASE("policy updates lower the policy loss on a fixed batch") {
  SacConfig c = small_sac();
  c.lr = 1e-2f;
  SacAgent a(3, 3, c, 5);
  a.set_trends(constant_net(a.trend_spec(), {0.0f, 3.0f, 1.0f}), constant_net(a.trend_spec(), {0.5f, 2.5f, 1.0f}));
  std::vector<Transition> ts{make_t(0.0f, false, 0.2f), make_t(0.0f, false, -0.7f)};
  const Batch b = make_batch(ts);
  const double before = a.policy_loss(b);
  for (int i = 0; i < 100; ++i) a.policy_update(b);
  // minimum of sum pi (log pi - q) is -log sum exp(q), with q = min of the trends
  CHECK(a.policy_loss(b) < before - 0.4);
  CHECK(a.policy_loss(b) == doctest::Approx(-std::log(1 + std::exp(2.5) + std::exp(1.0))).epsilon(1e-3));
  // the best trend value wins most of the mass
  CHECK(a.select_action(Observation::Constant(3, 0.2f), ActionMode::kGreedy) == 1);
}

TEST_CASE("temperature falls while entropy exceeds its target") {
  SacAgent a = worksheet_agent();
  const Batch b = make_batch({make_t(0.0f, false), make_t(0.0f, false)});
  const double before = a.alpha();
  for (int i = 0; i < 10; ++i) a.alpha_update(b);
  CHECK(a.alpha() < before);
}

TEST_CASE("trend updates fit a fixed target") {
  SacConfig c = small_sac();
  c.gamma = 0.0;
  c.lr = 1e-2f;
  SacAgent a(3, 2, c, 2);
  std::vector<Transition> ts{make_t(1.0f, true, 0.5f), make_t(-1.0f, true, -0.5f)};
  ts[0].action = 0;
  ts[1].action = 0;
  const Batch b = make_batch(ts);
  for (int i = 0; i < 500; ++i) a.trend_update(b);
  CHECK(a.trend_loss(b) < 1e-3);
}

TEST_CASE("updates refuse undersized batches") {
  SacConfig c = small_sac();
  c.batch_size = 4;
  c.replay_capacity = 16;
  SacAgent a(3, 2, c, 1);
  const Batch b = make_batch({make_t(0.0f, false)});
  CHECK_THROWS_AS(a.trend_update(b), std::invalid_argument);
  CHECK_THROWS_AS(a.policy_update(b), std::invalid_argument);
  CHECK_NOTHROW(a.trend_loss(b));
}

TEST_CASE("action selection") {
  SacAgent a = worksheet_agent();
  int ones = 0;
  const int n = 20000;
  for (int i = 0; i < n; ++i) ones += a.select_action(Observation::Zero(3), ActionMode::kSample);
  CHECK(static_cast<double>(ones) / n == doctest::Approx(0.75).epsilon(0.02));
  CHECK(a.select_action(Observation::Zero(3), ActionMode::kGreedy) == 1);

  SacAgent tie(3, 4, small_sac(), 1);
  tie.set_policy(constant_net(tie.policy_spec(), {0, 2, 2, 1}));
  CHECK(tie.select_action(Observation::Zero(3), ActionMode::kGreedy) == 1);
}

TEST_CASE("train_step waits for warmup") {
  SacConfig c = small_sac();
  c.warmup = 5;
  SacAgent a(3, 2, c, 1);
  for (int i = 0; i < 4; ++i) {
    a.remember(make_t(1.0f, false));
    CHECK_FALSE(a.train_step().has_value());
  }
  a.remember(make_t(1.0f, false));
  CHECK(a.train_step().has_value());
  CHECK(a.train_steps() == 1);
}

TEST_CASE("federated targets only change when set") {
  SacAgent a(3, 2, small_sac(), 1);
  for (int i = 0; i < 4; ++i) a.remember(make_t(1.0f, false, 0.1f * i));
  const ParamSet g = a.global_trend(0);
  for (int i = 0; i < 5; ++i) a.train_step();
  CHECK(a.global_trend(0) == g);
  CHECK_FALSE(a.trend(0) == g);

  SacConfig c = small_sac();
  c.target_mode = TargetMode::kLocalSoft;
  c.target_interval = 1;
  c.target_tau = 0.5;
  SacAgent b(3, 2, c, 1);
  for (int i = 0; i < 4; ++i) b.remember(make_t(1.0f, false, 0.1f * i));
  const ParamSet before = b.global_trend(0);
  b.train_step();
  CHECK_FALSE(b.global_trend(0) == before);
}

TEST_CASE("checkpoints round-trip") {
  SacAgent a(3, 2, small_sac(), 4);
  for (int i = 0; i < 4; ++i) a.remember(make_t(1.0f, false, 0.1f * i));
  a.train_step();
  const std::string path = "sac_checkpoint_test.bin";
  a.save_checkpoint(path);
  SacAgent b(3, 2, small_sac(), 99);
  b.load_checkpoint(path);
  CHECK(b.policy() == a.policy());
  CHECK(b.trend(1) == a.trend(1));
  CHECK(b.global_trend(0) == a.global_trend(0));
  CHECK(b.log_alpha() == a.log_alpha());
  CHECK(b.train_steps() == 1);
  SacAgent c(4, 2, small_sac(), 1);
  CHECK_THROWS(c.load_checkpoint(path));
  std::remove(path.c_str());
}

TEST_CASE("entropy of a uniform column") {
  MatrixXf p = MatrixXf::Constant(4, 2, 0.25f);
  const VectorXf h = column_entropy(p);
  CHECK(h[0] == doctest::Approx(std::log(4.0)));
  CHECK(h[1] == doctest::Approx(std::log(4.0)));
}

TEST_CASE("replay ring buffer") {
  ReplayMemory r(3, 1);
  CHECK_THROWS_AS(r.sample(1), std::length_error);
  for (int i = 0; i < 5; ++i) r.push(make_t(static_cast<float>(i), false), i);
  CHECK(r.size() == 3);
  // oldest two were overwritten in place
  CHECK(r.at(0).reward == 3.0f);
  CHECK(r.at(1).reward == 4.0f);
  CHECK(r.at(2).reward == 2.0f);
  CHECK(r.source_at(0) == 3);
  CHECK_THROWS_AS(r.sample(4), std::length_error);
  std::set<int> drawn;
  for (int k = 0; k < 50; ++k) {
    const Batch b = r.sample(3);
    CHECK(b.size() == 3);
    for (int i = 0; i < b.size(); ++i) {
      CHECK(b.rewards[i] >= 2.0f);
      CHECK(b.sources[i] == static_cast<int>(b.rewards[i]));
      drawn.insert(b.sources[i]);
    }
  }
  CHECK(drawn.size() == 3);
}

TEST_CASE("replay sampling is seeded") {
  ReplayMemory a(10, 7), b(10, 7);
  for (int i = 0; i < 10; ++i) {
    a.push(make_t(static_cast<float>(i), false));
    b.push(make_t(static_cast<float>(i), false));
  }
  CHECK(a.sample(8).rewards == b.sample(8).rewards);
}

TEST_CASE("double DQN temporal-difference loss worksheet") {
  DdqnConfig c;
  c.hidden = {4};
  c.batch_size = 2;
  c.warmup = 2;
  c.replay_capacity = 8;
  DdqnAgent a(3, 2, c, 1);
  a.set_q(constant_net(a.spec(), {1.0f, 3.0f}));
  a.set_target(constant_net(a.spec(), {2.0f, 0.5f}));
  std::vector<Transition> ts{make_t(1.0f, false), make_t(-1.0f, true)};
  ts[0].action = 0;
  ts[1].action = 1;
  // online net picks action 1 at s', the target net scores it 0.5
  const double y0 = 1.0 + 0.99 * 0.5;
  const double y1 = -1.0;
  const double loss = (std::pow(1.0 - y0, 2) + std::pow(3.0 - y1, 2)) / 2;
  CHECK(a.td_loss(make_batch(ts)) == doctest::Approx(loss).epsilon(1e-6));
  CHECK(a.select_action(Observation::Zero(3), ActionMode::kGreedy) == 1);
}

TEST_CASE("double DQN exploration schedule and target sync") {
  DdqnConfig c;
  c.hidden = {4};
  c.batch_size = 2;
  c.warmup = 2;
  c.replay_capacity = 8;
  c.epsilon_decay_steps = 100;
  c.target_sync = 3;
  DdqnAgent a(3, 2, c, 1);
  CHECK(a.epsilon() == doctest::Approx(1.0));
  for (int i = 0; i < 200; ++i) a.select_action(Observation::Zero(3), ActionMode::kSample);
  CHECK(a.epsilon() == doctest::Approx(0.05));
  for (int i = 0; i < 4; ++i) a.remember(make_t(1.0f, i % 2 == 0, 0.1f * i));
  a.train_step();
  a.train_step();
  CHECK_FALSE(a.target() == a.q());
  a.train_step();
  CHECK(a.target() == a.q());
}

TEST_CASE("double DQN fits a bandit") {
  DdqnConfig c;
  c.hidden = {8};
  c.batch_size = 4;
  c.warmup = 4;
  c.replay_capacity = 64;
  c.lr = 1e-2f;
  DdqnAgent a(3, 2, c, 3);
  for (int i = 0; i < 8; ++i) {
    Transition t = make_t(i % 2 == 0 ? 1.0f : -1.0f, true, 0.3f);
    t.action = i % 2;
    a.remember(t);
  }
  for (int i = 0; i < 300; ++i) a.train_step();
  const VectorXf q = a.q_values(Observation::Constant(3, 0.3f));
  CHECK(q[0] == doctest::Approx(1.0).epsilon(0.05));
  CHECK(q[1] == doctest::Approx(-1.0).epsilon(0.05));
}
