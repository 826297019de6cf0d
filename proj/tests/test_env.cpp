#include <doctest.h>

#include <cmath>
#include <random>

#include "sagin/cartpole.hpp"
#include "sagin/env.hpp"

using namespace sagin;
using namespace sagin::env;
using sim::NodeKind;

namespace {

// 0 BS, 1 UAV, 2 LEO, 3 GEO, 4 UE source, 5 BS, 6 UE dest
sim::World small_world() {
  sim::World w = sim::empty_world(sim::SimConfig{}, 0);
  sim::add_node(w, NodeKind::kBs, {0, 0, 25}, 10);
  sim::add_node(w, NodeKind::kUav, {50, 0, 100}, 10);
  sim::add_node(w, NodeKind::kLeo, {0, 0, 550e3}, 10);
  sim::add_node(w, NodeKind::kGeo, {0, 0, 35786e3}, 10);
  sim::add_node(w, NodeKind::kUeSource, {0, 10, 0}, 10);
  sim::add_node(w, NodeKind::kBs, {500, 0, 25}, 10);
  sim::add_node(w, NodeKind::kUeDest, {600, 0, 0}, 10);
  sim::set_link(w, 0, 1, 5e7);
  sim::set_link(w, 0, 2, 2e8);
  sim::set_link(w, 1, 3, 3e7);
  sim::set_link(w, 2, 3, 1e7);
  sim::set_link(w, 0, 4, 1e8);
  sim::set_link(w, 1, 5, 6e7);
  sim::set_link(w, 0, 5, 8e6);
  sim::set_link(w, 5, 6, 1e8);
  return w;
}

float at(const Observation& o, int slot, int feature) { return o[slot * ObservationLayout::kFeatures + feature]; }

}  // namespace

TEST_CASE("observation worksheet") {
  sim::World w = small_world();
  for (sim::PacketId id : {100, 101, 102}) w.nodes[1].queue.push_back(id);
  w.nodes[2].in_coverage = false;
  const ObservationLayout layout;
  const Observation o = observe(w, 0, layout);
  REQUIRE(o.size() == 290);

  // self: BS, empty queue, (5e7 + 2e8 + 8e6) / 1e8 capped at 1
  CHECK(at(o, 0, 2) == 1.0f);
  CHECK(at(o, 0, 6) == 0.0f);
  CHECK(at(o, 0, 7) == 1.0f);
  CHECK(at(o, 0, 8) == 1.0f);
  CHECK(at(o, 0, 9) == 1.0f);
  // one-hop relays in id order: UAV 1, LEO 2, BS 5 (UE 4 excluded)
  CHECK(at(o, 1, 3) == 1.0f);
  CHECK(at(o, 1, 6) == doctest::Approx(0.3));
  CHECK(at(o, 1, 7) == doctest::Approx(0.5));
  CHECK(at(o, 2, 4) == 1.0f);
  CHECK(at(o, 2, 7) == 1.0f);
  CHECK(at(o, 2, 9) == 0.0f);
  CHECK(at(o, 3, 2) == 1.0f);
  CHECK(at(o, 3, 7) == doctest::Approx(0.08));
  for (int slot = 4; slot <= 12; ++slot) {
    for (int f = 0; f < ObservationLayout::kFeatures; ++f) CHECK(at(o, slot, f) == 0.0f);
  }
  // two-hop: GEO 3 via the better of 3e7 (UAV) and 1e7 (LEO); UE 6 excluded
  CHECK(at(o, 13, 5) == 1.0f);
  CHECK(at(o, 13, 7) == doctest::Approx(0.3));
  CHECK(at(o, 14, 8) == 0.0f);
}

TEST_CASE("offload rewrites the remaining path through the chosen relay") {
  const sim::World w = small_world();
  const ActionSpace space = ActionSpace::for_world(w, false);
  CHECK(space.size() == 4);
  sim::Packet p;
  p.dst = 6;
  p.path = {4, 0, 5, 6};
  p.hop_index = 1;

  CHECK(offload_path(w, p, 0, space) == p.path);
  CHECK(offload_path(w, p, 1, space) == std::vector<sim::NodeId>{4, 0, 1, 5, 6});
  CHECK(offload_path(w, p, 2, space) == std::vector<sim::NodeId>{4, 0, 2, 3, 1, 5, 6});
  // GEO is not a one-hop neighbour of BS 0
  CHECK_FALSE(relay_candidate(w, 0, 3, space).has_value());
  sim::Packet q = p;
  CHECK(apply_offload(w, q, 3, space) == 0);
  CHECK(q.path == p.path);
  CHECK(apply_offload(w, q, 1, space) == 1);
  CHECK(q.path.size() == 5);
  CHECK_THROWS_AS(relay_class(space, 4), std::out_of_range);
}

TEST_CASE("full action enumeration addresses individual relays") {
  sim::World w = small_world();
  const NodeId extra = sim::add_node(w, NodeKind::kUav, {0, 50, 100}, 10);
  sim::set_link(w, 0, extra, 1e7);
  sim::set_link(w, extra, 6, 1e7);
  const ActionSpace space = ActionSpace::for_world(w, true);
  CHECK(space.size() == 2 + 1 + 2);
  sim::Packet p;
  p.dst = 6;
  p.path = {4, 0, 5, 6};
  p.hop_index = 1;
  CHECK(relay_class(space, 2) == RelayClass::kUav);
  CHECK(offload_path(w, p, 2, space) == std::vector<sim::NodeId>{4, 0, extra, 6});
  CHECK(relay_class(space, 3) == RelayClass::kLeo);
  CHECK(relay_class(space, 4) == RelayClass::kGeo);
}

TEST_CASE("an offload whose relay has no onward route degenerates") {
  sim::World w = small_world();
  sim::set_link(w, 1, 5, 6e7, false);
  sim::set_link(w, 1, 3, 3e7, false);
  const ActionSpace space = ActionSpace::for_world(w, false);
  sim::Packet p;
  p.dst = 6;
  p.path = {4, 0, 5, 6};
  p.hop_index = 1;
  CHECK(offload_path(w, p, 1, space) == p.path);
  CHECK(apply_offload(w, p, 1, space) == 0);
}

TEST_CASE("per-packet rewards") {
  CHECK(reward_delivered(0.05) == doctest::Approx(20.0));
  CHECK_THROWS_AS(reward_delivered(0.0), std::domain_error);
  CHECK(reward_dropped(1.0, 1.5) == doctest::Approx(-0.5));
  sim::Event d{sim::EventKind::kDelivered, 13, 0, 0, 3};
  CHECK(reward(d, 0.01) == doctest::Approx(10.0));
  sim::Event g{sim::EventKind::kGenerated, 13, 0, 0, 3};
  CHECK_THROWS_AS(reward(g, 0.01), std::invalid_argument);
}

TEST_CASE("SAGIN environment step protocol") {
  SaginEnvConfig cfg;
  cfg.ticks_per_episode = 400;
  SaginEnv env(cfg);
  CHECK(env.num_agents() == 8);
  CHECK(env.obs_dim() == 290);
  CHECK(env.num_actions() == 4);

  std::mt19937_64 rng(3);
  std::uniform_int_distribution<int> pick(0, 3);
  StepResult r = env.reset(7);
  std::size_t transitions = 0;
  int steps = 0;
  while (!r.episode_over) {
    REQUIRE(r.obs.size() == 8);
    std::vector<int> actions(8);
    for (int i = 0; i < 8; ++i) {
      CHECK(r.needs_action[i] == !env.world().decision_batch[env.world().ids_of(NodeKind::kBs)[i]].empty());
      actions[i] = pick(rng);
    }
    r = env.step(actions);
    ++steps;
    for (const auto& per_agent : r.completed) {
      for (const auto& t : per_agent) {
        CHECK(t.obs.size() == 290);
        CHECK(t.next_obs.size() == 290);
        CHECK(std::isfinite(t.reward));
        CHECK_FALSE(t.terminal);
        ++transitions;
      }
    }
  }
  CHECK(steps == 399);
  CHECK(transitions > 0);
  CHECK(transitions == env.reward_count());
  const sim::Counters& c = env.world().counters;
  CHECK(c.generated == c.delivered + c.dropped + env.world().in_system());
  CHECK_THROWS_AS(env.step(std::vector<int>(3)), std::invalid_argument);
}

TEST_CASE("every BS that decided on a packet is credited with its outcome") {
  sim::SimConfig c;
  c.num_bs = 3;
  c.source_rate_mean_bps = 1.2e6;
  c.source_rate_sd_bps = 0.0;
  // UE 0 -> BS 1 -> BS 2 -> BS 3 -> UE 4, one packet per tick, four ticks end
  // to end. BS 1 and 2 decide; BS 3 is the last hop and does not.
  sim::World w = sim::empty_world(c, 1);
  sim::add_node(w, NodeKind::kUeSource, {0, 0, 0}, 200);
  for (double x : {100.0, 200.0, 300.0}) sim::add_node(w, NodeKind::kBs, {x, 0, 25}, 200);
  sim::add_node(w, NodeKind::kUeDest, {400, 0, 0}, 200);
  for (sim::NodeId n = 0; n < 4; ++n) sim::set_link(w, n, n + 1, 1.2e6);

  SaginEnv e(SaginEnvConfig{c, {}, false, 40});
  StepResult r = e.reset_from(std::move(w));
  std::vector<int> count(3, 0);
  while (!r.episode_over) {
    r = e.step({0, 0, 0});
    for (int i = 0; i < 3; ++i) {
      for (const auto& t : r.completed[i]) {
        CHECK(t.reward == doctest::Approx(1.0 / 0.04));
        ++count[i];
      }
    }
  }
  // BS 1 passes every packet to BS 2, which decides again; both learn from it
  CHECK(count[0] > 30);
  CHECK(count[1] == count[0]);
  CHECK(count[2] == 0);

  sim::SimConfig other = c;
  other.num_bs = 2;
  SaginEnv wrong(SaginEnvConfig{other, {}, false, 40});
  CHECK_THROWS_AS(wrong.reset_from(sim::empty_world(c, 1)), std::invalid_argument);
}

TEST_CASE("SAGIN environment is reproducible") {
  SaginEnvConfig cfg;
  cfg.ticks_per_episode = 200;
  SaginEnv a(cfg), b(cfg);
  StepResult ra = a.reset(11), rb = b.reset(11);
  int t = 0;
  while (!ra.episode_over) {
    std::vector<int> actions(8, t++ % 4);
    ra = a.step(actions);
    rb = b.step(actions);
    for (int i = 0; i < 8; ++i) {
      REQUIRE(ra.obs[i] == rb.obs[i]);
      REQUIRE(ra.completed[i].size() == rb.completed[i].size());
      for (std::size_t k = 0; k < ra.completed[i].size(); ++k) CHECK(ra.completed[i][k].reward == rb.completed[i][k].reward);
    }
  }
  CHECK(a.mean_packet_reward() == b.mean_packet_reward());
}

TEST_CASE("cart-pole dynamics match the classic equations") {
  CartPole cp = cartpole_make(0.5);
  cp.set_state({0.01, -0.02, 0.03, 0.04});
  cp.step(1);
  // one explicit Euler step of the classic system, written out longhand
  const double g = 9.8, mc = 1.0, mp = 0.1, l = 0.5, f = 10.0, tau = 0.02;
  const double th = 0.03, thd = 0.04;
  const double tmp = (f + mp * l * thd * thd * std::sin(th)) / (mc + mp);
  const double tha = (g * std::sin(th) - std::cos(th) * tmp) / (l * (4.0 / 3.0 - mp * std::cos(th) * std::cos(th) / (mc + mp)));
  const double xa = tmp - mp * l * tha * std::cos(th) / (mc + mp);
  CHECK(cp.state()[0] == doctest::Approx(0.01 + tau * -0.02));
  CHECK(cp.state()[1] == doctest::Approx(-0.02 + tau * xa));
  CHECK(cp.state()[2] == doctest::Approx(0.03 + tau * 0.04));
  CHECK(cp.state()[3] == doctest::Approx(0.04 + tau * tha));
  CHECK_THROWS_AS(cp.step(2), std::out_of_range);
  CHECK_THROWS_AS(cartpole_make(0.0), std::domain_error);
}

TEST_CASE("cart-pole termination and truncation") {
  CartPole cp = cartpole_make(0.5);
  cp.set_state({0, 0, 0.25, 0});
  const auto o = cp.step(0);
  CHECK(o.terminal);
  CHECK(o.reward == 0.0);

  // alternating pushes keep a centred pole up until the step cap
  CartPole cq = cartpole_make(0.5);
  cq.set_state({0, 0, 0, 0});
  CartPole::Outcome last;
  int n = 0;
  while (!(last.terminal || last.truncated)) {
    const auto& s = cq.state();
    last = cq.step(s[2] + 0.1 * s[3] > 0 ? 1 : 0);
    ++n;
  }
  CHECK(last.truncated);
  CHECK(n == 200);
}

TEST_CASE("longer poles fall more slowly") {
  CartPole a = cartpole_make(0.3), b = cartpole_make(0.8);
  a.set_state({0, 0, 0.05, 0});
  b.set_state({0, 0, 0.05, 0});
  a.step(0);
  a.step(0);
  b.step(0);
  b.step(0);
  CHECK(std::abs(a.state()[3]) > std::abs(b.state()[3]));
}

TEST_CASE("cart-pole family runs in lockstep") {
  CartPoleFamily fam({0.3, 0.5, 0.8});
  StepResult r = fam.reset(5);
  CHECK(fam.obs_dim() == 4);
  std::vector<int> lengths(3, 0);
  while (!r.episode_over) {
    for (int i = 0; i < 3; ++i) {
      if (r.needs_action[i]) ++lengths[i];
    }
    r = fam.step({0, 0, 0});
    for (int i = 0; i < 3; ++i) CHECK(r.completed[i].size() <= 1);
  }
  for (int i = 0; i < 3; ++i) CHECK(fam.episode_return(i) == lengths[i] - 1);
  CartPoleFamily again({0.3, 0.5, 0.8});
  CHECK(again.reset(5).obs[1] == fam.reset(5).obs[1]);
}
