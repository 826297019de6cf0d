#include "sagin/selftest.hpp"

#include <cmath>
#include <functional>
#include <random>

#include "sagin/channel.hpp"
#include "sagin/env.hpp"
#include "sagin/federation.hpp"
#include "sagin/nn.hpp"
#include "sagin/rng.hpp"
#include "sagin/serialize.hpp"
#include "sagin/sim.hpp"

namespace sagin::exp {
namespace {

CheckResult check(const std::string& name, const std::function<std::string()>& body) {
  try {
    const std::string failure = body();
    return {name, failure.empty(), failure.empty() ? "ok" : failure};
  } catch (const std::exception& e) {
    return {name, false, std::string("exception: ") + e.what()};
  }
}

nn::ParamSet random_params(std::mt19937_64& rng) {
  const nn::NetSpec spec = nn::random_spec(rng);
  nn::ParamSet p = nn::init_params(spec, rng, 1.0f);
  std::normal_distribution<float> n(0.0f, 1.0f);
  for (auto& t : p.tensors) {
    for (auto& v : t.data) v = n(rng);
  }
  return p;
}

}  // namespace

std::vector<CheckResult> selftest(std::uint64_t seed) {
  std::vector<CheckResult> out;

  out.push_back(check("channel: rate increases with bandwidth and falls with path loss", [&] {
    auto rng = stream_rng(seed, 1);
    std::uniform_real_distribution<double> u(1.0, 100.0);
    for (int i = 0; i < 200; ++i) {
      channel::RadioParams<double> r{u(rng) * 1e6, 1.0, 1e-13};
      const double pl = u(rng);
      auto wider = r;
      wider.bandwidth *= 2;
      if (!(channel::rate_from_path_loss(wider, pl) > channel::rate_from_path_loss(r, pl))) return "bandwidth";
      if (!(channel::rate_from_path_loss(r, pl + 1) < channel::rate_from_path_loss(r, pl))) return "path loss";
    }
    return "";
  }));

  out.push_back(check("nn: analytic gradients match finite differences", [&] {
    auto rng = stream_rng(seed, 2);
    for (int i = 0; i < 10; ++i) {
      const auto spec = nn::random_spec(rng);
      const auto r = nn::gradient_check(spec, rng);
      if (!(r.max_relative_error < 1e-4)) return "relative error " + std::to_string(r.max_relative_error);
    }
    return std::string();
  }));

  out.push_back(check("serialize: parameter sets round-trip bitwise", [&] {
    auto rng = stream_rng(seed, 3);
    for (int i = 0; i < 500; ++i) {
      const auto p = random_params(rng);
      if (!(nn::deserialize(nn::serialize(p), p.layout_id()) == p)) return "mismatch";
    }
    return "";
  }));

  out.push_back(check("federation: soft aggregation endpoints and bounds", [&] {
    auto rng = stream_rng(seed, 4);
    const auto g = random_params(rng);
    auto l = g;
    std::normal_distribution<float> n(0.0f, 1.0f);
    for (auto& t : l.tensors) {
      for (auto& v : t.data) v = n(rng);
    }
    if (!(fed::aggregate_soft(g, l, 1.0) == l)) return "eps=1";
    if (!(fed::aggregate_soft(g, l, 0.0) == g)) return "eps=0";
    const auto m = fed::aggregate_soft(g, l, 0.3);
    for (std::size_t t = 0; t < m.tensors.size(); ++t) {
      for (std::size_t i = 0; i < m.tensors[t].data.size(); ++i) {
        const float a = g.tensors[t].data[i], b = l.tensors[t].data[i], v = m.tensors[t].data[i];
        if (v < std::min(a, b) || v > std::max(a, b)) return "bounds";
      }
    }
    return "";
  }));

  out.push_back(check("sim: packet conservation over 1000 ticks", [&] {
    sim::World w = sim::build_world(sim::SimConfig{}, seed);
    for (int t = 0; t < 1000; ++t) {
      sim::simulate_tick(w, {});
      const auto& c = w.counters;
      if (c.generated != c.delivered + c.dropped + w.in_system()) return "violated at tick " + std::to_string(t);
    }
    return std::string();
  }));

  out.push_back(check("sim: identical seeds give identical event streams", [&] {
    sim::World a = sim::build_world(sim::SimConfig{}, seed);
    sim::World b = sim::build_world(sim::SimConfig{}, seed);
    for (int t = 0; t < 300; ++t) {
      if (sim::simulate_tick(a, {}) != sim::simulate_tick(b, {})) return "diverged at tick " + std::to_string(t);
    }
    return std::string();
  }));

  out.push_back(check("env: observation size is constant and entries finite", [&] {
    env::SaginEnv e(env::SaginEnvConfig{});
    auto r = e.reset(seed);
    const int dim = e.obs_dim();
    for (int t = 0; t < 200; ++t) {
      for (const auto& o : r.obs) {
        if (o.size() != dim || !o.allFinite()) return "bad observation at tick " + std::to_string(t);
      }
      r = e.step(std::vector<int>(e.num_agents(), t % e.num_actions()));
    }
    return std::string();
  }));

  return out;
}

}  // namespace sagin::exp
