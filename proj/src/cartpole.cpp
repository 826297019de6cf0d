#include "sagin/cartpole.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "sagin/rng.hpp"

namespace sagin::env {

CartPole::CartPole(CartPoleParams params) : params_(params) {
  if (!(params_.half_length > 0)) throw std::domain_error("cart-pole: pole length must be > 0");
}

CartPole::State CartPole::reset(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> d(-0.05, 0.05);
  for (auto& v : state_) v = d(rng);
  steps_ = 0;
  return state_;
}

void CartPole::set_state(const State& s) {
  state_ = s;
  steps_ = 0;
}

CartPole::Outcome CartPole::step(int action) {
  if (action != 0 && action != 1) throw std::out_of_range("cart-pole action must be 0 or 1");
  const auto& p = params_;
  auto& [x, x_dot, theta, theta_dot] = state_;
  const double f = action == 1 ? p.force : -p.force;
  const double total_mass = p.cart_mass + p.pole_mass;
  const double pm_l = p.pole_mass * p.half_length;
  const double c = std::cos(theta);
  const double s = std::sin(theta);
  const double temp = (f + pm_l * theta_dot * theta_dot * s) / total_mass;
  const double theta_acc =
      (p.gravity * s - c * temp) / (p.half_length * (4.0 / 3.0 - p.pole_mass * c * c / total_mass));
  const double x_acc = temp - pm_l * theta_acc * c / total_mass;
  x += p.tau * x_dot;
  x_dot += p.tau * x_acc;
  theta += p.tau * theta_dot;
  theta_dot += p.tau * theta_acc;
  ++steps_;

  Outcome o;
  o.terminal = std::abs(x) > p.x_limit || std::abs(theta) > p.theta_limit_rad;
  o.reward = o.terminal ? 0.0 : 1.0;
  o.truncated = !o.terminal && steps_ >= p.max_steps;
  return o;
}

Observation CartPole::observation() const {
  Observation o(4);
  for (int i = 0; i < 4; ++i) o[i] = static_cast<float>(state_[i]);
  return o;
}

CartPole cartpole_make(double pole_length) {
  if (!(pole_length > 0)) throw std::domain_error("cart-pole: pole length must be > 0");
  CartPoleParams p;
  p.half_length = pole_length;
  return CartPole(p);
}

CartPoleFamily::CartPoleFamily(std::vector<double> pole_lengths) {
  if (pole_lengths.empty()) throw std::invalid_argument("cart-pole family needs at least one environment");
  for (double l : pole_lengths) envs_.push_back(cartpole_make(l));
  rngs_.resize(envs_.size());
  done_.assign(envs_.size(), 0);
  returns_.assign(envs_.size(), 0.0);
}

StepResult CartPoleFamily::reset(std::uint64_t seed) {
  for (std::size_t i = 0; i < envs_.size(); ++i) {
    rngs_[i] = stream_rng(seed, static_cast<std::uint32_t>(i));
    envs_[i].reset(rngs_[i]);
  }
  done_.assign(envs_.size(), 0);
  returns_.assign(envs_.size(), 0.0);
  return snapshot(std::vector<std::vector<Transition>>(envs_.size()));
}

StepResult CartPoleFamily::step(const std::vector<int>& actions) {
  if (actions.size() != envs_.size()) {
    throw std::invalid_argument("step: expected " + std::to_string(envs_.size()) + " actions");
  }
  std::vector<std::vector<Transition>> completed(envs_.size());
  for (std::size_t i = 0; i < envs_.size(); ++i) {
    if (done_[i]) continue;
    Transition t;
    t.obs = envs_[i].observation();
    t.action = actions[i];
    const auto out = envs_[i].step(actions[i]);
    t.reward = static_cast<float>(out.reward);
    t.next_obs = envs_[i].observation();
    t.terminal = out.terminal;
    returns_[i] += out.reward;
    done_[i] = out.terminal || out.truncated;
    completed[i].push_back(std::move(t));
  }
  return snapshot(std::move(completed));
}

StepResult CartPoleFamily::snapshot(std::vector<std::vector<Transition>> completed) const {
  StepResult r;
  r.completed = std::move(completed);
  r.episode_over = true;
  for (std::size_t i = 0; i < envs_.size(); ++i) {
    r.obs.push_back(envs_[i].observation());
    r.needs_action.push_back(done_[i] ? 0 : 1);
    if (!done_[i]) r.episode_over = false;
  }
  return r;
}

}  // namespace sagin::env
