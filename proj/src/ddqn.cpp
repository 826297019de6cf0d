#include "sagin/ddqn.hpp"

#include <algorithm>
#include <stdexcept>

#include "sagin/rng.hpp"

namespace sagin::agent {
namespace {

int argmax(const VectorXf& v) {
  int best = 0;
  for (int i = 1; i < v.size(); ++i) {
    if (v[i] > v[best]) best = i;
  }
  return best;
}

}  // namespace

void DdqnConfig::validate() const {
  if (hidden.empty()) throw std::invalid_argument("ddqn.hidden must have at least one layer");
  if (!(gamma >= 0 && gamma <= 1)) throw std::invalid_argument("ddqn.gamma must be in [0, 1]");
  if (!(lr > 0)) throw std::invalid_argument("ddqn.lr must be > 0");
  if (batch_size == 0 || replay_capacity < batch_size) throw std::invalid_argument("ddqn batch/replay sizes invalid");
  if (!(epsilon_start >= 0 && epsilon_start <= 1 && epsilon_end >= 0 && epsilon_end <= 1)) {
    throw std::invalid_argument("ddqn epsilons must be in [0, 1]");
  }
  if (epsilon_decay_steps < 1) throw std::invalid_argument("ddqn.epsilon_decay_steps must be >= 1");
  if (target_sync < 0) throw std::invalid_argument("ddqn.target_sync must be >= 0");
}

DdqnAgent::DdqnAgent(int obs_dim, int num_actions, DdqnConfig config, std::uint64_t seed)
    : config_(std::move(config)), replay_(config_.replay_capacity, derive_seed(seed, 1)), rng_(stream_rng(seed, 2)) {
  config_.validate();
  spec_ = {obs_dim, config_.hidden, num_actions, nn::Head::kValues};
  auto init = stream_rng(seed, 3);
  q_ = nn::init_params(spec_, init);
  target_ = q_;
  opt_ = nn::AdamState::for_params(q_);
}

double DdqnAgent::epsilon() const {
  const double frac = std::min(1.0, static_cast<double>(act_steps_) / config_.epsilon_decay_steps);
  return config_.epsilon_start + frac * (config_.epsilon_end - config_.epsilon_start);
}

VectorXf DdqnAgent::q_values(const Observation& obs) const { return nn::forward(spec_, q_, obs); }

int DdqnAgent::select_action(const Observation& obs, ActionMode mode) {
  if (mode == ActionMode::kGreedy) return argmax(q_values(obs));
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const double eps = epsilon();
  ++act_steps_;
  if (unit(rng_) < eps) {
    std::uniform_int_distribution<int> pick(0, spec_.output - 1);
    return pick(rng_);
  }
  return argmax(q_values(obs));
}

VectorXf DdqnAgent::targets(const Batch& b) const {
  const MatrixXf next_online = nn::forward_batch(spec_, q_, b.next_obs);
  const MatrixXf next_target = nn::forward_batch(spec_, target_, b.next_obs);
  VectorXf y(b.size());
  for (int i = 0; i < b.size(); ++i) {
    const int a = argmax(next_online.col(i));
    const float boot = b.terminal[i] > 0.5f ? 0.0f : static_cast<float>(config_.gamma) * next_target(a, i);
    y[i] = b.rewards[i] + boot;
  }
  return y;
}

double DdqnAgent::td_loss(const Batch& b) const {
  const VectorXf y = targets(b);
  const MatrixXf q = nn::forward_batch(spec_, q_, b.obs);
  double sum = 0.0;
  for (int i = 0; i < b.size(); ++i) {
    const double d = q(b.actions[i], i) - y[i];
    sum += d * d;
  }
  return sum / b.size();
}

double DdqnAgent::train_on(const Batch& b) {
  const VectorXf y = targets(b);
  const MatrixXf q = nn::forward_batch(spec_, q_, b.obs);
  MatrixXf up = MatrixXf::Zero(q.rows(), q.cols());
  double sum = 0.0;
  const float scale = 2.0f / static_cast<float>(b.size());
  for (int i = 0; i < b.size(); ++i) {
    const float d = q(b.actions[i], i) - y[i];
    sum += static_cast<double>(d) * d;
    up(b.actions[i], i) = scale * d;
  }
  const ParamSet g = nn::grad_batch(spec_, q_, b.obs, up);
  q_ = nn::adam_step(std::move(q_), g, config_.lr, opt_);
  ++train_steps_;
  if (config_.target_sync > 0 && train_steps_ % config_.target_sync == 0) sync_target();
  return sum / b.size();
}

bool DdqnAgent::ready() const { return replay_.size() >= std::max(config_.batch_size, config_.warmup); }

std::optional<double> DdqnAgent::train_step() {
  if (!ready()) return std::nullopt;
  return train_on(replay_.sample(config_.batch_size));
}

void DdqnAgent::set_q(ParamSet p) {
  nn::check_layout(spec_, p);
  q_ = std::move(p);
}

void DdqnAgent::set_target(ParamSet p) {
  nn::check_layout(spec_, p);
  target_ = std::move(p);
}

}  // namespace sagin::agent
