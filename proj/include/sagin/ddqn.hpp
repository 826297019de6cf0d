// Double DQN agent used by the distributed and federated DQN baselines.
#ifndef SAGIN_DDQN_HPP_
#define SAGIN_DDQN_HPP_

#include <cstdint>
#include <optional>
#include <random>
#include <vector>

#include "sagin/replay.hpp"
#include "sagin/sac.hpp"

namespace sagin::agent {

struct DdqnConfig {
  std::vector<int> hidden{64, 64};
  double gamma = 0.99;
  float lr = 5e-4f;
  std::size_t batch_size = 64;
  std::size_t replay_capacity = 100000;
  std::size_t warmup = 1000;
  double epsilon_start = 1.0;
  double epsilon_end = 0.05;
  std::int64_t epsilon_decay_steps = 10000;
  std::int64_t target_sync = 500;  // train steps; 0 leaves the target to the caller

  void validate() const;
};

class DdqnAgent {
 public:
  DdqnAgent(int obs_dim, int num_actions, DdqnConfig config, std::uint64_t seed);

  /// kSample is epsilon-greedy and advances the exploration schedule;
  /// kGreedy is argmax Q with ties to the smallest index.
  int select_action(const Observation& obs, ActionMode mode);
  double epsilon() const;

  VectorXf q_values(const Observation& obs) const;
  /// Mean of (r + gamma (1 - done) Q_target(s', argmax_a Q(s', a)) - Q(s, a))^2.
  double td_loss(const Batch& b) const;
  double train_on(const Batch& b);
  std::optional<double> train_step();
  bool ready() const;

  void remember(Transition t, int source = 0) { replay_.push(std::move(t), source); }
  void sync_target() { target_ = q_; }

  const NetSpec& spec() const { return spec_; }
  const ParamSet& q() const { return q_; }
  const ParamSet& target() const { return target_; }
  void set_q(ParamSet p);
  void set_target(ParamSet p);
  std::int64_t train_steps() const { return train_steps_; }
  std::int64_t act_steps() const { return act_steps_; }
  const DdqnConfig& config() const { return config_; }
  ReplayMemory& replay() { return replay_; }

 private:
  VectorXf targets(const Batch& b) const;

  DdqnConfig config_;
  NetSpec spec_;
  ParamSet q_, target_;
  nn::AdamState opt_;
  std::int64_t train_steps_ = 0;
  std::int64_t act_steps_ = 0;
  ReplayMemory replay_;
  std::mt19937_64 rng_;
};

}  // namespace sagin::agent

#endif  // SAGIN_DDQN_HPP_
