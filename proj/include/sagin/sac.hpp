// Discrete soft actor-critic with a private policy, two local trend (critic)
// networks, their global backups, and log-parameterized temperature.
//
// In federated mode the global backups change only through
// set_global_trends(); in local mode the agent soft-updates them itself.
#ifndef SAGIN_SAC_HPP_
#define SAGIN_SAC_HPP_

#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "sagin/nn.hpp"
#include "sagin/replay.hpp"

namespace sagin::agent {

using env::Observation;
using nn::MatrixXf;
using nn::NetSpec;
using nn::ParamSet;
using nn::VectorXf;

enum class ActionMode { kSample, kGreedy };
enum class TargetMode { kFederated, kLocalSoft };

struct SacConfig {
  std::vector<int> hidden{64, 64};
  double gamma = 0.99;
  float lr = 5e-4f;
  double alpha_lr = 1e-3;
  double target_entropy = -4.0;
  double initial_alpha = 1.0;
  std::size_t batch_size = 64;
  std::size_t replay_capacity = 100000;
  std::size_t warmup = 1000;
  TargetMode target_mode = TargetMode::kFederated;
  double target_tau = 1e-2;  // kLocalSoft blend factor
  int target_interval = 200;  // kLocalSoft: train steps between blends

  void validate() const;
};

struct TrainDiagnostics {
  double trend_loss = 0.0;
  double policy_loss = 0.0;
  double alpha_loss = 0.0;
  double alpha = 0.0;
  double entropy = 0.0;  // mean policy entropy over the batch
};

class SacAgent {
 public:
  SacAgent(int obs_dim, int num_actions, SacConfig config, std::uint64_t seed);

  /// Greedy ties go to the smallest action index.
  int select_action(const Observation& obs, ActionMode mode);

  MatrixXf policy_probs(const MatrixXf& obs) const;
  VectorXf policy_probs(const Observation& obs) const;

  /// pi(s)^T [min(global_1, global_2)(s) - alpha log pi(s)], one entry per column.
  VectorXf soft_values(const MatrixXf& obs) const;
  double soft_value(const Observation& obs) const;

  /// Pure loss evaluations on the current parameters.
  double trend_loss(const Batch& b) const;  // mean of both networks' losses
  double policy_loss(const Batch& b) const;
  double alpha_loss(const Batch& b) const;

  /// One optimizer step each; return the pre-step loss.
  double trend_update(const Batch& b);
  double policy_update(const Batch& b);
  double alpha_update(const Batch& b);

  void remember(Transition t, int source = 0) { replay_.push(std::move(t), source); }
  bool ready() const;

  /// Samples one batch and runs trend, policy, then temperature updates.
  /// Returns nullopt (no-op) while the replay is below max(batch, warmup).
  std::optional<TrainDiagnostics> train_step();
  TrainDiagnostics train_on(const Batch& b);

  const NetSpec& policy_spec() const { return policy_spec_; }
  const NetSpec& trend_spec() const { return trend_spec_; }
  const ParamSet& policy() const { return policy_; }
  const ParamSet& trend(int i) const { return i == 0 ? trend1_ : trend2_; }
  const ParamSet& global_trend(int i) const { return i == 0 ? global1_ : global2_; }

  void set_policy(ParamSet p);
  void set_trends(ParamSet t1, ParamSet t2);
  void set_global_trends(ParamSet g1, ParamSet g2);

  double alpha() const;
  double log_alpha() const { return log_alpha_; }
  void set_log_alpha(double v) { log_alpha_ = v; }
  std::int64_t train_steps() const { return train_steps_; }
  const SacConfig& config() const { return config_; }
  ReplayMemory& replay() { return replay_; }
  const ReplayMemory& replay() const { return replay_; }

  /// Parameters, temperature and counters; replay and optimizer moments are not saved.
  void save_checkpoint(const std::string& path) const;
  void load_checkpoint(const std::string& path);

 private:
  void check_batch(const Batch& b) const;
  VectorXf targets(const Batch& b) const;

  SacConfig config_;
  NetSpec policy_spec_;
  NetSpec trend_spec_;
  ParamSet policy_, trend1_, trend2_, global1_, global2_;
  nn::AdamState policy_opt_, trend1_opt_, trend2_opt_;
  nn::ScalarAdam alpha_opt_;
  double log_alpha_;
  std::int64_t train_steps_ = 0;
  ReplayMemory replay_;
  std::mt19937_64 rng_;
};

/// Straight entropy of each column of a probability matrix.
VectorXf column_entropy(const MatrixXf& probs);

}  // namespace sagin::agent

#endif  // SAGIN_SAC_HPP_
