// Scenario execution and metrics persistence.
#ifndef SAGIN_EXPERIMENT_HPP_
#define SAGIN_EXPERIMENT_HPP_

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "sagin/config.hpp"
#include "sagin/metrics.hpp"
#include "sagin/trainer.hpp"

namespace sagin::exp {

inline constexpr int kSchemaVersion = 1;
inline constexpr const char* kCsvHeader =
    "schema_version,scenario,algorithm,seed,sweep_value,throughput_bps,drop_rate,mean_delay_s,mean_episode_reward";

const char* code_version();

struct MetricsRow {
  std::string scenario;
  std::string algorithm;
  std::uint64_t seed = 0;
  double sweep_value = 0.0;
  double throughput_bps = 0.0;
  double drop_rate = 0.0;
  double mean_delay_s = 0.0;
  double mean_episode_reward = 0.0;
  bool error = false;  // marker row for a failed point
};

std::string format_row(const MetricsRow& r);

struct SaginPointResult {
  sim::TrafficMetrics metrics;
  double mean_packet_reward = 0.0;
  std::vector<train::EpisodeStats> training;
};

/// Trains (learning algorithms) then evaluates one episode on the shared
/// evaluation world for `seed`. `sim` already carries the sweep value.
SaginPointResult run_sagin_point(const ExperimentConfig& config, const sim::SimConfig& sim,
                                 agent::Algorithm algorithm, std::uint64_t seed);

struct CartpoleResult {
  std::vector<std::vector<double>> returns;  // [episode][env]
  std::vector<double> policy_loss;  // per episode, mean over updates (0 before training starts)
  std::vector<std::int64_t> updates;  // per episode
  double final_mean_return = 0.0;  // last final_window episodes, averaged over envs
};

CartpoleResult run_cartpole(const ExperimentConfig& config, agent::Algorithm algorithm, std::uint64_t seed);

struct RunOutput {
  std::string csv_path;
  std::string sidecar_path;
  std::string timing_path;
  std::vector<MetricsRow> rows;
};

using Progress = std::function<void(const std::string&)>;

/// Executes every (sweep value, seed) point of the configured scenario and
/// writes <out>/metrics_<scenario>_<algorithm>.csv, a .json sidecar with the
/// resolved config, and a timing file. Rethrows after writing an error row.
RunOutput run(const ExperimentConfig& config, const Progress& progress = {});

}  // namespace sagin::exp

#endif  // SAGIN_EXPERIMENT_HPP_
