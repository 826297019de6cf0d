// Experiment configuration: a namespaced JSON tree with field-path diagnostics.
#ifndef SAGIN_CONFIG_HPP_
#define SAGIN_CONFIG_HPP_

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "sagin/env.hpp"
#include "sagin/team.hpp"

namespace sagin::exp {

enum class Scenario { kSaginSweep, kSaginSpeedSweep, kCartpoleDifferentiated };
const char* to_string(Scenario s);
Scenario parse_scenario(const std::string& name);

/// Thrown for invalid configs; what() starts with the offending field path.
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

struct ExperimentSection {
  Scenario scenario = Scenario::kSaginSweep;
  agent::Algorithm algorithm = agent::Algorithm::kDfsac;
  std::vector<std::uint64_t> seeds{1, 2, 3, 4, 5};
  std::vector<int> source_sweep{20, 30, 40, 50, 60};
  std::vector<double> speed_sweep{5.0, 15.0, 30.0};
  int train_episodes = 3;
  std::int64_t ticks_per_episode = 1500;
  std::int64_t eval_ticks = 3000;
  int train_interval = 4;  // SAGIN ticks per joint train iteration
  std::vector<double> pole_lengths{0.3, 0.5, 0.8};
  int cartpole_episodes = 500;
  int cartpole_train_interval = 1;
  int final_window = 50;  // episodes averaged for the final reward
  std::string out_dir = "out";
};

struct ExperimentConfig {
  ExperimentSection experiment;
  sim::SimConfig sim;
  env::ObservationLayout layout;
  bool full_action_enumeration = false;
  std::vector<int> hidden{64, 64};
  agent::SacConfig sac;
  double cartpole_target_entropy = -0.98 * 0.6931471805599453;
  agent::DdqnConfig ddqn;
  double fed_epsilon = 1e-2;
  int fed_k = 200;

  /// Throws ConfigError naming the field path.
  void validate() const;
  agent::TeamConfig team_config(bool cartpole) const;
};

/// Parses a config tree over the defaults. Unknown keys and type mismatches
/// raise ConfigError with the full field path. A top-level "meta" object is
/// accepted and ignored.
ExperimentConfig parse_config(const nlohmann::json& j);
ExperimentConfig load_config(const std::string& path);

/// Fully resolved tree; parse_config(to_json(c)) reproduces c.
nlohmann::json to_json(const ExperimentConfig& c);

}  // namespace sagin::exp

#endif  // SAGIN_CONFIG_HPP_
