// Episode loops connecting a multi-agent environment to a learning team.
#ifndef SAGIN_TRAINER_HPP_
#define SAGIN_TRAINER_HPP_

#include <cstdint>
#include <vector>

#include "sagin/env.hpp"
#include "sagin/team.hpp"

namespace sagin::train {

struct EpisodeStats {
  std::vector<double> reward_sum;  // per agent, over completed transitions
  std::vector<std::int64_t> transitions;  // per agent
  std::int64_t steps = 0;
  agent::TeamStats team;

  double mean_reward_sum() const;  // averaged over agents
};

struct EpisodeOptions {
  bool learn = true;
  agent::ActionMode mode = agent::ActionMode::kSample;
  int train_interval = 1;  // env steps per joint train iteration
  std::int64_t max_steps = 0;  // 0: until the environment ends the episode
};

/// Resets `env` with `seed` and plays one episode.
EpisodeStats run_episode(env::MultiAgentEnv& env, agent::Team& team, std::uint64_t seed,
                         const EpisodeOptions& options);

}  // namespace sagin::train

#endif  // SAGIN_TRAINER_HPP_
