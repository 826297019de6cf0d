#include "sagin/trainer.hpp"

#include <stdexcept>

namespace sagin::train {

double EpisodeStats::mean_reward_sum() const {
  if (reward_sum.empty()) return 0.0;
  double s = 0.0;
  for (double r : reward_sum) s += r;
  return s / static_cast<double>(reward_sum.size());
}

EpisodeStats run_episode(env::MultiAgentEnv& env, agent::Team& team, std::uint64_t seed,
                         const EpisodeOptions& options) {
  if (options.train_interval < 1) throw std::invalid_argument("train_interval must be >= 1");
  const int n = env.num_agents();
  EpisodeStats stats;
  stats.reward_sum.assign(n, 0.0);
  stats.transitions.assign(n, 0);
  team.take_stats();

  env::StepResult r = env.reset(seed);
  std::vector<int> actions(n, 0);
  while (!r.episode_over && (options.max_steps == 0 || stats.steps < options.max_steps)) {
    for (int i = 0; i < n; ++i) actions[i] = r.needs_action[i] ? team.act(i, r.obs[i], options.mode) : 0;
    r = env.step(actions);
    ++stats.steps;
    for (int i = 0; i < n; ++i) {
      for (auto& t : r.completed[i]) {
        stats.reward_sum[i] += t.reward;
        ++stats.transitions[i];
        if (options.learn) team.store(i, std::move(t));
      }
    }
    if (options.learn && stats.steps % options.train_interval == 0) team.train();
  }
  stats.team = team.take_stats();
  return stats;
}

}  // namespace sagin::train
