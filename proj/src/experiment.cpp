#include "sagin/experiment.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <stdexcept>

#include "sagin/baselines.hpp"
#include "sagin/cartpole.hpp"
#include "sagin/rng.hpp"

#ifndef SAGIN_VERSION
#define SAGIN_VERSION "dev"
#endif

namespace sagin::exp {
namespace {

namespace fs = std::filesystem;

// Seed-derivation indices; shared across algorithms so every algorithm sees
// the same worlds and episode starts for a given seed.
constexpr std::uint64_t kTeamStream = 7;
constexpr std::uint64_t kEvalStream = 999;
constexpr std::uint64_t kEpisodeStream = 1000;

std::string num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string sanitize(std::string s) {
  for (char& c : s) {
    if (c == ',' || c == '\n' || c == '\r' || c == '"') c = ' ';
  }
  return s;
}

void write_text(const fs::path& p, const std::string& text) {
  std::ofstream f(p, std::ios::binary | std::ios::trunc);
  if (!f) throw std::runtime_error("cannot write " + p.string());
  f << text;
  if (!f) throw std::runtime_error("short write to " + p.string());
}

}  // namespace

const char* code_version() { return SAGIN_VERSION; }

std::string format_row(const MetricsRow& r) {
  if (r.error) {
    return std::to_string(kSchemaVersion) + ",ERROR " + sanitize(r.scenario) + "," + r.algorithm + "," +
           std::to_string(r.seed) + "," + num(r.sweep_value) + ",nan,nan,nan,nan";
  }
  return std::to_string(kSchemaVersion) + "," + r.scenario + "," + r.algorithm + "," + std::to_string(r.seed) + "," +
         num(r.sweep_value) + "," + num(r.throughput_bps) + "," + num(r.drop_rate) + "," + num(r.mean_delay_s) + "," +
         num(r.mean_episode_reward);
}

SaginPointResult run_sagin_point(const ExperimentConfig& config, const sim::SimConfig& sim,
                                 agent::Algorithm algorithm, std::uint64_t seed) {
  const auto& e = config.experiment;
  env::SaginEnvConfig train_cfg{sim, config.layout, config.full_action_enumeration, e.ticks_per_episode};
  env::SaginEnvConfig eval_cfg = train_cfg;
  eval_cfg.ticks_per_episode = e.eval_ticks;
  env::SaginEnv eval_env(eval_cfg);
  const std::uint64_t eval_seed = derive_seed(seed, kEvalStream);

  SaginPointResult out;
  if (agent::is_learning(algorithm)) {
    env::SaginEnv train_env(train_cfg);
    auto team = agent::make_team(algorithm, train_env.num_agents(), train_env.obs_dim(), train_env.num_actions(),
                                 config.team_config(false), derive_seed(seed, kTeamStream));
    train::EpisodeOptions opts;
    opts.train_interval = e.train_interval;
    for (int ep = 0; ep < e.train_episodes; ++ep) {
      out.training.push_back(train::run_episode(train_env, *team, derive_seed(seed, kEpisodeStream + ep), opts));
    }
    train::EpisodeOptions eval;
    eval.learn = false;
    eval.mode = agent::ActionMode::kGreedy;
    train::run_episode(eval_env, *team, eval_seed, eval);
  } else {
    eval_env.reset(eval_seed);
    const sim::Decider decide = algorithm == agent::Algorithm::kGreedy
                                    ? baseline::greedy_decider(eval_env.action_space())
                                    : baseline::no_offload_decider();
    for (;;) {
      if (eval_env.step_with(decide).episode_over) break;
    }
  }
  out.metrics = eval_env.metrics().finalize(static_cast<double>(e.eval_ticks) * sim.tick_s);
  out.mean_packet_reward = eval_env.mean_packet_reward();
  return out;
}

CartpoleResult run_cartpole(const ExperimentConfig& config, agent::Algorithm algorithm, std::uint64_t seed) {
  const auto& e = config.experiment;
  env::CartPoleFamily family(e.pole_lengths);
  auto team = agent::make_team(algorithm, family.num_agents(), family.obs_dim(), family.num_actions(),
                               config.team_config(true), derive_seed(seed, kTeamStream));
  train::EpisodeOptions opts;
  opts.train_interval = e.cartpole_train_interval;
  CartpoleResult out;
  for (int ep = 0; ep < e.cartpole_episodes; ++ep) {
    const auto stats = train::run_episode(family, *team, derive_seed(seed, kEpisodeStream + ep), opts);
    std::vector<double> returns(family.num_agents());
    for (int i = 0; i < family.num_agents(); ++i) returns[i] = family.episode_return(i);
    out.returns.push_back(std::move(returns));
    out.policy_loss.push_back(stats.team.mean_policy_loss());
    out.updates.push_back(stats.team.updates);
  }
  const std::size_t window = std::min<std::size_t>(e.final_window, out.returns.size());
  double sum = 0.0;
  for (std::size_t ep = out.returns.size() - window; ep < out.returns.size(); ++ep) {
    sum += std::accumulate(out.returns[ep].begin(), out.returns[ep].end(), 0.0) / out.returns[ep].size();
  }
  out.final_mean_return = sum / static_cast<double>(window);
  return out;
}

RunOutput run(const ExperimentConfig& config, const Progress& progress) {
  config.validate();
  const auto& e = config.experiment;
  const std::string scenario = to_string(e.scenario);
  const std::string algorithm = agent::to_string(e.algorithm);
  const fs::path dir(e.out_dir);
  fs::create_directories(dir);
  const std::string stem = "metrics_" + scenario + "_" + algorithm;

  RunOutput out;
  out.csv_path = (dir / (stem + ".csv")).string();
  out.sidecar_path = (dir / (stem + ".json")).string();
  out.timing_path = (dir / ("timing_" + scenario + "_" + algorithm + ".csv")).string();

  nlohmann::json sidecar = to_json(config);
  sidecar["meta"] = {{"code_version", code_version()}, {"schema_version", kSchemaVersion}};
  write_text(out.sidecar_path, sidecar.dump(2) + "\n");

  std::ofstream csv(out.csv_path, std::ios::binary | std::ios::trunc);
  if (!csv) throw std::runtime_error("cannot write " + out.csv_path);
  csv << kCsvHeader << '\n' << std::flush;
  std::string timing = "seed,sweep_value,wall_clock_s\n";

  std::vector<double> sweep;
  if (e.scenario == Scenario::kSaginSweep) {
    for (int s : e.source_sweep) sweep.push_back(s);
  } else if (e.scenario == Scenario::kSaginSpeedSweep) {
    sweep = e.speed_sweep;
  } else {
    sweep = {0.0};
  }

  for (double value : sweep) {
    for (std::uint64_t seed : e.seeds) {
      MetricsRow row{scenario, algorithm, seed, value};
      const auto start = std::chrono::steady_clock::now();
      try {
        if (e.scenario == Scenario::kCartpoleDifferentiated) {
          const CartpoleResult r = run_cartpole(config, e.algorithm, seed);
          row.mean_episode_reward = r.final_mean_return;
          std::string curve = "episode";
          for (std::size_t i = 0; i < e.pole_lengths.size(); ++i) curve += ",return_" + std::to_string(i);
          curve += ",policy_loss,updates\n";
          for (std::size_t ep = 0; ep < r.returns.size(); ++ep) {
            curve += std::to_string(ep);
            for (double v : r.returns[ep]) curve += "," + num(v);
            curve += "," + num(r.policy_loss[ep]) + "," + std::to_string(r.updates[ep]) + "\n";
          }
          write_text(dir / ("curve_" + scenario + "_" + algorithm + "_seed" + std::to_string(seed) + ".csv"), curve);
        } else {
          sim::SimConfig sim = config.sim;
          if (e.scenario == Scenario::kSaginSweep) {
            sim.num_sources = static_cast<int>(value);
          } else {
            sim.uav_speed_mps = value;
          }
          const SaginPointResult r = run_sagin_point(config, sim, e.algorithm, seed);
          row.throughput_bps = r.metrics.throughput_bps;
          row.drop_rate = r.metrics.drop_rate;
          row.mean_delay_s = r.metrics.mean_delay_s;
          row.mean_episode_reward = r.mean_packet_reward;
        }
      } catch (const std::exception& ex) {
        MetricsRow marker{ex.what(), algorithm, seed, value};
        marker.error = true;
        csv << format_row(marker) << '\n' << std::flush;
        write_text(out.timing_path, timing);
        throw;
      }
      const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
      timing += std::to_string(seed) + "," + num(value) + "," + num(secs) + "\n";
      csv << format_row(row) << '\n' << std::flush;
      out.rows.push_back(row);
      if (progress) {
        progress(scenario + " " + algorithm + " value=" + num(value) + " seed=" + std::to_string(seed) +
                 " reward=" + num(row.mean_episode_reward) + " drop=" + num(row.drop_rate) +
                 " delay=" + num(row.mean_delay_s) + " (" + num(secs) + " s)");
      }
    }
  }
  csv.close();

  // Canonical order: sweep value, then seed.
  std::stable_sort(out.rows.begin(), out.rows.end(), [](const MetricsRow& a, const MetricsRow& b) {
    return a.sweep_value != b.sweep_value ? a.sweep_value < b.sweep_value : a.seed < b.seed;
  });
  std::string text = std::string(kCsvHeader) + "\n";
  for (const auto& r : out.rows) text += format_row(r) + "\n";
  write_text(out.csv_path, text);
  write_text(out.timing_path, timing);
  return out;
}

}  // namespace sagin::exp
