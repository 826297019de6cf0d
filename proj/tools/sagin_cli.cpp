// Command-line entry point: run, compare, gradcheck, selftest.
#include <CLI11.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>

#include "sagin/compare.hpp"
#include "sagin/config.hpp"
#include "sagin/experiment.hpp"
#include "sagin/nn.hpp"
#include "sagin/rng.hpp"
#include "sagin/selftest.hpp"

namespace {

constexpr const char* kOutDirEnv = "SAGIN_OUT_DIR";

// --out wins over the environment, which wins over the config file.
std::optional<std::string> output_override(const std::string& flag) {
  if (!flag.empty()) return flag;
  if (const char* env = std::getenv(kOutDirEnv); env && *env) return std::string(env);
  return std::nullopt;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"SAGIN traffic-offloading simulator and federated SAC experiments"};
  app.require_subcommand(1);

  std::string config_path, out_dir, scenario, algorithm;
  std::optional<std::uint64_t> seed_override;
  bool quiet = false;
  auto* run = app.add_subcommand("run", "Run the configured scenario and write metrics");
  run->add_option("--config", config_path, "JSON config file")->check(CLI::ExistingFile);
  run->add_option("--seed-override", seed_override, "Replace the seed list with a single seed");
  run->add_option("--out", out_dir, std::string("Output directory (also ") + kOutDirEnv + ")");
  run->add_option("--scenario", scenario, "sagin_sweep | sagin_speed_sweep | cartpole_differentiated");
  run->add_option("--algorithm", algorithm,
                  "dfsac | fedavg_sac | centralized_sac | ddqn | fl_ddqn | dfrl_ddqn | greedy | none");
  run->add_flag("--quiet", quiet, "No per-point progress on stderr");

  std::vector<std::string> files;
  std::string compare_out;
  auto* cmp = app.add_subcommand("compare", "Median and IQR across seeds of metrics files");
  cmp->add_option("files", files, "Metrics CSV files")->required()->check(CLI::ExistingFile);
  cmp->add_option("--out", compare_out, "Directory for summary.csv (default: stdout)");

  int gc_count = 50;
  std::uint64_t gc_seed = 1;
  double gc_floor = 1e-2;
  auto* gc = app.add_subcommand("gradcheck", "Finite-difference check of network gradients");
  gc->add_option("--count", gc_count, "Random network specs to check")->check(CLI::PositiveNumber);
  gc->add_option("--seed", gc_seed, "Seed");
  gc->add_option("--floor", gc_floor, "Denominator floor as a fraction of each tensor's largest gradient");

  std::uint64_t st_seed = 1;
  auto* st = app.add_subcommand("selftest", "Invariant suites");
  st->add_option("--seed", st_seed, "Seed");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run) {
      nlohmann::json tree = nlohmann::json::object();
      if (!config_path.empty()) {
        std::ifstream f(config_path);
        tree = nlohmann::json::parse(f);
      }
      auto& experiment = tree["experiment"];
      if (experiment.is_null()) experiment = nlohmann::json::object();
      if (!scenario.empty()) experiment["scenario"] = scenario;
      if (!algorithm.empty()) experiment["algorithm"] = algorithm;
      if (seed_override) experiment["seeds"] = nlohmann::json::array({*seed_override});
      if (auto out = output_override(out_dir)) experiment["out_dir"] = *out;
      const auto config = sagin::exp::parse_config(tree);
      sagin::exp::Progress progress;
      if (!quiet) progress = [](const std::string& line) { std::cerr << line << '\n'; };
      const auto result = sagin::exp::run(config, progress);
      std::cout << result.csv_path << '\n';
      return 0;
    }
    if (*cmp) {
      const std::string summary = sagin::exp::format_summary(sagin::exp::compare(files));
      if (auto out = output_override(compare_out)) {
        std::filesystem::create_directories(*out);
        const auto path = std::filesystem::path(*out) / "summary.csv";
        std::ofstream(path) << summary;
        std::cout << path.string() << '\n';
      } else {
        std::cout << summary;
      }
      return 0;
    }
    if (*gc) {
      auto rng = sagin::stream_rng(gc_seed, 0);
      double worst = 0.0;
      for (int i = 0; i < gc_count; ++i) {
        const auto spec = sagin::nn::random_spec(rng);
        const auto r = sagin::nn::gradient_check(spec, rng, 3, 1e-3, gc_floor);
        worst = std::max(worst, r.max_relative_error);
      }
      const bool ok = worst < 1e-4;
      std::cout << (ok ? "PASS" : "FAIL") << " gradcheck specs=" << gc_count << " max_relative_error=" << worst
                << " floor=" << gc_floor << '\n';
      return ok ? 0 : 1;
    }
    if (*st) {
      bool all = true;
      for (const auto& c : sagin::exp::selftest(st_seed)) {
        std::cout << (c.passed ? "PASS " : "FAIL ") << c.name << (c.passed ? "" : ": " + c.detail) << '\n';
        all = all && c.passed;
      }
      return all ? 0 : 1;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 0;
}
