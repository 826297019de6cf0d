// Cross-seed summaries (median and interquartile range) of metrics files.
#ifndef SAGIN_COMPARE_HPP_
#define SAGIN_COMPARE_HPP_

#include <string>
#include <vector>

#include "sagin/experiment.hpp"

namespace sagin::exp {

/// Linear-interpolation quantile (R type 7) of an unsorted sample.
double quantile(std::vector<double> values, double q);

struct Spread {
  double median = 0.0;
  double q1 = 0.0;
  double q3 = 0.0;
  double iqr() const { return q3 - q1; }
};

Spread spread(const std::vector<double>& values);

struct SummaryRow {
  std::string scenario;
  std::string algorithm;
  double sweep_value = 0.0;
  std::size_t seeds = 0;
  Spread throughput_bps, drop_rate, mean_delay_s, mean_episode_reward;
};

/// Reads metrics CSVs (error marker rows are skipped) and groups rows by
/// (scenario, algorithm, sweep value). Throws on a header/schema mismatch.
std::vector<MetricsRow> read_metrics(const std::string& path);
std::vector<SummaryRow> summarize(const std::vector<MetricsRow>& rows);
std::vector<SummaryRow> compare(const std::vector<std::string>& paths);

inline constexpr const char* kSummaryHeader =
    "scenario,algorithm,sweep_value,seeds,throughput_median,throughput_iqr,drop_rate_median,drop_rate_iqr,"
    "delay_median,delay_iqr,reward_median,reward_iqr";
std::string format_summary(const std::vector<SummaryRow>& rows);

}  // namespace sagin::exp

#endif  // SAGIN_COMPARE_HPP_
