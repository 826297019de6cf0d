#include "sagin/compare.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <tuple>

namespace sagin::exp {
namespace {

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream in(line);
  while (std::getline(in, cell, ',')) out.push_back(cell);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

double to_double(const std::string& s, const std::string& where) {
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(s, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used != s.size() || s.empty()) throw std::runtime_error(where + ": not a number: '" + s + "'");
  return v;
}

std::string num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

}  // namespace

double quantile(std::vector<double> values, double q) {
  if (values.empty()) throw std::invalid_argument("quantile of an empty sample");
  if (!(q >= 0 && q <= 1)) throw std::invalid_argument("quantile level must be in [0, 1]");
  std::sort(values.begin(), values.end());
  const double h = (static_cast<double>(values.size()) - 1.0) * q;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const std::size_t hi = std::min(lo + 1, values.size() - 1);
  return values[lo] + (h - static_cast<double>(lo)) * (values[hi] - values[lo]);
}

Spread spread(const std::vector<double>& values) {
  return {quantile(values, 0.5), quantile(values, 0.25), quantile(values, 0.75)};
}

std::vector<MetricsRow> read_metrics(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("cannot read " + path);
  std::string line;
  if (!std::getline(f, line) || line != kCsvHeader) {
    throw std::runtime_error(path + ": header does not match metrics schema " + std::to_string(kSchemaVersion));
  }
  std::vector<MetricsRow> rows;
  std::size_t lineno = 1;
  while (std::getline(f, line)) {
    ++lineno;
    if (line.empty()) continue;
    const auto cells = split(line);
    const std::string where = path + ":" + std::to_string(lineno);
    if (cells.size() != 9) throw std::runtime_error(where + ": expected 9 columns");
    if (cells[0] != std::to_string(kSchemaVersion)) throw std::runtime_error(where + ": schema version mismatch");
    if (cells[1].rfind("ERROR", 0) == 0) continue;
    MetricsRow r;
    r.scenario = cells[1];
    r.algorithm = cells[2];
    r.seed = static_cast<std::uint64_t>(to_double(cells[3], where));
    r.sweep_value = to_double(cells[4], where);
    r.throughput_bps = to_double(cells[5], where);
    r.drop_rate = to_double(cells[6], where);
    r.mean_delay_s = to_double(cells[7], where);
    r.mean_episode_reward = to_double(cells[8], where);
    rows.push_back(r);
  }
  return rows;
}

std::vector<SummaryRow> summarize(const std::vector<MetricsRow>& rows) {
  std::map<std::tuple<std::string, std::string, double>, std::vector<const MetricsRow*>> groups;
  for (const auto& r : rows) groups[{r.scenario, r.algorithm, r.sweep_value}].push_back(&r);
  std::vector<SummaryRow> out;
  for (const auto& [key, members] : groups) {
    SummaryRow s;
    std::tie(s.scenario, s.algorithm, s.sweep_value) = key;
    s.seeds = members.size();
    auto column = [&](double MetricsRow::*field) {
      std::vector<double> v;
      for (const MetricsRow* m : members) v.push_back(m->*field);
      return spread(v);
    };
    s.throughput_bps = column(&MetricsRow::throughput_bps);
    s.drop_rate = column(&MetricsRow::drop_rate);
    s.mean_delay_s = column(&MetricsRow::mean_delay_s);
    s.mean_episode_reward = column(&MetricsRow::mean_episode_reward);
    out.push_back(std::move(s));
  }
  return out;
}

std::vector<SummaryRow> compare(const std::vector<std::string>& paths) {
  if (paths.empty()) throw std::invalid_argument("compare needs at least one metrics file");
  std::vector<MetricsRow> all;
  for (const auto& p : paths) {
    auto rows = read_metrics(p);
    all.insert(all.end(), rows.begin(), rows.end());
  }
  return summarize(all);
}

std::string format_summary(const std::vector<SummaryRow>& rows) {
  std::string out = std::string(kSummaryHeader) + "\n";
  for (const auto& r : rows) {
    out += r.scenario + "," + r.algorithm + "," + num(r.sweep_value) + "," + std::to_string(r.seeds);
    for (const Spread* s : {&r.throughput_bps, &r.drop_rate, &r.mean_delay_s, &r.mean_episode_reward}) {
      out += "," + num(s->median) + "," + num(s->iqr());
    }
    out += "\n";
  }
  return out;
}

}  // namespace sagin::exp
