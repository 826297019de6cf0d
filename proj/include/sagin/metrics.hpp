// Throughput, drop rate and delay tallies over simulator event streams.
#ifndef SAGIN_METRICS_HPP_
#define SAGIN_METRICS_HPP_

#include <cstdint>

#include "sagin/sim.hpp"

namespace sagin::sim {

struct TrafficMetrics {
  double throughput_bps = 0.0;
  double drop_rate = 0.0;
  double mean_delay_s = 0.0;
  std::uint64_t generated = 0;
  std::uint64_t delivered = 0;
  std::uint64_t dropped = 0;
  std::uint64_t delivered_bits = 0;
};

class MetricsAccumulator {
 public:
  explicit MetricsAccumulator(double tick_s = 0.01) : tick_s_(tick_s) {}

  void add(const Event& e);
  void add(const Events& events) {
    for (const auto& e : events) add(e);
  }
  TrafficMetrics finalize(double window_s) const;

 private:
  double tick_s_;
  std::uint64_t generated_ = 0;
  std::uint64_t delivered_ = 0;
  std::uint64_t dropped_ = 0;
  std::uint64_t delivered_bits_ = 0;
  std::int64_t delay_ticks_ = 0;
};

/// Drop rate is 0 when nothing was generated; delay is 0 when nothing was delivered.
TrafficMetrics collect_metrics(const Events& events, double window_s, double tick_s);

}  // namespace sagin::sim

#endif  // SAGIN_METRICS_HPP_
