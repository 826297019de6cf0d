#include "sagin/metrics.hpp"

namespace sagin::sim {

void MetricsAccumulator::add(const Event& e) {
  switch (e.kind) {
    case EventKind::kGenerated:
      ++generated_;
      break;
    case EventKind::kDelivered:
      ++delivered_;
      delivered_bits_ += e.bits;
      delay_ticks_ += e.tick - e.born;
      break;
    case EventKind::kDropped:
      ++dropped_;
      break;
    case EventKind::kDecision:
      break;
  }
}

TrafficMetrics MetricsAccumulator::finalize(double window_s) const {
  TrafficMetrics m;
  m.generated = generated_;
  m.delivered = delivered_;
  m.dropped = dropped_;
  m.delivered_bits = delivered_bits_;
  m.throughput_bps = window_s > 0 ? static_cast<double>(delivered_bits_) / window_s : 0.0;
  m.drop_rate = generated_ == 0 ? 0.0 : static_cast<double>(dropped_) / static_cast<double>(generated_);
  m.mean_delay_s =
      delivered_ == 0 ? 0.0 : static_cast<double>(delay_ticks_) * tick_s_ / static_cast<double>(delivered_);
  return m;
}

TrafficMetrics collect_metrics(const Events& events, double window_s, double tick_s) {
  MetricsAccumulator acc(tick_s);
  acc.add(events);
  return acc.finalize(window_s);
}

}  // namespace sagin::sim
