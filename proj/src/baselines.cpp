#include "sagin/baselines.hpp"

namespace sagin::baseline {

std::size_t remaining_hops(const sim::World& w, const std::vector<sim::NodeId>& path, std::size_t from) {
  for (std::size_t i = from; i + 1 < path.size(); ++i) {
    if (!w.linked(path[i], path[i + 1])) return kInfeasible;
  }
  return path.size() - 1 - from;
}

int greedy_offload(const sim::World& w, sim::NodeId bs, const sim::Packet& p, const env::ActionSpace& space) {
  (void)bs;
  int best = 0;
  std::size_t best_hops = remaining_hops(w, p.path, p.hop_index);
  for (int a = 1; a < space.size(); ++a) {
    const auto path = env::offload_path(w, p, a, space);
    if (path == p.path) continue;
    const std::size_t h = remaining_hops(w, path, p.hop_index);
    if (h < best_hops) {
      best_hops = h;
      best = a;
    }
  }
  return best;
}

sim::Decider greedy_decider(const env::ActionSpace& space) {
  return [space](const sim::World& w, sim::NodeId bs, sim::Packet& p) {
    return env::apply_offload(w, p, greedy_offload(w, bs, p, space), space);
  };
}

sim::Decider no_offload_decider() {
  return [](const sim::World&, sim::NodeId, sim::Packet&) { return 0; };
}

}  // namespace sagin::baseline
