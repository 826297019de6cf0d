#include <algorithm>
#include <deque>

#include "sagin/sim.hpp"

namespace sagin::sim {

std::optional<std::vector<NodeId>> ospf_route(const World& w, NodeId src, NodeId dst, RouteScope scope,
                                              std::span<const NodeId> excluded) {
  if (src == dst) throw std::invalid_argument("ospf_route: src == dst");
  const std::size_t n = w.nodes.size();
  std::vector<char> allowed(n, 1);
  for (const auto& node : w.nodes) {
    if (scope == RouteScope::kTerrestrial) {
      const auto k = node.kind;
      allowed[node.id] = k == NodeKind::kBs || k == NodeKind::kUeSource || k == NodeKind::kUeDest;
    }
  }
  for (NodeId x : excluded) allowed[x] = 0;
  allowed[src] = 1;
  allowed[dst] = 1;

  // Hop distances towards dst; the forward walk then takes the smallest-id
  // neighbour one hop closer, which yields the lexicographically smallest path.
  std::vector<int> dist(n, -1);
  std::deque<NodeId> frontier{dst};
  dist[dst] = 0;
  while (!frontier.empty()) {
    const NodeId u = frontier.front();
    frontier.pop_front();
    if (u == src) continue;
    for (NodeId v : w.adjacency[u]) {
      if (!allowed[v] || dist[v] >= 0) continue;
      dist[v] = dist[u] + 1;
      frontier.push_back(v);
    }
  }
  if (dist[src] < 0) return std::nullopt;

  std::vector<NodeId> path{src};
  NodeId cur = src;
  while (cur != dst) {
    for (NodeId v : w.adjacency[cur]) {
      if (allowed[v] && dist[v] == dist[cur] - 1) {
        cur = v;
        break;
      }
    }
    path.push_back(cur);
  }
  return path;
}

}  // namespace sagin::sim
