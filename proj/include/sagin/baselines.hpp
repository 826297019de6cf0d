// Rule-based offloading policies used as comparison points.
#ifndef SAGIN_BASELINES_HPP_
#define SAGIN_BASELINES_HPP_

#include <limits>
#include <vector>

#include "sagin/env.hpp"

namespace sagin::baseline {

inline constexpr std::size_t kInfeasible = std::numeric_limits<std::size_t>::max();

/// Remaining hops of `path` from `from`, or kInfeasible if any hop is inactive.
std::size_t remaining_hops(const sim::World& w, const std::vector<sim::NodeId>& path, std::size_t from);

/// Action whose resulting path has the fewest remaining hops over active
/// links; ties and all-infeasible go to action 0.
int greedy_offload(const sim::World& w, sim::NodeId bs, const sim::Packet& p, const env::ActionSpace& space);

inline int no_offload(const sim::World&, sim::NodeId, const sim::Packet&) { return 0; }

/// Deciders that also apply the chosen offload to the packet.
sim::Decider greedy_decider(const env::ActionSpace& space);
sim::Decider no_offload_decider();

}  // namespace sagin::baseline

#endif  // SAGIN_BASELINES_HPP_
