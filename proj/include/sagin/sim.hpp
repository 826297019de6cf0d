// Deterministic tick-based simulator of the four-layer SAGIN graph.
//
// One tick runs: mobility -> link rebuild -> arrivals -> packet generation
// -> offload decisions at BS nodes -> per-link transmission. Ticks are split
// into begin_tick() and finish_tick() so agents can observe the world right
// before decisions are taken.
#ifndef SAGIN_SIM_HPP_
#define SAGIN_SIM_HPP_

#include <Eigen/Core>

#include <cstdint>
#include <deque>
#include <functional>
#include <map>
#include <optional>
#include <ostream>
#include <queue>
#include <random>
#include <span>
#include <unordered_map>
#include <utility>
#include <vector>

#include "sagin/channel.hpp"

namespace sagin::sim {

using NodeId = std::uint32_t;
using PacketId = std::uint64_t;
using Tick = std::int64_t;
using Rng = std::mt19937_64;
using Radio = channel::RadioParams<double>;

enum class NodeKind : std::uint8_t { kUeSource, kUeDest, kBs, kUav, kLeo, kGeo };
inline constexpr int kNumNodeKinds = 6;
const char* to_string(NodeKind k);

enum class MobilityModel : std::uint8_t { kStatic, kRandomWaypoint, kUavDrift, kLeoOrbit };

struct MobilityState {
  MobilityModel model = MobilityModel::kStatic;
  double speed = 0.0;  // m/s
  double heading = 0.0;  // radians
  Eigen::Vector3d waypoint = Eigen::Vector3d::Zero();
  double direction_change_period = 0.0;  // s
  double timer = 0.0;  // s since last heading change
  double phase = 0.0;  // LEO orbit phase offset, s
};

struct Node {
  NodeId id = 0;
  NodeKind kind = NodeKind::kBs;
  Eigen::Vector3d position = Eigen::Vector3d::Zero();
  std::deque<PacketId> queue;
  std::size_t queue_capacity = 0;
  MobilityState mobility;
  bool in_coverage = true;  // UAV inside the area, LEO inside its on-window
};

struct Link {
  NodeId a = 0;  // a < b
  NodeId b = 0;
  double rate = 0.0;  // bits/s, same both directions
  bool active = false;
  double credit_ab = 0.0;  // transmit budget in bits, a -> b
  double credit_ba = 0.0;
  Tick propagation_ticks = 0;
};

enum class PacketStatus : std::uint8_t { kQueued, kInFlight, kDelivered, kDropped };

struct Packet {
  PacketId id = 0;
  std::uint32_t size_bits = 0;
  NodeId src = 0;
  NodeId dst = 0;
  Tick born_tick = 0;
  std::vector<NodeId> path;
  std::size_t hop_index = 0;  // path[hop_index] is the current node
  PacketStatus status = PacketStatus::kQueued;
  bool offloaded = false;
  NodeId last_decider = 0;
  bool decided = false;

  NodeId current() const { return path[hop_index]; }
};

enum class EventKind : std::uint8_t { kGenerated, kDelivered, kDropped, kDecision };
enum class DropReason : std::uint8_t { kNone, kOverflow, kLinkLoss, kNoRoute };

struct Event {
  EventKind kind = EventKind::kGenerated;
  Tick tick = 0;
  PacketId packet = 0;
  NodeId node = 0;  // where it happened (deciding BS for kDecision)
  Tick born = 0;
  std::uint32_t bits = 0;
  std::uint32_t hops = 0;  // realized hops for deliveries
  DropReason reason = DropReason::kNone;
  int action = 0;

  bool operator==(const Event&) const = default;
};

using Events = std::vector<Event>;

/// Per-class radio settings. Noise defaults to the -174 dBm/Hz floor.
struct RadioTable {
  Radio bs_uav{20e6, 0.1, channel::thermal_noise(20e6), 1.0, 1.0, 0.015};
  Radio bs_leo{37.5e6, 10.0, channel::thermal_noise(37.5e6), 1000.0, 1000.0, 0.015};
  Radio bs_geo{25e6, 10.0, channel::thermal_noise(25e6), 31623.0, 31623.0, 0.015};
  Radio uav_leo{10e6, 5.0, channel::thermal_noise(10e6), 100.0, 1000.0, 0.015};
  Radio uav_geo{5e6, 5.0, channel::thermal_noise(5e6), 316.0, 31623.0, 0.015};
  Radio leo_geo{50e6, 10.0, channel::thermal_noise(50e6), 31623.0, 31623.0, 0.015};
};

struct SimConfig {
  double area_side_m = 10000.0;  // 100 km^2 square
  int num_bs = 8;
  int num_uav = 6;
  int num_leo = 2;
  int num_geo = 1;
  int num_sources = 40;
  int num_dests = 20;

  double tick_s = 0.01;
  std::uint32_t packet_bits = 12000;
  std::size_t relay_queue_capacity = 200;
  std::size_t ue_queue_capacity = 200;
  double source_rate_mean_bps = 1e6;
  double source_rate_sd_bps = 1e5;

  double ue_speed_mps = 1.5;
  double bs_height_m = 25.0;
  double uav_speed_mps = 10.0;
  double uav_altitude_m = 100.0;
  double uav_direction_period_s = 20.0;
  double uav_radius_m = 3000.0;
  double leo_altitude_m = 550e3;
  double leo_period_s = 60.0;
  double leo_duty = 0.4;
  double leo_track_margin_m = 500e3;
  double geo_altitude_m = 35786e3;

  double access_rate_bps = 1e8;
  double backhaul_rate_bps = 8e6;
  bool propagation_delay = true;

  channel::AirGroundParams<double> air_ground;
  channel::RainModel rain;
  RadioTable radio;

  void validate() const;
};

struct Counters {
  std::uint64_t generated = 0;
  std::uint64_t delivered = 0;
  std::uint64_t dropped = 0;
  std::uint64_t generated_bits = 0;
  double offered_bits = 0.0;  // sum of truncated-normal draws
};

struct InFlight {
  Tick arrival = 0;
  std::uint64_t seq = 0;
  PacketId packet = 0;

  bool operator>(const InFlight& o) const {
    return arrival != o.arrival ? arrival > o.arrival : seq > o.seq;
  }
};

struct RngStreams {
  Rng mobility;
  Rng traffic;
  Rng rain;

  static RngStreams from_seed(std::uint64_t seed);
};

struct World {
  SimConfig config;
  std::vector<Node> nodes;  // nodes[i].id == i
  std::map<std::pair<NodeId, NodeId>, Link> links;
  std::vector<std::vector<NodeId>> adjacency;  // active neighbors, ascending
  std::unordered_map<PacketId, Packet> packets;  // queued or in flight only
  std::priority_queue<InFlight, std::vector<InFlight>, std::greater<>> in_flight;
  std::vector<double> source_credit;  // bits carried between ticks, per source
  std::vector<std::vector<PacketId>> decision_batch;  // per node, fresh BS arrivals this tick
  Tick tick = 0;
  double time_s = 0.0;
  PacketId next_packet = 0;
  std::uint64_t next_seq = 0;
  double rain_db = 0.0;
  bool fixed_links = false;  // set_link() topologies skip coverage rebuilds
  Counters counters;
  RngStreams rng;

  std::vector<NodeId> ids_of(NodeKind kind) const;
  const Link* link(NodeId u, NodeId v) const;
  bool linked(NodeId u, NodeId v) const;
  std::uint64_t in_system() const { return packets.size(); }
  double horizontal_distance(NodeId u, NodeId v) const;
  double distance(NodeId u, NodeId v) const;
};

/// Builds the world for `config`: BS on a grid over the area, random UE,
/// UAV placements and headings drawn from the seed.
World build_world(const SimConfig& config, std::uint64_t seed);

/// Empty world with the given config and no nodes, for hand-built topologies.
World empty_world(const SimConfig& config, std::uint64_t seed = 0);
NodeId add_node(World& w, NodeKind kind, const Eigen::Vector3d& position, std::size_t capacity,
                MobilityState mobility = {});
/// Forces a link with a fixed rate, bypassing coverage rules (tests and tools).
void set_link(World& w, NodeId u, NodeId v, double rate_bps, bool active = true);
void refresh_adjacency(World& w);

/// Grid layout used for BS placement and region partitioning: (cols, rows).
std::pair<int, int> bs_grid(int num_bs);

bool inside_area(const World& w, const Eigen::Vector3d& p);

void step_mobility(World& w, double dt, Rng& rng);

/// Recomputes the edge set from coverage rules and refreshes link rates.
void rebuild_links(World& w);

/// Emits new packets at each source; returns generation and birth-drop events.
Events generate_packets(World& w, Rng& rng);

enum class RouteScope { kAll, kTerrestrial };

/// Hop-count shortest path over active links, lexicographically smallest id
/// sequence among ties. `excluded` nodes are never used as intermediate hops.
std::optional<std::vector<NodeId>> ospf_route(const World& w, NodeId src, NodeId dst,
                                              RouteScope scope = RouteScope::kAll,
                                              std::span<const NodeId> excluded = {});

/// Per-packet decision at a BS: returns the action index taken. The callee
/// may rewrite `packet.path` from `packet.hop_index` onward.
using Decider = std::function<int(const World&, NodeId bs, Packet& packet)>;

/// Mobility, links, arrivals, generation. Leaves decision batches filled.
Events begin_tick(World& w);

/// Decisions for this tick's batches, then transmission.
Events finish_tick(World& w, const Decider& decide);

/// Full tick with fixed per-BS actions (missing BS default to action 0).
Events simulate_tick(World& w, const std::map<NodeId, int>& actions);

/// Decision-eligible: at a BS, not offloaded, not yet one hop from its destination.
bool decision_eligible(const World& w, const Packet& p);

/// Line-delimited JSON, one node or link per line.
void dump_snapshot(const World& w, std::ostream& out);

}  // namespace sagin::sim

#endif  // SAGIN_SIM_HPP_
