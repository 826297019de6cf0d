#include "sagin/sim.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

#include <json.hpp>

#include "sagin/env.hpp"
#include "sagin/rng.hpp"

namespace sagin::sim {
namespace {

constexpr double kSpeedOfLight = 299792458.0;

bool is_ue(NodeKind k) { return k == NodeKind::kUeSource || k == NodeKind::kUeDest; }

double uniform(Rng& rng, double lo, double hi) {
  std::uniform_real_distribution<double> d(lo, hi);
  return d(rng);
}

Eigen::Vector3d random_ground_point(const World& w, Rng& rng, double z) {
  const double side = w.config.area_side_m;
  const double x = uniform(rng, 0.0, side);
  const double y = uniform(rng, 0.0, side);
  return {x, y, z};
}

Eigen::Vector3d leo_position(const World& w, const Node& n, double time_s, bool* covering) {
  const auto& c = w.config;
  double u = std::fmod(time_s + n.mobility.phase, c.leo_period_s) / c.leo_period_s;
  if (u < 0) u += 1.0;
  if (covering) *covering = u < c.leo_duty;
  const double track = c.area_side_m + 2.0 * c.leo_track_margin_m;
  const double x = -c.leo_track_margin_m + track * (u / c.leo_duty);
  return {x, c.area_side_m / 2.0, c.leo_altitude_m};
}

double& credit_from(Link& l, NodeId from) { return from == l.a ? l.credit_ab : l.credit_ba; }

void enqueue(World& w, Packet& p, NodeId at, Events& ev) {
  Node& node = w.nodes[at];
  if (node.queue.size() >= node.queue_capacity) {
    ev.push_back({EventKind::kDropped, w.tick, p.id, at, p.born_tick, p.size_bits, 0,
                  DropReason::kOverflow, 0});
    ++w.counters.dropped;
    w.packets.erase(p.id);
    return;
  }
  p.status = PacketStatus::kQueued;
  node.queue.push_back(p.id);
  if (node.kind == NodeKind::kBs && decision_eligible(w, p)) w.decision_batch[at].push_back(p.id);
}

}  // namespace

const char* to_string(NodeKind k) {
  switch (k) {
    case NodeKind::kUeSource: return "ue_source";
    case NodeKind::kUeDest: return "ue_dest";
    case NodeKind::kBs: return "bs";
    case NodeKind::kUav: return "uav";
    case NodeKind::kLeo: return "leo";
    case NodeKind::kGeo: return "geo";
  }
  return "?";
}

void SimConfig::validate() const {
  auto require = [](bool ok, const char* what) {
    if (!ok) throw std::invalid_argument(what);
  };
  require(area_side_m > 0, "sim.area_side_m must be > 0");
  require(num_bs >= 1, "sim.num_bs must be >= 1");
  require(num_uav >= 0 && num_leo >= 0 && num_geo >= 0, "sim node counts must be >= 0");
  require(num_sources >= 0 && num_dests >= 0, "sim UE counts must be >= 0");
  require(tick_s > 0, "sim.tick_s must be > 0");
  require(packet_bits > 0, "sim.packet_bits must be > 0");
  require(relay_queue_capacity >= 1 && ue_queue_capacity >= 1, "sim queue capacities must be >= 1");
  require(source_rate_mean_bps >= 0 && source_rate_sd_bps >= 0, "sim source rates must be >= 0");
  require(ue_speed_mps >= 0 && uav_speed_mps >= 0, "sim speeds must be >= 0");
  require(uav_direction_period_s > 0, "sim.uav_direction_period_s must be > 0");
  require(uav_radius_m > 0, "sim.uav_radius_m must be > 0");
  require(leo_period_s > 0 && leo_duty > 0 && leo_duty <= 1, "sim LEO period/duty invalid");
  require(access_rate_bps > 0 && backhaul_rate_bps > 0, "sim wired rates must be > 0");
  air_ground.validate();
  rain.validate();
  for (const Radio* r : {&radio.bs_uav, &radio.bs_leo, &radio.bs_geo, &radio.uav_leo, &radio.uav_geo,
                         &radio.leo_geo}) {
    r->validate();
  }
}

RngStreams RngStreams::from_seed(std::uint64_t seed) {
  return {stream_rng(seed, 1), stream_rng(seed, 2), stream_rng(seed, 3)};
}

std::vector<NodeId> World::ids_of(NodeKind kind) const {
  std::vector<NodeId> out;
  for (const auto& n : nodes) {
    if (n.kind == kind) out.push_back(n.id);
  }
  return out;
}

const Link* World::link(NodeId u, NodeId v) const {
  auto it = links.find({std::min(u, v), std::max(u, v)});
  return it == links.end() || !it->second.active ? nullptr : &it->second;
}

bool World::linked(NodeId u, NodeId v) const { return link(u, v) != nullptr; }

double World::horizontal_distance(NodeId u, NodeId v) const {
  return (nodes[u].position.head<2>() - nodes[v].position.head<2>()).norm();
}

double World::distance(NodeId u, NodeId v) const { return (nodes[u].position - nodes[v].position).norm(); }

std::pair<int, int> bs_grid(int num_bs) {
  int rows = static_cast<int>(std::floor(std::sqrt(static_cast<double>(num_bs))));
  while (rows > 1 && num_bs % rows != 0) --rows;
  rows = std::max(rows, 1);
  return {num_bs / rows, rows};
}

bool inside_area(const World& w, const Eigen::Vector3d& p) {
  const double s = w.config.area_side_m;
  return p.x() >= 0 && p.x() <= s && p.y() >= 0 && p.y() <= s;
}

World empty_world(const SimConfig& config, std::uint64_t seed) {
  World w;
  w.config = config;
  w.rng = RngStreams::from_seed(seed);
  w.rain_db = config.rain.mode == channel::RainMode::kFixed ? config.rain.fixed_db : 0.0;
  return w;
}

NodeId add_node(World& w, NodeKind kind, const Eigen::Vector3d& position, std::size_t capacity,
                MobilityState mobility) {
  const auto id = static_cast<NodeId>(w.nodes.size());
  Node n;
  n.id = id;
  n.kind = kind;
  n.position = position;
  n.queue_capacity = capacity;
  n.mobility = mobility;
  w.nodes.push_back(std::move(n));
  w.adjacency.emplace_back();
  w.decision_batch.emplace_back();
  if (kind == NodeKind::kUeSource) w.source_credit.push_back(0.0);
  return id;
}

void set_link(World& w, NodeId u, NodeId v, double rate_bps, bool active) {
  Link& l = w.links[{std::min(u, v), std::max(u, v)}];
  l.a = std::min(u, v);
  l.b = std::max(u, v);
  l.rate = rate_bps;
  l.active = active;
  w.fixed_links = true;
  refresh_adjacency(w);
}

void refresh_adjacency(World& w) {
  for (auto& a : w.adjacency) a.clear();
  for (const auto& [key, l] : w.links) {
    if (!l.active) continue;
    w.adjacency[l.a].push_back(l.b);
    w.adjacency[l.b].push_back(l.a);
  }
  for (auto& a : w.adjacency) std::sort(a.begin(), a.end());
}

World build_world(const SimConfig& config, std::uint64_t seed) {
  config.validate();
  World w = empty_world(config, seed);
  Rng& rng = w.rng.mobility;
  const double side = config.area_side_m;

  const auto [cols, rows] = bs_grid(config.num_bs);
  for (int i = 0; i < config.num_bs; ++i) {
    const int c = i % cols;
    const int r = i / cols;
    const Eigen::Vector3d p{(c + 0.5) * side / cols, (r + 0.5) * side / rows, config.bs_height_m};
    add_node(w, NodeKind::kBs, p, config.relay_queue_capacity);
  }
  for (int i = 0; i < config.num_uav; ++i) {
    MobilityState m;
    m.model = MobilityModel::kUavDrift;
    m.speed = config.uav_speed_mps;
    m.heading = uniform(rng, 0.0, 2.0 * std::numbers::pi);
    m.direction_change_period = config.uav_direction_period_s;
    m.timer = uniform(rng, 0.0, config.uav_direction_period_s);
    add_node(w, NodeKind::kUav, random_ground_point(w, rng, config.uav_altitude_m),
             config.relay_queue_capacity, m);
  }
  for (int i = 0; i < config.num_leo; ++i) {
    MobilityState m;
    m.model = MobilityModel::kLeoOrbit;
    m.phase = config.leo_period_s * i / std::max(config.num_leo, 1);
    const NodeId id = add_node(w, NodeKind::kLeo, Eigen::Vector3d::Zero(), config.relay_queue_capacity, m);
    bool covering = false;
    w.nodes[id].position = leo_position(w, w.nodes[id], 0.0, &covering);
    w.nodes[id].in_coverage = covering;
  }
  for (int i = 0; i < config.num_geo; ++i) {
    add_node(w, NodeKind::kGeo, {side / 2.0, side / 2.0, config.geo_altitude_m}, config.relay_queue_capacity);
  }
  for (NodeKind kind : {NodeKind::kUeSource, NodeKind::kUeDest}) {
    const int count = kind == NodeKind::kUeSource ? config.num_sources : config.num_dests;
    for (int i = 0; i < count; ++i) {
      MobilityState m;
      m.model = MobilityModel::kRandomWaypoint;
      m.speed = config.ue_speed_mps;
      const Eigen::Vector3d start = random_ground_point(w, rng, 1.5);
      m.waypoint = random_ground_point(w, rng, 1.5);
      add_node(w, kind, start, config.ue_queue_capacity, m);
    }
  }
  rebuild_links(w);
  return w;
}

void step_mobility(World& w, double dt, Rng& rng) {
  if (!(dt > 0)) throw std::invalid_argument("step_mobility: dt must be > 0");
  w.time_s += dt;
  const Eigen::Vector3d center{w.config.area_side_m / 2.0, w.config.area_side_m / 2.0, 0.0};
  for (auto& n : w.nodes) {
    auto& m = n.mobility;
    switch (m.model) {
      case MobilityModel::kStatic:
        break;
      case MobilityModel::kRandomWaypoint: {
        const double step = m.speed * dt;
        Eigen::Vector3d to = m.waypoint - n.position;
        const double d = to.norm();
        if (d <= step) {
          n.position = m.waypoint;
          m.waypoint = random_ground_point(w, rng, n.position.z());
        } else {
          n.position += to * (step / d);
        }
        break;
      }
      case MobilityModel::kUavDrift: {
        m.timer += dt;
        while (m.timer >= m.direction_change_period) {
          m.timer -= m.direction_change_period;
          // Always consume the draw so the stream is independent of position.
          m.heading = uniform(rng, 0.0, 2.0 * std::numbers::pi);
          if (!inside_area(w, n.position)) {
            m.heading = std::atan2(center.y() - n.position.y(), center.x() - n.position.x());
          }
        }
        n.position.x() += m.speed * dt * std::cos(m.heading);
        n.position.y() += m.speed * dt * std::sin(m.heading);
        n.in_coverage = inside_area(w, n.position);
        break;
      }
      case MobilityModel::kLeoOrbit: {
        bool covering = false;
        n.position = leo_position(w, n, w.time_s, &covering);
        n.in_coverage = covering;
        break;
      }
    }
  }
}

void rebuild_links(World& w) {
  if (w.fixed_links) return;
  const auto& c = w.config;
  std::map<std::pair<NodeId, NodeId>, Link> next;
  auto propose = [&](NodeId u, NodeId v, double rate) {
    const std::pair<NodeId, NodeId> key{std::min(u, v), std::max(u, v)};
    Link l;
    if (auto it = w.links.find(key); it != w.links.end() && it->second.active) l = it->second;
    l.a = key.first;
    l.b = key.second;
    l.rate = std::max(rate, 0.0);
    l.active = true;
    l.propagation_ticks =
        c.propagation_delay ? static_cast<Tick>(std::floor(w.distance(u, v) / kSpeedOfLight / c.tick_s)) : 0;
    next[key] = l;
  };
  auto sat_rate = [&](const Radio& r, NodeId u, NodeId v, double rain_db) {
    return channel::rate_from_gain(r, channel::gain_ground_satellite(r, w.distance(u, v), rain_db));
  };

  const auto bs = w.ids_of(NodeKind::kBs);
  const auto uav = w.ids_of(NodeKind::kUav);
  const auto leo = w.ids_of(NodeKind::kLeo);
  const auto geo = w.ids_of(NodeKind::kGeo);

  // UE access: attach to the nearest BS.
  for (const auto& n : w.nodes) {
    if (!is_ue(n.kind) || bs.empty()) continue;
    NodeId best = bs.front();
    for (NodeId b : bs) {
      if (w.horizontal_distance(n.id, b) < w.horizontal_distance(n.id, best)) best = b;
    }
    propose(n.id, best, c.access_rate_bps);
  }
  // Wired backhaul between grid neighbours.
  const auto [cols, rows] = bs_grid(static_cast<int>(bs.size()));
  for (std::size_t i = 0; i < bs.size(); ++i) {
    const int ci = static_cast<int>(i) % cols;
    const int ri = static_cast<int>(i) / cols;
    if (ci + 1 < cols) propose(bs[i], bs[i + 1], c.backhaul_rate_bps);
    if (ri + 1 < rows && i + cols < bs.size()) propose(bs[i], bs[i + cols], c.backhaul_rate_bps);
  }
  for (NodeId u : uav) {
    if (!w.nodes[u].in_coverage) continue;
    for (NodeId b : bs) {
      const double horizontal = w.horizontal_distance(u, b);
      if (horizontal > c.uav_radius_m) continue;
      const double dz = w.nodes[u].position.z() - w.nodes[b].position.z();
      const double l = std::max(horizontal, 1.0);
      const double pl = channel::path_loss_uav_bs(l, channel::elevation_deg(dz, l), c.air_ground);
      propose(u, b, channel::rate_from_path_loss(c.radio.bs_uav, pl));
    }
    for (NodeId s : leo) {
      if (w.nodes[s].in_coverage) propose(u, s, sat_rate(c.radio.uav_leo, u, s, w.rain_db));
    }
    for (NodeId g : geo) propose(u, g, sat_rate(c.radio.uav_geo, u, g, w.rain_db));
  }
  for (NodeId b : bs) {
    for (NodeId s : leo) {
      if (w.nodes[s].in_coverage) propose(b, s, sat_rate(c.radio.bs_leo, b, s, w.rain_db));
    }
    for (NodeId g : geo) propose(b, g, sat_rate(c.radio.bs_geo, b, g, w.rain_db));
  }
  for (NodeId s : leo) {
    for (NodeId g : geo) {
      propose(s, g, channel::rate_from_gain(c.radio.leo_geo,
                                            channel::gain_inter_satellite(c.radio.leo_geo, w.distance(s, g))));
    }
  }
  w.links = std::move(next);
  refresh_adjacency(w);
}

Events generate_packets(World& w, Rng& rng) {
  Events ev;
  const auto& c = w.config;
  const auto dests = w.ids_of(NodeKind::kUeDest);
  const double mean = c.source_rate_mean_bps * c.tick_s;
  const double sd = c.source_rate_sd_bps * c.tick_s;
  std::size_t source_index = 0;
  for (auto& n : w.nodes) {
    if (n.kind != NodeKind::kUeSource) continue;
    double bits = mean;
    if (sd > 0) bits = std::normal_distribution<double>(mean, sd)(rng);
    bits = std::max(bits, 0.0);
    w.counters.offered_bits += bits;
    double& credit = w.source_credit[source_index++];
    credit += bits;
    const auto count = static_cast<std::uint64_t>(std::floor(credit / c.packet_bits));
    credit -= static_cast<double>(count) * c.packet_bits;
    for (std::uint64_t k = 0; k < count && !dests.empty(); ++k) {
      std::uniform_int_distribution<std::size_t> pick(0, dests.size() - 1);
      Packet p;
      p.id = w.next_packet++;
      p.size_bits = c.packet_bits;
      p.src = n.id;
      p.dst = dests[pick(rng)];
      p.born_tick = w.tick;
      ++w.counters.generated;
      w.counters.generated_bits += p.size_bits;
      ev.push_back({EventKind::kGenerated, w.tick, p.id, n.id, p.born_tick, p.size_bits, 0,
                    DropReason::kNone, 0});
      auto route = ospf_route(w, p.src, p.dst, RouteScope::kTerrestrial);
      if (!route) {
        ev.push_back({EventKind::kDropped, w.tick, p.id, n.id, p.born_tick, p.size_bits, 0,
                      DropReason::kNoRoute, 0});
        ++w.counters.dropped;
        continue;
      }
      p.path = std::move(*route);
      auto [it, inserted] = w.packets.emplace(p.id, std::move(p));
      enqueue(w, it->second, n.id, ev);
    }
  }
  return ev;
}

bool decision_eligible(const World& w, const Packet& p) {
  return w.nodes[p.current()].kind == NodeKind::kBs && !p.offloaded && p.hop_index + 2 < p.path.size();
}

Events begin_tick(World& w) {
  Events ev;
  ++w.tick;
  for (auto& b : w.decision_batch) b.clear();
  step_mobility(w, w.config.tick_s, w.rng.mobility);
  w.rain_db = channel::rain_attenuation(w.config.rain, w.rng.rain);
  rebuild_links(w);

  while (!w.in_flight.empty() && w.in_flight.top().arrival <= w.tick) {
    const PacketId id = w.in_flight.top().packet;
    w.in_flight.pop();
    Packet& p = w.packets.at(id);
    ++p.hop_index;
    const NodeId at = p.current();
    if (at == p.dst) {
      ev.push_back({EventKind::kDelivered, w.tick, p.id, at, p.born_tick, p.size_bits,
                    static_cast<std::uint32_t>(p.hop_index), DropReason::kNone, 0});
      ++w.counters.delivered;
      w.packets.erase(id);
      continue;
    }
    enqueue(w, p, at, ev);
  }
  Events gen = generate_packets(w, w.rng.traffic);
  ev.insert(ev.end(), gen.begin(), gen.end());
  return ev;
}

Events finish_tick(World& w, const Decider& decide) {
  Events ev;
  for (auto& n : w.nodes) {
    if (n.kind != NodeKind::kBs) continue;
    for (PacketId id : w.decision_batch[n.id]) {
      Packet& p = w.packets.at(id);
      const int action = decide ? decide(w, n.id, p) : 0;
      p.decided = true;
      p.last_decider = n.id;
      if (action != 0) p.offloaded = true;
      ev.push_back({EventKind::kDecision, w.tick, id, n.id, p.born_tick, p.size_bits, 0, DropReason::kNone,
                    action});
    }
    w.decision_batch[n.id].clear();
  }

  const double dt = w.config.tick_s;
  for (auto& [key, l] : w.links) {
    const double budget = l.rate * dt;
    const double cap = std::max(budget, static_cast<double>(w.config.packet_bits));
    l.credit_ab = std::min(l.credit_ab + budget, cap);
    l.credit_ba = std::min(l.credit_ba + budget, cap);
  }

  for (auto& n : w.nodes) {
    if (n.queue.empty()) continue;
    std::deque<PacketId> kept;
    for (PacketId id : n.queue) {
      Packet& p = w.packets.at(id);
      const NodeId next = p.path[p.hop_index + 1];
      auto it = w.links.find({std::min(n.id, next), std::max(n.id, next)});
      if (it == w.links.end() || !it->second.active) {
        ev.push_back({EventKind::kDropped, w.tick, id, n.id, p.born_tick, p.size_bits, 0,
                      DropReason::kLinkLoss, 0});
        ++w.counters.dropped;
        w.packets.erase(id);
        continue;
      }
      double& credit = credit_from(it->second, n.id);
      if (credit >= p.size_bits) {
        credit -= p.size_bits;
        p.status = PacketStatus::kInFlight;
        w.in_flight.push({w.tick + 1 + it->second.propagation_ticks, w.next_seq++, id});
      } else {
        kept.push_back(id);
      }
    }
    n.queue = std::move(kept);
  }
  return ev;
}

Events simulate_tick(World& w, const std::map<NodeId, int>& actions) {
  Events ev = begin_tick(w);
  const env::ActionSpace space = env::ActionSpace::for_world(w, false);
  Events fin = finish_tick(w, [&](const World& world, NodeId bs, Packet& p) {
    auto it = actions.find(bs);
    const int a = it == actions.end() ? 0 : it->second;
    return env::apply_offload(world, p, a, space);
  });
  ev.insert(ev.end(), fin.begin(), fin.end());
  return ev;
}

void dump_snapshot(const World& w, std::ostream& out) {
  for (const auto& n : w.nodes) {
    nlohmann::json j{{"type", "node"},
                     {"tick", w.tick},
                     {"id", n.id},
                     {"kind", to_string(n.kind)},
                     {"x", n.position.x()},
                     {"y", n.position.y()},
                     {"z", n.position.z()},
                     {"queue", n.queue.size()},
                     {"capacity", n.queue_capacity},
                     {"in_coverage", n.in_coverage}};
    out << j.dump() << '\n';
  }
  for (const auto& [key, l] : w.links) {
    nlohmann::json j{{"type", "link"}, {"tick", w.tick},   {"a", l.a},
                     {"b", l.b},       {"rate", l.rate},   {"active", l.active},
                     {"propagation_ticks", l.propagation_ticks}};
    out << j.dump() << '\n';
  }
}

}  // namespace sagin::sim
