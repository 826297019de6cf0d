#include "sagin/env.hpp"

#include <algorithm>
#include <limits>
#include <map>
#include <string>
#include <stdexcept>

namespace sagin::env {
namespace {

using sim::NodeKind;

bool is_relay_kind(NodeKind k) { return k != NodeKind::kUeSource && k != NodeKind::kUeDest; }

NodeKind kind_of(RelayClass c) {
  switch (c) {
    case RelayClass::kUav: return NodeKind::kUav;
    case RelayClass::kLeo: return NodeKind::kLeo;
    default: return NodeKind::kGeo;
  }
}

void fill_slot(Observation& o, int slot, const sim::Node& n, double rate, const ObservationLayout& layout) {
  const int base = slot * ObservationLayout::kFeatures;
  o[base + static_cast<int>(n.kind)] = 1.0f;
  const double cap = static_cast<double>(std::max<std::size_t>(n.queue_capacity, 1));
  o[base + sim::kNumNodeKinds] = static_cast<float>(std::min(1.0, static_cast<double>(n.queue.size()) / cap));
  o[base + sim::kNumNodeKinds + 1] = static_cast<float>(std::min(1.0, rate / layout.rate_divisor));
  o[base + sim::kNumNodeKinds + 2] = 1.0f;
  o[base + sim::kNumNodeKinds + 3] = n.in_coverage ? 1.0f : 0.0f;
}

}  // namespace

int ActionSpace::size() const {
  if (!full_enumeration) return 4;
  return static_cast<int>(uavs.size() + leos.size()) + 2;
}

ActionSpace ActionSpace::for_world(const World& w, bool full_enumeration) {
  ActionSpace s;
  s.full_enumeration = full_enumeration;
  s.uavs = w.ids_of(NodeKind::kUav);
  s.leos = w.ids_of(NodeKind::kLeo);
  return s;
}

RelayClass relay_class(const ActionSpace& space, int action) {
  if (action < 0 || action >= space.size()) {
    throw std::out_of_range("action " + std::to_string(action) + " outside [0, " +
                            std::to_string(space.size()) + ")");
  }
  if (action == 0) return RelayClass::kNone;
  if (!space.full_enumeration) {
    return action == 1 ? RelayClass::kUav : action == 2 ? RelayClass::kLeo : RelayClass::kGeo;
  }
  const int u = static_cast<int>(space.uavs.size());
  const int l = static_cast<int>(space.leos.size());
  if (action <= u) return RelayClass::kUav;
  if (action <= u + l) return RelayClass::kLeo;
  return RelayClass::kGeo;
}

std::optional<NodeId> relay_candidate(const World& w, NodeId bs, int action, const ActionSpace& space) {
  const RelayClass c = relay_class(space, action);
  if (c == RelayClass::kNone) return std::nullopt;
  if (space.full_enumeration && c != RelayClass::kGeo) {
    const int u = static_cast<int>(space.uavs.size());
    const NodeId target = c == RelayClass::kUav ? space.uavs[action - 1] : space.leos[action - 1 - u];
    if (w.linked(bs, target)) return target;
    return std::nullopt;
  }
  const NodeKind want = kind_of(c);
  std::optional<NodeId> best;
  double best_d = std::numeric_limits<double>::infinity();
  for (NodeId n : w.adjacency[bs]) {
    if (w.nodes[n].kind != want) continue;
    const double d = w.distance(bs, n);
    if (d < best_d) {
      best_d = d;
      best = n;
    }
  }
  return best;
}

std::vector<NodeId> offload_path(const World& w, const sim::Packet& p, int action, const ActionSpace& space) {
  const auto relay = relay_candidate(w, p.current(), action, space);
  if (!relay) return p.path;
  std::vector<NodeId> prefix(p.path.begin(), p.path.begin() + static_cast<std::ptrdiff_t>(p.hop_index) + 1);
  if (std::find(prefix.begin(), prefix.end(), *relay) != prefix.end()) return p.path;
  const auto tail = sim::ospf_route(w, *relay, p.dst, sim::RouteScope::kAll, prefix);
  if (!tail) return p.path;
  prefix.insert(prefix.end(), tail->begin(), tail->end());
  return prefix;
}

int apply_offload(const World& w, sim::Packet& p, int action, const ActionSpace& space) {
  if (action == 0) return 0;
  std::vector<NodeId> path = offload_path(w, p, action, space);
  if (path == p.path) return 0;
  p.path = std::move(path);
  return action;
}

Observation observe(const World& w, NodeId bs, const ObservationLayout& layout) {
  Observation o = Observation::Zero(layout.dim());
  std::vector<NodeId> one;
  double self_rate = 0.0;
  for (NodeId n : w.adjacency[bs]) {
    if (!is_relay_kind(w.nodes[n].kind)) continue;
    one.push_back(n);
    self_rate += w.link(bs, n)->rate;
  }
  fill_slot(o, 0, w.nodes[bs], self_rate, layout);

  std::map<NodeId, double> two;
  for (NodeId n : one) {
    for (NodeId m : w.adjacency[n]) {
      if (m == bs || !is_relay_kind(w.nodes[m].kind)) continue;
      if (std::binary_search(one.begin(), one.end(), m)) continue;
      double& r = two[m];
      r = std::max(r, w.link(n, m)->rate);
    }
  }

  int slot = 1;
  for (std::size_t i = 0; i < one.size() && static_cast<int>(i) < layout.max_one_hop; ++i) {
    fill_slot(o, slot++, w.nodes[one[i]], w.link(bs, one[i])->rate, layout);
  }
  slot = 1 + layout.max_one_hop;
  int used = 0;
  for (const auto& [m, rate] : two) {
    if (used++ >= layout.max_two_hop) break;
    fill_slot(o, slot++, w.nodes[m], rate, layout);
  }
  return o;
}

double reward_delivered(double delay_s) {
  if (!(delay_s > 0)) throw std::domain_error("reward_delivered: delay must be > 0");
  return 1.0 / delay_s;
}

double reward_dropped(double born_s, double dropped_s) { return -(dropped_s - born_s); }

double reward(const sim::Event& e, double tick_s) {
  switch (e.kind) {
    case sim::EventKind::kDelivered:
      return reward_delivered(static_cast<double>(e.tick - e.born) * tick_s);
    case sim::EventKind::kDropped:
      return reward_dropped(static_cast<double>(e.born) * tick_s, static_cast<double>(e.tick) * tick_s);
    default:
      throw std::invalid_argument("reward: event is neither a delivery nor a drop");
  }
}

SaginEnv::SaginEnv(SaginEnvConfig config) : config_(std::move(config)), metrics_(config_.sim.tick_s) {
  config_.sim.validate();
  if (config_.ticks_per_episode <= 0) throw std::invalid_argument("env.ticks_per_episode must be > 0");
}

int SaginEnv::num_actions() const {
  if (!config_.full_action_enumeration) return 4;
  return config_.sim.num_uav + config_.sim.num_leo + 2;
}

StepResult SaginEnv::reset(std::uint64_t seed) { return reset_from(sim::build_world(config_.sim, seed)); }

StepResult SaginEnv::reset_from(World world) {
  if (static_cast<int>(world.ids_of(NodeKind::kBs).size()) != config_.sim.num_bs) {
    throw std::invalid_argument("reset_from: world BS count differs from sim.num_bs");
  }
  world_ = std::move(world);
  space_ = ActionSpace::for_world(world_, config_.full_action_enumeration);
  bs_ids_ = world_.ids_of(sim::NodeKind::kBs);
  pending_.clear();
  packet_owner_.clear();
  awaiting_next_obs_.clear();
  next_pending_ = 0;
  metrics_ = sim::MetricsAccumulator(config_.sim.tick_s);
  reward_sum_ = 0.0;
  reward_count_ = 0;
  packet_reward_sum_ = 0.0;
  packet_reward_count_ = 0;
  std::vector<std::vector<Transition>> completed(bs_ids_.size());
  absorb(sim::begin_tick(world_), &completed);
  return observe_all(std::move(completed));
}

StepResult SaginEnv::step(const std::vector<int>& actions) {
  if (actions.size() != bs_ids_.size()) {
    throw std::invalid_argument("step: expected " + std::to_string(bs_ids_.size()) + " actions");
  }
  std::vector<std::vector<Transition>> completed(bs_ids_.size());
  std::vector<int> agent_of(world_.nodes.size(), -1);
  for (std::size_t i = 0; i < bs_ids_.size(); ++i) {
    agent_of[bs_ids_[i]] = static_cast<int>(i);
    if (!needs_action_[i]) continue;
    const int a = actions[i];
    if (a < 0 || a >= space_.size()) throw std::out_of_range("step: action out of range");
    const std::uint64_t id = next_pending_++;
    Pending& pend = pending_[id];
    pend.agent = static_cast<int>(i);
    pend.obs = last_obs_[i];
    pend.action = a;
    for (sim::PacketId pid : world_.decision_batch[bs_ids_[i]]) {
      packet_owner_[pid].push_back(id);
      ++pend.outstanding;
    }
    awaiting_next_obs_.push_back(id);
  }
  const sim::Decider decide = [&](const World& w, NodeId bs, sim::Packet& p) {
    return apply_offload(w, p, actions[agent_of[bs]], space_);
  };
  return finish_and_advance(decide, std::move(completed));
}

StepResult SaginEnv::step_with(const sim::Decider& decide) {
  return finish_and_advance(decide, std::vector<std::vector<Transition>>(bs_ids_.size()));
}

StepResult SaginEnv::finish_and_advance(const sim::Decider& decide,
                                        std::vector<std::vector<Transition>> completed) {
  absorb(sim::finish_tick(world_, decide), &completed);
  absorb(sim::begin_tick(world_), &completed);
  return observe_all(std::move(completed));
}

void SaginEnv::absorb(const sim::Events& events, std::vector<std::vector<Transition>>* completed) {
  for (const auto& e : events) {
    metrics_.add(e);
    if (e.kind != sim::EventKind::kDelivered && e.kind != sim::EventKind::kDropped) continue;
    const double r = reward(e, config_.sim.tick_s);
    packet_reward_sum_ += r;
    ++packet_reward_count_;
    auto it = packet_owner_.find(e.packet);
    if (it == packet_owner_.end()) continue;
    const std::vector<std::uint64_t> deciders = std::move(it->second);
    packet_owner_.erase(it);
    for (std::uint64_t id : deciders) {
      auto po = pending_.find(id);
      if (po == pending_.end()) continue;
      po->second.reward_sum += r;
      ++po->second.rewarded;
      --po->second.outstanding;
      try_complete(id, completed);
    }
  }
}

void SaginEnv::try_complete(std::uint64_t pending_id, std::vector<std::vector<Transition>>* completed) {
  auto it = pending_.find(pending_id);
  if (it == pending_.end()) return;
  Pending& p = it->second;
  if (p.outstanding != 0 || !p.next_obs) return;
  if (p.rewarded > 0) {
    const double r = p.reward_sum / p.rewarded;
    if (completed) {
      (*completed)[p.agent].push_back({std::move(p.obs), p.action, static_cast<float>(r), std::move(*p.next_obs),
                                       false});
    }
    reward_sum_ += r;
    ++reward_count_;
  }
  pending_.erase(it);
}

StepResult SaginEnv::observe_all(std::vector<std::vector<Transition>> completed) {
  last_obs_.resize(bs_ids_.size());
  needs_action_.assign(bs_ids_.size(), 0);
  for (std::size_t i = 0; i < bs_ids_.size(); ++i) {
    last_obs_[i] = observe(world_, bs_ids_[i], config_.layout);
    needs_action_[i] = world_.decision_batch[bs_ids_[i]].empty() ? 0 : 1;
  }
  std::vector<std::uint64_t> awaiting = std::move(awaiting_next_obs_);
  awaiting_next_obs_.clear();
  for (std::uint64_t id : awaiting) {
    auto it = pending_.find(id);
    if (it == pending_.end()) continue;
    it->second.next_obs = last_obs_[it->second.agent];
    try_complete(id, &completed);
  }
  StepResult r;
  r.obs = last_obs_;
  r.needs_action = needs_action_;
  r.completed = std::move(completed);
  r.episode_over = world_.tick >= config_.ticks_per_episode;
  return r;
}

}  // namespace sagin::env
