// DEC-POMDP adapter over the simulator: per-BS observations, offload actions,
// delay-based rewards, and the multi-agent reset/step interface shared with
// the cart-pole family.
#ifndef SAGIN_ENV_HPP_
#define SAGIN_ENV_HPP_

#include <cstdint>
#include <optional>
#include <unordered_map>
#include <vector>

#include "sagin/metrics.hpp"
#include "sagin/nn.hpp"
#include "sagin/sim.hpp"

namespace sagin::env {

using sim::NodeId;
using sim::World;
using Observation = nn::VectorXf;

/// Discrete offload actions. Collapsed layout (default):
///   0 keep pre-set route, 1 nearest UAV, 2 nearest LEO, 3 GEO.
/// Full layout: 0, one action per UAV, one per LEO, then GEO.
struct ActionSpace {
  bool full_enumeration = false;
  std::vector<NodeId> uavs;
  std::vector<NodeId> leos;

  int size() const;
  static ActionSpace for_world(const World& w, bool full_enumeration);
};

enum class RelayClass { kNone, kUav, kLeo, kGeo };
RelayClass relay_class(const ActionSpace& space, int action);

/// Relay the action points at, restricted to active one-hop neighbours of `bs`:
/// a specific node in full mode, otherwise the nearest node of the class.
std::optional<NodeId> relay_candidate(const World& w, NodeId bs, int action, const ActionSpace& space);

/// Path the packet would follow under `action`. Degenerates to the current
/// path when the class has no active candidate or no onward route exists.
std::vector<NodeId> offload_path(const World& w, const sim::Packet& p, int action, const ActionSpace& space);

/// Rewrites the packet path; returns the effective action (0 when degenerate).
int apply_offload(const World& w, sim::Packet& p, int action, const ActionSpace& space);

/// Observation layout: one slot for the observing BS, then one-hop and
/// two-hop relay neighbours (UE nodes excluded) in ascending id order.
/// Per slot: kind one-hot (6), queue occupancy fraction, link rate / rate_divisor
/// (capped at 1), connected flag, coverage flag.
struct ObservationLayout {
  int max_one_hop = 12;
  int max_two_hop = 16;
  double rate_divisor = 1e8;

  static constexpr int kFeatures = sim::kNumNodeKinds + 4;
  int slots() const { return 1 + max_one_hop + max_two_hop; }
  int dim() const { return slots() * kFeatures; }
};

Observation observe(const World& w, NodeId bs, const ObservationLayout& layout = {});

/// Reward for one terminated packet, times in seconds.
double reward_delivered(double delay_s);
double reward_dropped(double born_s, double dropped_s);
/// Reward for a delivery or drop event; throws for other kinds.
double reward(const sim::Event& e, double tick_s);

struct Transition {
  Observation obs;
  int action = 0;
  float reward = 0.0f;
  Observation next_obs;
  bool terminal = false;
};

struct StepResult {
  std::vector<Observation> obs;
  std::vector<char> needs_action;  // agent must supply an action this step
  std::vector<std::vector<Transition>> completed;  // per agent
  bool episode_over = false;
};

class MultiAgentEnv {
 public:
  virtual ~MultiAgentEnv() = default;
  virtual int num_agents() const = 0;
  virtual int obs_dim() const = 0;
  virtual int num_actions() const = 0;
  virtual StepResult reset(std::uint64_t seed) = 0;
  /// `actions[i]` is read only where the previous result had needs_action[i].
  virtual StepResult step(const std::vector<int>& actions) = 0;
};

struct SaginEnvConfig {
  sim::SimConfig sim;
  ObservationLayout layout;
  bool full_action_enumeration = false;
  sim::Tick ticks_per_episode = 2000;
};

/// One agent per BS (agent i <-> i-th BS by id). A BS acts on the batch of
/// packets that reached it this tick; the transition reward is the mean
/// per-packet reward. Every BS that decided on a packet is credited with its
/// outcome, so a pass-through decision is scored like an offload.
class SaginEnv : public MultiAgentEnv {
 public:
  explicit SaginEnv(SaginEnvConfig config);

  int num_agents() const override { return config_.sim.num_bs; }
  int obs_dim() const override { return config_.layout.dim(); }
  int num_actions() const override;
  StepResult reset(std::uint64_t seed) override;
  /// Starts an episode on a prepared world; its BS count must match the config.
  StepResult reset_from(World world);
  StepResult step(const std::vector<int>& actions) override;

  /// Rule-based stepping (baselines): per-packet decisions, no transitions.
  StepResult step_with(const sim::Decider& decide);

  const World& world() const { return world_; }
  const ActionSpace& action_space() const { return space_; }
  const sim::MetricsAccumulator& metrics() const { return metrics_; }
  const SaginEnvConfig& config() const { return config_; }
  /// Sum and count of resolved per-transition rewards this episode.
  double reward_sum() const { return reward_sum_; }
  std::uint64_t reward_count() const { return reward_count_; }
  /// Mean per-packet reward over every delivery and drop this episode.
  double mean_packet_reward() const {
    return packet_reward_count_ ? packet_reward_sum_ / static_cast<double>(packet_reward_count_) : 0.0;
  }

 private:
  struct Pending {
    int agent = 0;
    Observation obs;
    int action = 0;
    std::optional<Observation> next_obs;
    std::uint32_t outstanding = 0;
    double reward_sum = 0.0;
    std::uint32_t rewarded = 0;
  };

  StepResult finish_and_advance(const sim::Decider& decide, std::vector<std::vector<Transition>> completed);
  void absorb(const sim::Events& events, std::vector<std::vector<Transition>>* completed);
  void try_complete(std::uint64_t pending_id, std::vector<std::vector<Transition>>* completed);
  StepResult observe_all(std::vector<std::vector<Transition>> completed);

  SaginEnvConfig config_;
  World world_;
  ActionSpace space_;
  std::vector<NodeId> bs_ids_;
  std::vector<Observation> last_obs_;
  std::vector<char> needs_action_;
  std::unordered_map<std::uint64_t, Pending> pending_;
  std::unordered_map<sim::PacketId, std::vector<std::uint64_t>> packet_owner_;  // deciders
  std::vector<std::uint64_t> awaiting_next_obs_;
  std::uint64_t next_pending_ = 0;
  sim::MetricsAccumulator metrics_;
  double reward_sum_ = 0.0;
  std::uint64_t reward_count_ = 0;
  double packet_reward_sum_ = 0.0;
  std::uint64_t packet_reward_count_ = 0;
};

}  // namespace sagin::env

#endif  // SAGIN_ENV_HPP_
