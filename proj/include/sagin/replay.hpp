// Fixed-capacity ring buffer of transitions with a seeded uniform sampler.
#ifndef SAGIN_REPLAY_HPP_
#define SAGIN_REPLAY_HPP_

#include <cstdint>
#include <random>
#include <vector>

#include "sagin/env.hpp"

namespace sagin::agent {

using env::Transition;

/// Column-stacked minibatch: obs and next_obs are obs_dim x n.
struct Batch {
  nn::MatrixXf obs;
  std::vector<int> actions;
  nn::VectorXf rewards;
  nn::MatrixXf next_obs;
  nn::VectorXf terminal;  // 1 for terminal transitions
  std::vector<int> sources;

  int size() const { return static_cast<int>(actions.size()); }
};

Batch make_batch(const std::vector<Transition>& transitions);

class ReplayMemory {
 public:
  ReplayMemory(std::size_t capacity, std::uint64_t seed);

  /// `source` tags the producing environment (used by the centralized learner).
  void push(Transition t, int source = 0);
  std::size_t size() const { return items_.size(); }
  std::size_t capacity() const { return capacity_; }
  const Transition& at(std::size_t i) const { return items_[i]; }
  int source_at(std::size_t i) const { return sources_[i]; }

  /// Uniform sample with replacement; throws std::length_error when size() < n.
  Batch sample(std::size_t n);

 private:
  std::size_t capacity_;
  std::vector<Transition> items_;
  std::vector<int> sources_;
  std::size_t next_ = 0;
  std::mt19937_64 rng_;
};

}  // namespace sagin::agent

#endif  // SAGIN_REPLAY_HPP_
