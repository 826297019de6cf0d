#include "sagin/replay.hpp"

#include <stdexcept>
#include <string>

namespace sagin::agent {
namespace {

void append(Batch& b, const Transition& t, int column, int source) {
  b.obs.col(column) = t.obs;
  b.next_obs.col(column) = t.next_obs;
  b.actions[column] = t.action;
  b.rewards[column] = t.reward;
  b.terminal[column] = t.terminal ? 1.0f : 0.0f;
  b.sources[column] = source;
}

Batch empty_batch(int dim, int n) {
  Batch b;
  b.obs.resize(dim, n);
  b.next_obs.resize(dim, n);
  b.actions.resize(n);
  b.rewards.resize(n);
  b.terminal.resize(n);
  b.sources.resize(n);
  return b;
}

}  // namespace

Batch make_batch(const std::vector<Transition>& transitions) {
  if (transitions.empty()) throw std::invalid_argument("make_batch: no transitions");
  const int n = static_cast<int>(transitions.size());
  Batch b = empty_batch(static_cast<int>(transitions.front().obs.size()), n);
  for (int i = 0; i < n; ++i) append(b, transitions[i], i, 0);
  return b;
}

ReplayMemory::ReplayMemory(std::size_t capacity, std::uint64_t seed) : capacity_(capacity), rng_(seed) {
  if (capacity == 0) throw std::invalid_argument("replay capacity must be > 0");
}

void ReplayMemory::push(Transition t, int source) {
  if (items_.size() < capacity_) {
    items_.push_back(std::move(t));
    sources_.push_back(source);
    return;
  }
  items_[next_] = std::move(t);
  sources_[next_] = source;
  next_ = (next_ + 1) % capacity_;
}

Batch ReplayMemory::sample(std::size_t n) {
  if (n == 0 || items_.size() < n) {
    throw std::length_error("replay holds " + std::to_string(items_.size()) + " transitions, need " +
                            std::to_string(n));
  }
  std::uniform_int_distribution<std::size_t> pick(0, items_.size() - 1);
  Batch b = empty_batch(static_cast<int>(items_.front().obs.size()), static_cast<int>(n));
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t k = pick(rng_);
    append(b, items_[k], static_cast<int>(i), sources_[k]);
  }
  return b;
}

}  // namespace sagin::agent
