// Cart-pole balancing with a configurable pole length, and a lockstep family
// of such environments exposed through the multi-agent interface.
#ifndef SAGIN_CARTPOLE_HPP_
#define SAGIN_CARTPOLE_HPP_

#include <array>
#include <cstdint>
#include <random>
#include <vector>

#include "sagin/env.hpp"

namespace sagin::env {

struct CartPoleParams {
  double gravity = 9.8;
  double cart_mass = 1.0;
  double pole_mass = 0.1;
  double half_length = 0.5;  // m, pivot to centre of mass
  double force = 10.0;
  double tau = 0.02;
  double theta_limit_rad = 12.0 * 2.0 * 3.14159265358979323846 / 360.0;
  double x_limit = 2.4;
  int max_steps = 200;
};

class CartPole {
 public:
  using State = std::array<double, 4>;  // x, x_dot, theta, theta_dot

  explicit CartPole(CartPoleParams params);

  State reset(std::mt19937_64& rng);
  void set_state(const State& s);

  struct Outcome {
    double reward = 0.0;
    bool terminal = false;   // constraint violated
    bool truncated = false;  // step cap reached without failure
  };
  Outcome step(int action);

  const State& state() const { return state_; }
  const CartPoleParams& params() const { return params_; }
  int steps() const { return steps_; }
  Observation observation() const;

 private:
  CartPoleParams params_;
  State state_{};
  int steps_ = 0;
};

/// Cart-pole with the given pole length in metres, measured from the pivot to
/// the pole's centre of mass (0.5 gives the classic benchmark).
CartPole cartpole_make(double pole_length);

/// One cart-pole per agent, stepped in lockstep. A finished environment waits
/// (needs_action false) until every member has finished its episode.
class CartPoleFamily : public MultiAgentEnv {
 public:
  explicit CartPoleFamily(std::vector<double> pole_lengths);

  int num_agents() const override { return static_cast<int>(envs_.size()); }
  int obs_dim() const override { return 4; }
  int num_actions() const override { return 2; }
  StepResult reset(std::uint64_t seed) override;
  StepResult step(const std::vector<int>& actions) override;

  double episode_return(int agent) const { return returns_[agent]; }
  const CartPole& env(int agent) const { return envs_[agent]; }

 private:
  StepResult snapshot(std::vector<std::vector<Transition>> completed) const;

  std::vector<CartPole> envs_;
  std::vector<std::mt19937_64> rngs_;
  std::vector<char> done_;
  std::vector<double> returns_;
};

}  // namespace sagin::env

#endif  // SAGIN_CARTPOLE_HPP_
