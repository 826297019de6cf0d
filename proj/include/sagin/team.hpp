// Multi-agent learners behind one interface: DFSAC and the learning baselines.
#ifndef SAGIN_TEAM_HPP_
#define SAGIN_TEAM_HPP_

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "sagin/ddqn.hpp"
#include "sagin/federation.hpp"
#include "sagin/sac.hpp"

namespace sagin::agent {

enum class Algorithm { kDfsac, kFedAvgSac, kCentralizedSac, kDdqn, kFlDdqn, kDfrlDdqn, kGreedy, kNone };

const char* to_string(Algorithm a);
/// Throws std::invalid_argument listing the valid names.
Algorithm parse_algorithm(const std::string& name);
bool is_learning(Algorithm a);
const std::vector<Algorithm>& all_algorithms();

struct TeamConfig {
  SacConfig sac;
  DdqnConfig ddqn;
  double epsilon = 1e-2;  // soft aggregation factor
  int k = 200;  // joint train iterations per federation round
};

/// Loss tallies since the last take_stats().
struct TeamStats {
  double policy_loss_sum = 0.0;
  double trend_loss_sum = 0.0;
  std::int64_t updates = 0;
  double alpha_sum = 0.0;

  double mean_policy_loss() const { return updates ? policy_loss_sum / updates : 0.0; }
  double mean_trend_loss() const { return updates ? trend_loss_sum / updates : 0.0; }
  double mean_alpha() const { return updates ? alpha_sum / updates : 0.0; }
};

class Team {
 public:
  virtual ~Team() = default;

  virtual int act(int agent, const Observation& obs, ActionMode mode) = 0;
  virtual void store(int agent, Transition t) = 0;
  /// One joint iteration: each ready learner takes its train step(s);
  /// federation runs after every k joint iterations that trained.
  virtual void train() = 0;

  /// Observer on every federation message (no-op for teams without a server).
  virtual void set_observer(fed::FederationServer::Observer) {}

  std::int64_t joint_iterations() const { return joint_iterations_; }
  std::int64_t rounds() const { return rounds_; }
  TeamStats take_stats() {
    TeamStats s = stats_;
    stats_ = {};
    return s;
  }

 protected:
  std::int64_t joint_iterations_ = 0;
  std::int64_t rounds_ = 0;
  TeamStats stats_;
};

/// Team for a learning algorithm; throws for rule-based ones.
std::unique_ptr<Team> make_team(Algorithm algorithm, int num_agents, int obs_dim, int num_actions,
                                const TeamConfig& config, std::uint64_t seed);

// Concrete teams, exposed for tests.

class DfsacTeam : public Team {
 public:
  DfsacTeam(int num_agents, int obs_dim, int num_actions, const TeamConfig& config, std::uint64_t seed);
  int act(int agent, const Observation& obs, ActionMode mode) override;
  void store(int agent, Transition t) override;
  void train() override;
  void set_observer(fed::FederationServer::Observer obs) override { server_->set_observer(std::move(obs)); }

  SacAgent& agent(int i) { return agents_[i]; }
  fed::FederationServer& server() { return *server_; }
  void federate();

 private:
  std::vector<SacAgent> agents_;
  std::unique_ptr<fed::FederationServer> server_;
  int k_;
};

class FedAvgSacTeam : public Team {
 public:
  FedAvgSacTeam(int num_agents, int obs_dim, int num_actions, const TeamConfig& config, std::uint64_t seed);
  int act(int agent, const Observation& obs, ActionMode mode) override;
  void store(int agent, Transition t) override;
  void train() override;
  void set_observer(fed::FederationServer::Observer obs) override { server_->set_observer(std::move(obs)); }

  SacAgent& agent(int i) { return agents_[i]; }
  void federate();

 private:
  std::vector<SacAgent> agents_;
  std::unique_ptr<fed::FederationServer> server_;
  int k_;
};

/// One SAC learner shared by all environments; trains once per stored transition.
class CentralizedSacTeam : public Team {
 public:
  CentralizedSacTeam(int num_agents, int obs_dim, int num_actions, const TeamConfig& config, std::uint64_t seed);
  int act(int agent, const Observation& obs, ActionMode mode) override;
  void store(int agent, Transition t) override;
  void train() override;

  SacAgent& learner() { return learner_; }

 private:
  SacAgent learner_;
  std::int64_t untrained_ = 0;
};

class DdqnTeam : public Team {
 public:
  /// kind is kDdqn (independent), kFlDdqn (FedAvg of Q) or kDfrlDdqn
  /// (local Q soft-aggregated into a shared target).
  DdqnTeam(Algorithm kind, int num_agents, int obs_dim, int num_actions, const TeamConfig& config,
           std::uint64_t seed);
  int act(int agent, const Observation& obs, ActionMode mode) override;
  void store(int agent, Transition t) override;
  void train() override;
  void set_observer(fed::FederationServer::Observer obs) override {
    if (server_) server_->set_observer(std::move(obs));
  }

  DdqnAgent& agent(int i) { return agents_[i]; }
  void federate();

 private:
  Algorithm kind_;
  std::vector<DdqnAgent> agents_;
  std::unique_ptr<fed::FederationServer> server_;
  int k_;
};

}  // namespace sagin::agent

#endif  // SAGIN_TEAM_HPP_
