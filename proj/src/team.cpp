#include "sagin/team.hpp"

#include <stdexcept>

#include "sagin/rng.hpp"

namespace sagin::agent {
namespace {

using fed::PayloadKind;

fed::FederationConfig fed_config(int n, const TeamConfig& c, fed::Mode mode) {
  fed::FederationConfig f;
  f.epsilon = c.epsilon;
  f.k = c.k;
  f.mode = mode;
  for (int i = 0; i < n; ++i) f.roster.push_back(static_cast<std::uint32_t>(i));
  return f;
}

void require_agents(int n) {
  if (n < 1) throw std::invalid_argument("a team needs at least one agent");
}

std::vector<std::size_t> model_counts(const SacAgent& a) {
  return {a.policy().tensors.size(), a.trend(0).tensors.size(), a.trend(1).tensors.size()};
}

ParamSet full_model(const SacAgent& a) { return fed::concat_model({&a.policy(), &a.trend(0), &a.trend(1)}); }

void tally(TeamStats& s, const TrainDiagnostics& d) {
  s.policy_loss_sum += d.policy_loss;
  s.trend_loss_sum += d.trend_loss;
  s.alpha_sum += d.alpha;
  ++s.updates;
}

}  // namespace

const char* to_string(Algorithm a) {
  switch (a) {
    case Algorithm::kDfsac: return "dfsac";
    case Algorithm::kFedAvgSac: return "fedavg_sac";
    case Algorithm::kCentralizedSac: return "centralized_sac";
    case Algorithm::kDdqn: return "ddqn";
    case Algorithm::kFlDdqn: return "fl_ddqn";
    case Algorithm::kDfrlDdqn: return "dfrl_ddqn";
    case Algorithm::kGreedy: return "greedy";
    case Algorithm::kNone: return "none";
  }
  return "?";
}

const std::vector<Algorithm>& all_algorithms() {
  static const std::vector<Algorithm> all{Algorithm::kDfsac,   Algorithm::kFedAvgSac, Algorithm::kCentralizedSac,
                                          Algorithm::kDdqn,    Algorithm::kFlDdqn,    Algorithm::kDfrlDdqn,
                                          Algorithm::kGreedy,  Algorithm::kNone};
  return all;
}

Algorithm parse_algorithm(const std::string& name) {
  std::string names;
  for (Algorithm a : all_algorithms()) {
    if (name == to_string(a)) return a;
    names += names.empty() ? "" : ", ";
    names += to_string(a);
  }
  throw std::invalid_argument("unknown algorithm '" + name + "' (expected one of: " + names + ")");
}

bool is_learning(Algorithm a) { return a != Algorithm::kGreedy && a != Algorithm::kNone; }

std::unique_ptr<Team> make_team(Algorithm algorithm, int num_agents, int obs_dim, int num_actions,
                                const TeamConfig& config, std::uint64_t seed) {
  switch (algorithm) {
    case Algorithm::kDfsac:
      return std::make_unique<DfsacTeam>(num_agents, obs_dim, num_actions, config, seed);
    case Algorithm::kFedAvgSac:
      return std::make_unique<FedAvgSacTeam>(num_agents, obs_dim, num_actions, config, seed);
    case Algorithm::kCentralizedSac:
      return std::make_unique<CentralizedSacTeam>(num_agents, obs_dim, num_actions, config, seed);
    case Algorithm::kDdqn:
    case Algorithm::kFlDdqn:
    case Algorithm::kDfrlDdqn:
      return std::make_unique<DdqnTeam>(algorithm, num_agents, obs_dim, num_actions, config, seed);
    default:
      throw std::invalid_argument(std::string("algorithm '") + to_string(algorithm) + "' does not learn");
  }
}

// DFSAC: private policies, local trends, server-held global trend backups.

DfsacTeam::DfsacTeam(int num_agents, int obs_dim, int num_actions, const TeamConfig& config, std::uint64_t seed)
    : k_(config.k) {
  require_agents(num_agents);
  SacConfig sc = config.sac;
  sc.target_mode = TargetMode::kFederated;
  for (int i = 0; i < num_agents; ++i) agents_.emplace_back(obs_dim, num_actions, sc, derive_seed(seed, i));
  const ParamSet g1 = agents_[0].trend(0);
  const ParamSet g2 = agents_[0].trend(1);
  server_ = std::make_unique<fed::FederationServer>(
      fed_config(num_agents, config, fed::Mode::kDfsacSoft),
      std::map<PayloadKind, std::uint64_t>{{PayloadKind::kTrend1, g1.layout_id()},
                                           {PayloadKind::kTrend2, g2.layout_id()}});
  server_->set_globals(g1, g2);
  for (auto& a : agents_) {
    a.set_trends(g1, g2);
    a.set_global_trends(g1, g2);
  }
}

int DfsacTeam::act(int agent, const Observation& obs, ActionMode mode) {
  return agents_.at(agent).select_action(obs, mode);
}

void DfsacTeam::store(int agent, Transition t) { agents_.at(agent).remember(std::move(t)); }

void DfsacTeam::train() {
  bool trained = false;
  for (auto& a : agents_) {
    if (auto d = a.train_step()) {
      tally(stats_, *d);
      trained = true;
    }
  }
  if (!trained) return;
  if (++joint_iterations_ % k_ == 0) federate();
}

void DfsacTeam::federate() {
  std::vector<fed::RoundMessage> msgs;
  const std::uint32_t round = server_->round();
  for (std::size_t i = 0; i < agents_.size(); ++i) {
    msgs.push_back(fed::make_message(round, static_cast<std::uint32_t>(i), PayloadKind::kTrend1, agents_[i].trend(0)));
    msgs.push_back(fed::make_message(round, static_cast<std::uint32_t>(i), PayloadKind::kTrend2, agents_[i].trend(1)));
  }
  fed::Distribution d = server_->run_round(msgs);
  for (auto& a : agents_) a.set_global_trends(d.params.at(PayloadKind::kTrend1), d.params.at(PayloadKind::kTrend2));
  ++rounds_;
}

// FedAvg-SAC: the full model is averaged; targets follow each agent's local trends.

FedAvgSacTeam::FedAvgSacTeam(int num_agents, int obs_dim, int num_actions, const TeamConfig& config,
                             std::uint64_t seed)
    : k_(config.k) {
  require_agents(num_agents);
  SacConfig sc = config.sac;
  sc.target_mode = TargetMode::kLocalSoft;
  for (int i = 0; i < num_agents; ++i) agents_.emplace_back(obs_dim, num_actions, sc, derive_seed(seed, i));
  for (int i = 1; i < num_agents; ++i) {
    agents_[i].set_policy(agents_[0].policy());
    agents_[i].set_trends(agents_[0].trend(0), agents_[0].trend(1));
    agents_[i].set_global_trends(agents_[0].global_trend(0), agents_[0].global_trend(1));
  }
  server_ = std::make_unique<fed::FederationServer>(
      fed_config(num_agents, config, fed::Mode::kFedAvgMean),
      std::map<PayloadKind, std::uint64_t>{{PayloadKind::kFullModel, full_model(agents_[0]).layout_id()}});
}

int FedAvgSacTeam::act(int agent, const Observation& obs, ActionMode mode) {
  return agents_.at(agent).select_action(obs, mode);
}

void FedAvgSacTeam::store(int agent, Transition t) { agents_.at(agent).remember(std::move(t)); }

void FedAvgSacTeam::train() {
  bool trained = false;
  for (auto& a : agents_) {
    if (auto d = a.train_step()) {
      tally(stats_, *d);
      trained = true;
    }
  }
  if (!trained) return;
  if (++joint_iterations_ % k_ == 0) federate();
}

void FedAvgSacTeam::federate() {
  std::vector<fed::RoundMessage> msgs;
  const std::uint32_t round = server_->round();
  for (std::size_t i = 0; i < agents_.size(); ++i) {
    msgs.push_back(fed::make_message(round, static_cast<std::uint32_t>(i), PayloadKind::kFullModel,
                                     full_model(agents_[i])));
  }
  fed::Distribution d = server_->run_round(msgs);
  auto parts = fed::split_model(d.params.at(PayloadKind::kFullModel), model_counts(agents_[0]));
  for (auto& a : agents_) {
    a.set_policy(parts[0]);
    a.set_trends(parts[1], parts[2]);
  }
  ++rounds_;
}

// Centralized SAC.

CentralizedSacTeam::CentralizedSacTeam(int num_agents, int obs_dim, int num_actions, const TeamConfig& config,
                                       std::uint64_t seed)
    : learner_(obs_dim, num_actions,
               [&] {
                 SacConfig sc = config.sac;
                 sc.target_mode = TargetMode::kLocalSoft;
                 return sc;
               }(),
               derive_seed(seed, 0)) {
  require_agents(num_agents);
}

int CentralizedSacTeam::act(int, const Observation& obs, ActionMode mode) { return learner_.select_action(obs, mode); }

void CentralizedSacTeam::store(int agent, Transition t) {
  learner_.remember(std::move(t), agent);
  ++untrained_;
}

void CentralizedSacTeam::train() {
  bool trained = false;
  for (; untrained_ > 0; --untrained_) {
    if (auto d = learner_.train_step()) {
      tally(stats_, *d);
      trained = true;
    }
  }
  if (trained) ++joint_iterations_;
}

// DDQN family.

DdqnTeam::DdqnTeam(Algorithm kind, int num_agents, int obs_dim, int num_actions, const TeamConfig& config,
                   std::uint64_t seed)
    : kind_(kind), k_(config.k) {
  require_agents(num_agents);
  if (kind != Algorithm::kDdqn && kind != Algorithm::kFlDdqn && kind != Algorithm::kDfrlDdqn) {
    throw std::invalid_argument("DdqnTeam: not a DQN algorithm");
  }
  DdqnConfig dc = config.ddqn;
  if (kind == Algorithm::kDfrlDdqn) dc.target_sync = 0;
  for (int i = 0; i < num_agents; ++i) agents_.emplace_back(obs_dim, num_actions, dc, derive_seed(seed, i));
  const ParamSet& q0 = agents_[0].q();
  if (kind == Algorithm::kFlDdqn) {
    for (auto& a : agents_) {
      a.set_q(q0);
      a.sync_target();
    }
    server_ = std::make_unique<fed::FederationServer>(
        fed_config(num_agents, config, fed::Mode::kFedAvgMean),
        std::map<PayloadKind, std::uint64_t>{{PayloadKind::kFullModel, q0.layout_id()}});
  } else if (kind == Algorithm::kDfrlDdqn) {
    server_ = std::make_unique<fed::FederationServer>(
        fed_config(num_agents, config, fed::Mode::kDfsacSoft),
        std::map<PayloadKind, std::uint64_t>{{PayloadKind::kTrend1, q0.layout_id()}});
    server_->set_globals(std::map<PayloadKind, ParamSet>{{PayloadKind::kTrend1, q0}});
    const ParamSet g = q0;
    for (auto& a : agents_) {
      a.set_q(g);
      a.set_target(g);
    }
  }
}

int DdqnTeam::act(int agent, const Observation& obs, ActionMode mode) {
  return agents_.at(agent).select_action(obs, mode);
}

void DdqnTeam::store(int agent, Transition t) { agents_.at(agent).remember(std::move(t)); }

void DdqnTeam::train() {
  bool trained = false;
  for (auto& a : agents_) {
    if (auto loss = a.train_step()) {
      stats_.trend_loss_sum += *loss;
      ++stats_.updates;
      trained = true;
    }
  }
  if (!trained) return;
  if (++joint_iterations_ % k_ == 0 && server_) federate();
}

void DdqnTeam::federate() {
  if (!server_) return;
  const std::uint32_t round = server_->round();
  const PayloadKind kind = kind_ == Algorithm::kFlDdqn ? PayloadKind::kFullModel : PayloadKind::kTrend1;
  std::vector<fed::RoundMessage> msgs;
  for (std::size_t i = 0; i < agents_.size(); ++i) {
    msgs.push_back(fed::make_message(round, static_cast<std::uint32_t>(i), kind, agents_[i].q()));
  }
  fed::Distribution d = server_->run_round(msgs);
  const ParamSet& p = d.params.at(kind);
  for (auto& a : agents_) {
    if (kind_ == Algorithm::kFlDdqn) {
      a.set_q(p);
    } else {
      a.set_target(p);
    }
  }
  ++rounds_;
}

}  // namespace sagin::agent
