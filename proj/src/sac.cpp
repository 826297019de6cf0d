#include "sagin/sac.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <stdexcept>

#include "sagin/federation.hpp"
#include "sagin/rng.hpp"
#include "sagin/serialize.hpp"

namespace sagin::agent {
namespace {

constexpr char kCheckpointMagic[4] = {'S', 'G', 'C', 'K'};
constexpr std::uint32_t kCheckpointVersion = 1;

MatrixXf elementwise_min(const MatrixXf& a, const MatrixXf& b) { return a.cwiseMin(b); }

double mean(const VectorXf& v) { return v.size() == 0 ? 0.0 : static_cast<double>(v.sum()) / v.size(); }

}  // namespace

void SacConfig::validate() const {
  if (hidden.empty()) throw std::invalid_argument("agent.hidden must have at least one layer");
  for (int h : hidden) {
    if (h <= 0) throw std::invalid_argument("agent.hidden widths must be > 0");
  }
  if (!(gamma >= 0 && gamma <= 1)) throw std::invalid_argument("agent.gamma must be in [0, 1]");
  if (!(lr > 0) || !(alpha_lr > 0)) throw std::invalid_argument("agent learning rates must be > 0");
  if (!(initial_alpha > 0)) throw std::invalid_argument("agent.initial_alpha must be > 0");
  if (batch_size == 0) throw std::invalid_argument("agent.batch_size must be > 0");
  if (replay_capacity < batch_size) throw std::invalid_argument("agent.replay_capacity must be >= batch_size");
  if (!(target_tau > 0 && target_tau <= 1)) throw std::invalid_argument("agent.target_tau must be in (0, 1]");
  if (target_interval < 1) throw std::invalid_argument("agent.target_interval must be >= 1");
}

VectorXf column_entropy(const MatrixXf& probs) {
  const MatrixXf logp = nn::clamped_log(probs);
  return -(probs.array() * logp.array()).colwise().sum().transpose();
}

SacAgent::SacAgent(int obs_dim, int num_actions, SacConfig config, std::uint64_t seed)
    : config_(std::move(config)),
      log_alpha_(0.0),
      replay_(config_.replay_capacity, derive_seed(seed, 1)),
      rng_(stream_rng(seed, 2)) {
  config_.validate();
  if (obs_dim <= 0 || num_actions <= 1) throw std::invalid_argument("agent needs obs_dim > 0 and >= 2 actions");
  policy_spec_ = {obs_dim, config_.hidden, num_actions, nn::Head::kLogits};
  trend_spec_ = {obs_dim, config_.hidden, num_actions, nn::Head::kValues};
  auto init = stream_rng(seed, 3);
  policy_ = nn::init_params(policy_spec_, init);
  trend1_ = nn::init_params(trend_spec_, init);
  trend2_ = nn::init_params(trend_spec_, init);
  global1_ = trend1_;
  global2_ = trend2_;
  policy_opt_ = nn::AdamState::for_params(policy_);
  trend1_opt_ = nn::AdamState::for_params(trend1_);
  trend2_opt_ = nn::AdamState::for_params(trend2_);
  log_alpha_ = std::log(config_.initial_alpha);
}

double SacAgent::alpha() const { return std::exp(log_alpha_); }

MatrixXf SacAgent::policy_probs(const MatrixXf& obs) const {
  return nn::softmax_columns(nn::forward_batch(policy_spec_, policy_, obs));
}

VectorXf SacAgent::policy_probs(const Observation& obs) const {
  MatrixXf in = obs;
  return policy_probs(in).col(0);
}

int SacAgent::select_action(const Observation& obs, ActionMode mode) {
  const VectorXf p = policy_probs(obs);
  if (mode == ActionMode::kGreedy) {
    int best = 0;
    for (int i = 1; i < p.size(); ++i) {
      if (p[i] > p[best]) best = i;
    }
    return best;
  }
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const double u = unit(rng_);
  double acc = 0.0;
  for (int i = 0; i < p.size(); ++i) {
    acc += p[i];
    if (u < acc) return i;
  }
  return static_cast<int>(p.size()) - 1;
}

VectorXf SacAgent::soft_values(const MatrixXf& obs) const {
  const MatrixXf probs = policy_probs(obs);
  const MatrixXf logp = nn::clamped_log(probs);
  const MatrixXf qmin = elementwise_min(nn::forward_batch(trend_spec_, global1_, obs),
                                        nn::forward_batch(trend_spec_, global2_, obs));
  const float a = static_cast<float>(alpha());
  return (probs.array() * (qmin.array() - a * logp.array())).colwise().sum().transpose();
}

double SacAgent::soft_value(const Observation& obs) const {
  MatrixXf in = obs;
  return soft_values(in)[0];
}

void SacAgent::check_batch(const Batch& b) const {
  if (b.size() == 0) throw std::invalid_argument("empty batch");
  if (b.obs.rows() != policy_spec_.input || b.next_obs.rows() != policy_spec_.input) {
    throw nn::DimensionError("batch observation size does not match the agent");
  }
  for (int a : b.actions) {
    if (a < 0 || a >= policy_spec_.output) throw std::out_of_range("batch action out of range");
  }
}

VectorXf SacAgent::targets(const Batch& b) const {
  const VectorXf v = soft_values(b.next_obs);
  const float g = static_cast<float>(config_.gamma);
  return (b.rewards.array() + g * (1.0f - b.terminal.array()) * v.array()).matrix();
}

double SacAgent::trend_loss(const Batch& b) const {
  check_batch(b);
  const VectorXf y = targets(b);
  double total = 0.0;
  for (const ParamSet* p : {&trend1_, &trend2_}) {
    const MatrixXf q = nn::forward_batch(trend_spec_, *p, b.obs);
    double sum = 0.0;
    for (int i = 0; i < b.size(); ++i) {
      const double d = q(b.actions[i], i) - y[i];
      sum += 0.5 * d * d;
    }
    total += sum / b.size();
  }
  return total / 2.0;
}

double SacAgent::trend_update(const Batch& b) {
  check_batch(b);
  if (static_cast<std::size_t>(b.size()) < config_.batch_size) {
    throw std::invalid_argument("trend_update: batch smaller than configured size");
  }
  const VectorXf y = targets(b);
  const float inv_n = 1.0f / static_cast<float>(b.size());
  double total = 0.0;
  ParamSet* nets[2] = {&trend1_, &trend2_};
  nn::AdamState* opts[2] = {&trend1_opt_, &trend2_opt_};
  for (int k = 0; k < 2; ++k) {
    const MatrixXf q = nn::forward_batch(trend_spec_, *nets[k], b.obs);
    MatrixXf up = MatrixXf::Zero(q.rows(), q.cols());
    double sum = 0.0;
    for (int i = 0; i < b.size(); ++i) {
      const float d = q(b.actions[i], i) - y[i];
      sum += 0.5 * static_cast<double>(d) * d;
      up(b.actions[i], i) = d * inv_n;
    }
    total += sum / b.size();
    const ParamSet g = nn::grad_batch(trend_spec_, *nets[k], b.obs, up);
    *nets[k] = nn::adam_step(std::move(*nets[k]), g, config_.lr, *opts[k]);
  }
  return total / 2.0;
}

double SacAgent::policy_loss(const Batch& b) const {
  check_batch(b);
  const MatrixXf probs = policy_probs(b.obs);
  const MatrixXf logp = nn::clamped_log(probs);
  const MatrixXf qmin = elementwise_min(nn::forward_batch(trend_spec_, trend1_, b.obs),
                                        nn::forward_batch(trend_spec_, trend2_, b.obs));
  const float a = static_cast<float>(alpha());
  const VectorXf per = (probs.array() * (a * logp.array() - qmin.array())).colwise().sum().transpose();
  return mean(per);
}

double SacAgent::policy_update(const Batch& b) {
  check_batch(b);
  if (static_cast<std::size_t>(b.size()) < config_.batch_size) {
    throw std::invalid_argument("policy_update: batch smaller than configured size");
  }
  const MatrixXf probs = policy_probs(b.obs);
  const MatrixXf logp = nn::clamped_log(probs);
  const MatrixXf qmin = elementwise_min(nn::forward_batch(trend_spec_, trend1_, b.obs),
                                        nn::forward_batch(trend_spec_, trend2_, b.obs));
  const float a = static_cast<float>(alpha());
  const MatrixXf g = (a * logp.array() - qmin.array()).matrix();
  const VectorXf per = (probs.array() * g.array()).colwise().sum().transpose();
  // dJ_s/dz_j = pi_j (g_j - J_s)
  MatrixXf up = (probs.array() * (g.rowwise() - per.transpose()).array()).matrix();
  up /= static_cast<float>(b.size());
  const ParamSet grad = nn::grad_batch(policy_spec_, policy_, b.obs, up);
  policy_ = nn::adam_step(std::move(policy_), grad, config_.lr, policy_opt_);
  return mean(per);
}

double SacAgent::alpha_loss(const Batch& b) const {
  check_batch(b);
  const VectorXf h = column_entropy(policy_probs(b.obs));
  return alpha() * (mean(h) - config_.target_entropy);
}

double SacAgent::alpha_update(const Batch& b) {
  check_batch(b);
  const VectorXf h = column_entropy(policy_probs(b.obs));
  const double a = alpha();
  const double gap = mean(h) - config_.target_entropy;
  // d J / d log(alpha) = alpha (H - H_target)
  log_alpha_ = alpha_opt_.update(log_alpha_, a * gap, config_.alpha_lr);
  return a * gap;
}

bool SacAgent::ready() const {
  return replay_.size() >= std::max(config_.batch_size, config_.warmup);
}

TrainDiagnostics SacAgent::train_on(const Batch& b) {
  TrainDiagnostics d;
  d.trend_loss = trend_update(b);
  d.policy_loss = policy_update(b);
  d.entropy = mean(column_entropy(policy_probs(b.obs)));
  d.alpha_loss = alpha_update(b);
  d.alpha = alpha();
  ++train_steps_;
  if (config_.target_mode == TargetMode::kLocalSoft && train_steps_ % config_.target_interval == 0) {
    global1_ = fed::aggregate_soft(global1_, trend1_, config_.target_tau);
    global2_ = fed::aggregate_soft(global2_, trend2_, config_.target_tau);
  }
  return d;
}

std::optional<TrainDiagnostics> SacAgent::train_step() {
  if (!ready()) return std::nullopt;
  return train_on(replay_.sample(config_.batch_size));
}

void SacAgent::set_policy(ParamSet p) {
  nn::check_layout(policy_spec_, p);
  policy_ = std::move(p);
}

void SacAgent::set_trends(ParamSet t1, ParamSet t2) {
  nn::check_layout(trend_spec_, t1);
  nn::check_layout(trend_spec_, t2);
  trend1_ = std::move(t1);
  trend2_ = std::move(t2);
}

void SacAgent::set_global_trends(ParamSet g1, ParamSet g2) {
  nn::check_layout(trend_spec_, g1);
  nn::check_layout(trend_spec_, g2);
  global1_ = std::move(g1);
  global2_ = std::move(g2);
}

void SacAgent::save_checkpoint(const std::string& path) const {
  std::vector<std::uint8_t> out(kCheckpointMagic, kCheckpointMagic + 4);
  nn::wire::put_u32_le(out, kCheckpointVersion);
  std::uint64_t bits = 0;
  static_assert(sizeof(bits) == sizeof(log_alpha_));
  std::memcpy(&bits, &log_alpha_, sizeof bits);
  nn::wire::put_u64_le(out, bits);
  nn::wire::put_u64_le(out, static_cast<std::uint64_t>(train_steps_));
  for (const ParamSet* p : {&policy_, &trend1_, &trend2_, &global1_, &global2_}) {
    const auto blob = nn::serialize(*p);
    nn::wire::put_u64_le(out, blob.size());
    out.insert(out.end(), blob.begin(), blob.end());
  }
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot write checkpoint " + path);
  f.write(reinterpret_cast<const char*>(out.data()), static_cast<std::streamsize>(out.size()));
  if (!f) throw std::runtime_error("short write to checkpoint " + path);
}

void SacAgent::load_checkpoint(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot read checkpoint " + path);
  const std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
  nn::wire::Reader r(bytes);
  const auto magic = r.take(4);
  if (!std::equal(magic.begin(), magic.end(), kCheckpointMagic)) throw nn::FormatError("bad checkpoint magic");
  if (r.u32_le() != kCheckpointVersion) throw nn::FormatError("unsupported checkpoint version");
  const std::uint64_t bits = r.u64_le();
  double la = 0.0;
  std::memcpy(&la, &bits, sizeof la);
  const auto steps = static_cast<std::int64_t>(r.u64_le());
  std::vector<ParamSet> sets;
  for (int i = 0; i < 5; ++i) {
    const std::uint64_t n = r.u64_le();
    const std::uint64_t layout = i == 0 ? policy_.layout_id() : trend1_.layout_id();
    sets.push_back(nn::deserialize(r.take(n), layout));
  }
  if (r.remaining() != 0) throw nn::FormatError("trailing bytes in checkpoint");
  set_policy(std::move(sets[0]));
  set_trends(std::move(sets[1]), std::move(sets[2]));
  set_global_trends(std::move(sets[3]), std::move(sets[4]));
  log_alpha_ = la;
  train_steps_ = steps;
}

}  // namespace sagin::agent
