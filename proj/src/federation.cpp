#include "sagin/federation.hpp"

#include <algorithm>
#include <set>
#include <string>

#include "sagin/serialize.hpp"

namespace sagin::fed {
namespace {

void require_same_layout(const ParamSet& a, const ParamSet& b, const char* what) {
  if (!a.same_layout(b)) throw nn::DimensionError(std::string(what) + ": parameter layouts differ");
}

}  // namespace

const char* to_string(PayloadKind k) {
  switch (k) {
    case PayloadKind::kTrend1: return "trend1";
    case PayloadKind::kTrend2: return "trend2";
    case PayloadKind::kFullModel: return "full_model";
  }
  return "?";
}

void FederationConfig::validate() const {
  if (!(epsilon > 0 && epsilon <= 1)) throw std::invalid_argument("federation.epsilon must be in (0, 1]");
  if (k < 1) throw std::invalid_argument("federation.k must be >= 1");
  if (roster.empty()) throw std::invalid_argument("federation roster is empty");
  std::set<std::uint32_t> seen(roster.begin(), roster.end());
  if (seen.size() != roster.size()) throw std::invalid_argument("federation roster has duplicate agents");
}

ParamSet aggregate_soft(const ParamSet& global, const ParamSet& local, double eps) {
  require_same_layout(global, local, "aggregate_soft");
  ParamSet out = global;
  const float e = static_cast<float>(eps);
  const float keep = static_cast<float>(1.0 - eps);
  for (std::size_t t = 0; t < out.tensors.size(); ++t) {
    auto& g = out.tensors[t].data;
    const auto& l = local.tensors[t].data;
    for (std::size_t i = 0; i < g.size(); ++i) g[i] = e * l[i] + keep * g[i];
  }
  return out;
}

ParamSet aggregate_mean(const std::vector<ParamSet>& locals) {
  if (locals.empty()) throw std::invalid_argument("aggregate_mean: no participants");
  ParamSet out = locals.front();
  for (std::size_t k = 1; k < locals.size(); ++k) {
    require_same_layout(out, locals[k], "aggregate_mean");
    for (std::size_t t = 0; t < out.tensors.size(); ++t) {
      auto& s = out.tensors[t].data;
      const auto& l = locals[k].tensors[t].data;
      for (std::size_t i = 0; i < s.size(); ++i) s[i] += l[i];
    }
  }
  const float n = static_cast<float>(locals.size());
  for (auto& t : out.tensors) {
    for (auto& v : t.data) v /= n;
  }
  return out;
}

ParamSet concat_model(const std::vector<const ParamSet*>& parts) {
  ParamSet out;
  for (const ParamSet* p : parts) out.tensors.insert(out.tensors.end(), p->tensors.begin(), p->tensors.end());
  return out;
}

std::vector<ParamSet> split_model(const ParamSet& full, const std::vector<std::size_t>& tensor_counts) {
  std::size_t total = 0;
  for (auto c : tensor_counts) total += c;
  if (total != full.tensors.size()) throw nn::DimensionError("split_model: tensor counts do not cover the model");
  std::vector<ParamSet> out;
  std::size_t at = 0;
  for (auto c : tensor_counts) {
    ParamSet p;
    p.tensors.assign(full.tensors.begin() + static_cast<std::ptrdiff_t>(at),
                     full.tensors.begin() + static_cast<std::ptrdiff_t>(at + c));
    out.push_back(std::move(p));
    at += c;
  }
  return out;
}

RoundMessage make_message(std::uint32_t round, std::uint32_t agent, PayloadKind kind, const ParamSet& params) {
  return {round, agent, kind, nn::serialize(params)};
}

std::vector<std::uint8_t> encode(const RoundMessage& m) {
  std::vector<std::uint8_t> out;
  out.reserve(9 + m.payload.size());
  nn::wire::put_u32_be(out, m.round);
  nn::wire::put_u32_be(out, m.agent);
  out.push_back(static_cast<std::uint8_t>(m.kind));
  out.insert(out.end(), m.payload.begin(), m.payload.end());
  return out;
}

RoundMessage decode(std::span<const std::uint8_t> bytes) {
  nn::wire::Reader r(bytes);
  RoundMessage m;
  m.round = r.u32_be();
  m.agent = r.u32_be();
  const std::uint8_t kind = r.u8();
  if (kind > static_cast<std::uint8_t>(PayloadKind::kFullModel)) {
    throw nn::FormatError("unknown payload kind " + std::to_string(kind));
  }
  m.kind = static_cast<PayloadKind>(kind);
  const auto rest = r.take(r.remaining());
  m.payload.assign(rest.begin(), rest.end());
  return m;
}

std::vector<std::uint8_t> frame(const RoundMessage& m) {
  const auto body = encode(m);
  std::vector<std::uint8_t> out;
  out.reserve(4 + body.size());
  nn::wire::put_u32_be(out, static_cast<std::uint32_t>(body.size()));
  out.insert(out.end(), body.begin(), body.end());
  return out;
}

FederationServer::FederationServer(FederationConfig config, std::map<PayloadKind, std::uint64_t> layouts)
    : config_(std::move(config)), layouts_(std::move(layouts)) {
  config_.validate();
  std::sort(config_.roster.begin(), config_.roster.end());
  if (config_.mode == Mode::kDfsacSoft) {
    if (layouts_.empty() || layouts_.count(PayloadKind::kFullModel)) {
      throw std::invalid_argument("dfsac_soft mode registers trend payloads only");
    }
  } else if (layouts_.size() != 1 || !layouts_.count(PayloadKind::kFullModel)) {
    throw std::invalid_argument("fedavg_mean mode registers exactly the full_model payload");
  }
}

std::vector<PayloadKind> FederationServer::expected_kinds() const {
  std::vector<PayloadKind> kinds;
  for (const auto& [k, layout] : layouts_) kinds.push_back(k);
  return kinds;
}

void FederationServer::set_globals(ParamSet g1, ParamSet g2) {
  std::map<PayloadKind, ParamSet> g;
  g[PayloadKind::kTrend1] = std::move(g1);
  g[PayloadKind::kTrend2] = std::move(g2);
  set_globals(std::move(g));
}

void FederationServer::set_globals(std::map<PayloadKind, ParamSet> globals) {
  if (config_.mode != Mode::kDfsacSoft) throw std::logic_error("globals are only kept in dfsac_soft mode");
  if (globals.size() != layouts_.size()) throw std::invalid_argument("set_globals: one global per registered kind");
  for (const auto& [k, p] : globals) {
    auto it = layouts_.find(k);
    if (it == layouts_.end() || p.layout_id() != it->second) {
      throw nn::DimensionError(std::string("global ") + to_string(k) + " does not match the registered layout");
    }
  }
  globals_ = std::move(globals);
}

const ParamSet& FederationServer::global(PayloadKind k) const {
  auto it = globals_.find(k);
  if (it == globals_.end()) throw std::out_of_range(std::string("no global for ") + to_string(k));
  return it->second;
}

Distribution FederationServer::run_round(const std::vector<RoundMessage>& messages) {
  const auto kinds = expected_kinds();
  if (config_.mode == Mode::kDfsacSoft && globals_.size() != layouts_.size()) {
    throw RoundError("dfsac_soft round started before globals were set");
  }
  // (agent, kind) -> message, agent-id order
  std::map<std::pair<std::uint32_t, PayloadKind>, const RoundMessage*> inbox;
  for (const auto& m : messages) {
    if (observer_) observer_(m);
    if (m.round != round_) {
      throw RoundError("message for round " + std::to_string(m.round) + " during round " + std::to_string(round_));
    }
    if (!std::binary_search(config_.roster.begin(), config_.roster.end(), m.agent)) {
      throw RoundError("agent " + std::to_string(m.agent) + " is not on the roster");
    }
    if (std::find(kinds.begin(), kinds.end(), m.kind) == kinds.end()) {
      throw RoundError(std::string("payload kind ") + to_string(m.kind) + " is not accepted in this mode");
    }
    if (!inbox.emplace(std::make_pair(m.agent, m.kind), &m).second) {
      throw RoundError("duplicate " + std::string(to_string(m.kind)) + " from agent " + std::to_string(m.agent));
    }
  }
  for (std::uint32_t a : config_.roster) {
    for (PayloadKind k : kinds) {
      if (!inbox.count({a, k})) {
        throw RoundError("missing " + std::string(to_string(k)) + " from agent " + std::to_string(a));
      }
    }
  }

  std::map<PayloadKind, ParamSet> result;
  for (PayloadKind k : kinds) {
    const std::uint64_t layout = layouts_.at(k);
    if (config_.mode == Mode::kDfsacSoft) {
      ParamSet g = globals_.at(k);
      for (std::uint32_t a : config_.roster) {
        g = aggregate_soft(g, nn::deserialize(inbox.at({a, k})->payload, layout), config_.epsilon);
      }
      result[k] = std::move(g);
    } else {
      std::vector<ParamSet> locals;
      for (std::uint32_t a : config_.roster) locals.push_back(nn::deserialize(inbox.at({a, k})->payload, layout));
      result[k] = aggregate_mean(locals);
    }
  }

  Distribution d;
  d.round = round_;
  for (auto& [k, p] : result) {
    d.outgoing.push_back(make_message(round_, kServerId, k, p));
    if (observer_) observer_(d.outgoing.back());
  }
  if (config_.mode == Mode::kDfsacSoft) globals_ = result;
  d.params = std::move(result);
  ++round_;
  return d;
}

}  // namespace sagin::fed
