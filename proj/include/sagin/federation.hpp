// Federated center node: soft aggregation of trend networks, FedAvg of full
// models, the round protocol, and its binary framing.
#ifndef SAGIN_FEDERATION_HPP_
#define SAGIN_FEDERATION_HPP_

#include <chrono>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

#include "sagin/nn.hpp"

namespace sagin::fed {

using nn::ParamSet;

enum class PayloadKind : std::uint8_t { kTrend1 = 0, kTrend2 = 1, kFullModel = 2 };
enum class Mode { kDfsacSoft, kFedAvgMean };

const char* to_string(PayloadKind k);

class RoundError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct FederationConfig {
  double epsilon = 1e-2;
  int k = 200;  // local train steps per round
  std::vector<std::uint32_t> roster;
  Mode mode = Mode::kDfsacSoft;
  std::chrono::milliseconds timeout{10000};

  void validate() const;
};

/// global <- eps * local + (1 - eps) * global, elementwise.
ParamSet aggregate_soft(const ParamSet& global, const ParamSet& local, double eps);

/// Elementwise mean, summed in list order.
ParamSet aggregate_mean(const std::vector<ParamSet>& locals);

/// Full-model payload: the tensors of policy, trend 1 and trend 2 in that order.
ParamSet concat_model(const std::vector<const ParamSet*>& parts);
std::vector<ParamSet> split_model(const ParamSet& full, const std::vector<std::size_t>& tensor_counts);

inline constexpr std::uint32_t kServerId = 0xFFFFFFFFu;

struct RoundMessage {
  std::uint32_t round = 0;
  std::uint32_t agent = 0;
  PayloadKind kind = PayloadKind::kTrend1;
  std::vector<std::uint8_t> payload;  // serialized ParamSet

  bool operator==(const RoundMessage&) const = default;
};

RoundMessage make_message(std::uint32_t round, std::uint32_t agent, PayloadKind kind, const ParamSet& params);

/// u32 round (BE), u32 agent (BE), u8 kind, payload.
std::vector<std::uint8_t> encode(const RoundMessage& m);
RoundMessage decode(std::span<const std::uint8_t> bytes);
/// encode() behind a 4-byte big-endian length prefix.
std::vector<std::uint8_t> frame(const RoundMessage& m);

struct Distribution {
  std::uint32_t round = 0;
  std::map<PayloadKind, ParamSet> params;
  std::vector<RoundMessage> outgoing;  // agent == kServerId
};

class FederationServer {
 public:
  /// `layouts` maps each accepted payload kind to its registered layout id.
  /// dfsac_soft accepts the registered trend kinds; fedavg_mean needs full_model.
  FederationServer(FederationConfig config, std::map<PayloadKind, std::uint64_t> layouts);

  /// Initial global trends (dfsac_soft mode).
  void set_globals(ParamSet g1, ParamSet g2);
  void set_globals(std::map<PayloadKind, ParamSet> globals);
  const ParamSet& global(PayloadKind k) const;

  /// Called for every message the server receives or sends.
  using Observer = std::function<void(const RoundMessage&)>;
  void set_observer(Observer obs) { observer_ = std::move(obs); }

  /// Barrier round over one complete message set; throws RoundError on a
  /// missing, duplicate, stale or foreign message without changing state.
  Distribution run_round(const std::vector<RoundMessage>& messages);

  std::uint32_t round() const { return round_; }
  const FederationConfig& config() const { return config_; }

 private:
  std::vector<PayloadKind> expected_kinds() const;

  FederationConfig config_;
  std::map<PayloadKind, std::uint64_t> layouts_;
  std::map<PayloadKind, ParamSet> globals_;
  std::uint32_t round_ = 0;
  Observer observer_;
};

// Loopback TCP transport. Each message travels as frame(m).

class TcpStream {
 public:
  explicit TcpStream(int fd) : fd_(fd) {}
  TcpStream(TcpStream&& o) noexcept : fd_(o.fd_) { o.fd_ = -1; }
  TcpStream& operator=(TcpStream&& o) noexcept;
  TcpStream(const TcpStream&) = delete;
  TcpStream& operator=(const TcpStream&) = delete;
  ~TcpStream();

  static TcpStream connect(std::uint16_t port, std::chrono::milliseconds timeout);
  void send(const RoundMessage& m);
  RoundMessage receive(std::chrono::milliseconds timeout);

 private:
  int fd_ = -1;
};

class TcpListener {
 public:
  /// Binds 127.0.0.1; port 0 picks an ephemeral port.
  explicit TcpListener(std::uint16_t port = 0);
  TcpListener(const TcpListener&) = delete;
  TcpListener& operator=(const TcpListener&) = delete;
  ~TcpListener();

  std::uint16_t port() const { return port_; }
  TcpStream accept(std::chrono::milliseconds timeout);

 private:
  int fd_ = -1;
  std::uint16_t port_ = 0;
};

/// Server side of one networked round: accepts one connection per roster
/// agent, reads `per_agent` messages from each, runs the round and answers
/// every client with the outgoing messages.
Distribution serve_round(FederationServer& server, TcpListener& listener, std::size_t per_agent);

/// Client side: sends `messages`, then reads `expect` replies.
std::vector<RoundMessage> exchange_round(std::uint16_t port, const std::vector<RoundMessage>& messages,
                                         std::size_t expect, std::chrono::milliseconds timeout);

}  // namespace sagin::fed

#endif  // SAGIN_FEDERATION_HPP_
