#include <arpa/inet.h>
#include <netinet/in.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <cerrno>
#include <cstring>
#include <string>
#include <thread>

#include "sagin/federation.hpp"
#include "sagin/serialize.hpp"

namespace sagin::fed {
namespace {

using Clock = std::chrono::steady_clock;

// Upper bound on a single framed message, guards against garbage length prefixes.
constexpr std::uint32_t kMaxFrame = 256u << 20;

[[noreturn]] void fail(const std::string& what) {
  throw std::runtime_error(what + ": " + std::strerror(errno));
}

int remaining_ms(Clock::time_point deadline) {
  const auto left = std::chrono::duration_cast<std::chrono::milliseconds>(deadline - Clock::now()).count();
  return left > 0 ? static_cast<int>(left) : 0;
}

void wait_ready(int fd, short events, Clock::time_point deadline) {
  pollfd p{fd, events, 0};
  for (;;) {
    const int r = ::poll(&p, 1, remaining_ms(deadline));
    if (r > 0) return;
    if (r == 0) throw RoundError("socket timed out");
    if (errno != EINTR) fail("poll");
  }
}

void read_exact(int fd, std::uint8_t* out, std::size_t n, Clock::time_point deadline) {
  while (n > 0) {
    wait_ready(fd, POLLIN, deadline);
    const ssize_t got = ::recv(fd, out, n, 0);
    if (got == 0) throw RoundError("peer closed the connection");
    if (got < 0) {
      if (errno == EINTR) continue;
      fail("recv");
    }
    out += got;
    n -= static_cast<std::size_t>(got);
  }
}

void write_all(int fd, const std::uint8_t* data, std::size_t n) {
  while (n > 0) {
    const ssize_t put = ::send(fd, data, n, MSG_NOSIGNAL);
    if (put < 0) {
      if (errno == EINTR) continue;
      fail("send");
    }
    data += put;
    n -= static_cast<std::size_t>(put);
  }
}

sockaddr_in loopback(std::uint16_t port) {
  sockaddr_in a{};
  a.sin_family = AF_INET;
  a.sin_port = htons(port);
  a.sin_addr.s_addr = htonl(INADDR_LOOPBACK);
  return a;
}

}  // namespace

TcpStream& TcpStream::operator=(TcpStream&& o) noexcept {
  if (this != &o) {
    if (fd_ >= 0) ::close(fd_);
    fd_ = o.fd_;
    o.fd_ = -1;
  }
  return *this;
}

TcpStream::~TcpStream() {
  if (fd_ >= 0) ::close(fd_);
}

TcpStream TcpStream::connect(std::uint16_t port, std::chrono::milliseconds timeout) {
  const auto deadline = Clock::now() + timeout;
  const sockaddr_in addr = loopback(port);
  for (;;) {
    const int fd = ::socket(AF_INET, SOCK_STREAM, 0);
    if (fd < 0) fail("socket");
    if (::connect(fd, reinterpret_cast<const sockaddr*>(&addr), sizeof addr) == 0) return TcpStream(fd);
    ::close(fd);
    if (errno != ECONNREFUSED || Clock::now() >= deadline) fail("connect");
    std::this_thread::sleep_for(std::chrono::milliseconds(10));
  }
}

void TcpStream::send(const RoundMessage& m) {
  const auto bytes = frame(m);
  write_all(fd_, bytes.data(), bytes.size());
}

RoundMessage TcpStream::receive(std::chrono::milliseconds timeout) {
  const auto deadline = Clock::now() + timeout;
  std::uint8_t len_be[4];
  read_exact(fd_, len_be, 4, deadline);
  const std::uint32_t len = nn::wire::Reader(len_be).u32_be();
  if (len > kMaxFrame) throw nn::FormatError("frame length " + std::to_string(len) + " exceeds limit");
  std::vector<std::uint8_t> body(len);
  read_exact(fd_, body.data(), len, deadline);
  return decode(body);
}

TcpListener::TcpListener(std::uint16_t port) {
  fd_ = ::socket(AF_INET, SOCK_STREAM, 0);
  if (fd_ < 0) fail("socket");
  const int on = 1;
  ::setsockopt(fd_, SOL_SOCKET, SO_REUSEADDR, &on, sizeof on);
  sockaddr_in addr = loopback(port);
  if (::bind(fd_, reinterpret_cast<const sockaddr*>(&addr), sizeof addr) != 0) {
    ::close(fd_);
    fail("bind");
  }
  if (::listen(fd_, 64) != 0) {
    ::close(fd_);
    fail("listen");
  }
  socklen_t len = sizeof addr;
  ::getsockname(fd_, reinterpret_cast<sockaddr*>(&addr), &len);
  port_ = ntohs(addr.sin_port);
}

TcpListener::~TcpListener() {
  if (fd_ >= 0) ::close(fd_);
}

TcpStream TcpListener::accept(std::chrono::milliseconds timeout) {
  wait_ready(fd_, POLLIN, Clock::now() + timeout);
  const int fd = ::accept(fd_, nullptr, nullptr);
  if (fd < 0) fail("accept");
  return TcpStream(fd);
}

Distribution serve_round(FederationServer& server, TcpListener& listener, std::size_t per_agent) {
  const auto timeout = server.config().timeout;
  const auto deadline = Clock::now() + timeout;
  std::vector<TcpStream> clients;
  std::vector<RoundMessage> inbox;
  for (std::size_t c = 0; c < server.config().roster.size(); ++c) {
    clients.push_back(listener.accept(std::chrono::milliseconds(remaining_ms(deadline))));
    for (std::size_t i = 0; i < per_agent; ++i) {
      inbox.push_back(clients.back().receive(std::chrono::milliseconds(remaining_ms(deadline))));
    }
  }
  Distribution d = server.run_round(inbox);
  for (auto& c : clients) {
    for (const auto& m : d.outgoing) c.send(m);
  }
  return d;
}

std::vector<RoundMessage> exchange_round(std::uint16_t port, const std::vector<RoundMessage>& messages,
                                         std::size_t expect, std::chrono::milliseconds timeout) {
  TcpStream s = TcpStream::connect(port, timeout);
  for (const auto& m : messages) s.send(m);
  std::vector<RoundMessage> replies;
  for (std::size_t i = 0; i < expect; ++i) replies.push_back(s.receive(timeout));
  return replies;
}

}  // namespace sagin::fed
