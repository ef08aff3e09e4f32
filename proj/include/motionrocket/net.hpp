#pragma once

// Thin POSIX socket helpers: RAII descriptors, address parsing, TCP/UDP setup.

#include <arpa/inet.h>
#include <netdb.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <cerrno>
#include <cstdint>
#include <cstring>
#include <stdexcept>
#include <string>
#include <span>
#include <string_view>
#include <system_error>
#include <utility>

namespace motionrocket::net {

class Fd {
 public:
  Fd() = default;
  explicit Fd(int fd) : fd_(fd) {}
  Fd(Fd&& o) noexcept : fd_(std::exchange(o.fd_, -1)) {}
  Fd& operator=(Fd&& o) noexcept {
    if (this != &o) {
      reset();
      fd_ = std::exchange(o.fd_, -1);
    }
    return *this;
  }
  Fd(const Fd&) = delete;
  Fd& operator=(const Fd&) = delete;
  ~Fd() { reset(); }

  int get() const { return fd_; }
  bool valid() const { return fd_ >= 0; }
  void reset() {
    if (fd_ >= 0) ::close(fd_);
    fd_ = -1;
  }

 private:
  int fd_ = -1;
};

struct Endpoint {
  std::string host;
  int port = 0;
};

/// "host:port" -> Endpoint.
inline Endpoint parse_endpoint(std::string_view s) {
  const auto colon = s.rfind(':');
  if (colon == std::string_view::npos || colon + 1 >= s.size())
    throw std::invalid_argument("expected host:port, got \"" + std::string(s) + "\"");
  Endpoint e{std::string(s.substr(0, colon)), 0};
  try {
    e.port = std::stoi(std::string(s.substr(colon + 1)));
  } catch (const std::exception&) {
    throw std::invalid_argument("bad port in \"" + std::string(s) + "\"");
  }
  if (e.port < 0 || e.port > 65535) throw std::invalid_argument("port out of range in \"" + std::string(s) + "\"");
  return e;
}

[[noreturn]] inline void throw_errno(const std::string& what) {
  throw std::system_error(errno, std::generic_category(), what);
}

inline sockaddr_in resolve_ipv4(const Endpoint& e) {
  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_port = htons(static_cast<std::uint16_t>(e.port));
  const std::string host = e.host.empty() ? "0.0.0.0" : e.host;
  if (::inet_pton(AF_INET, host.c_str(), &addr.sin_addr) == 1) return addr;
  addrinfo hints{};
  hints.ai_family = AF_INET;
  addrinfo* res = nullptr;
  if (::getaddrinfo(host.c_str(), nullptr, &hints, &res) != 0 || !res)
    throw std::runtime_error("cannot resolve host \"" + host + "\"");
  addr.sin_addr = reinterpret_cast<sockaddr_in*>(res->ai_addr)->sin_addr;
  ::freeaddrinfo(res);
  return addr;
}

inline Fd listen_tcp(const Endpoint& e, int backlog = 4) {
  Fd fd(::socket(AF_INET, SOCK_STREAM | SOCK_CLOEXEC, 0));
  if (!fd.valid()) throw_errno("socket");
  int one = 1;
  ::setsockopt(fd.get(), SOL_SOCKET, SO_REUSEADDR, &one, sizeof one);
  const auto addr = resolve_ipv4(e);
  if (::bind(fd.get(), reinterpret_cast<const sockaddr*>(&addr), sizeof addr) != 0)
    throw_errno("bind " + e.host + ":" + std::to_string(e.port));
  if (::listen(fd.get(), backlog) != 0) throw_errno("listen");
  return fd;
}

inline int local_port(const Fd& fd) {
  sockaddr_in addr{};
  socklen_t len = sizeof addr;
  if (::getsockname(fd.get(), reinterpret_cast<sockaddr*>(&addr), &len) != 0) throw_errno("getsockname");
  return ntohs(addr.sin_port);
}

inline Fd connect_tcp(const Endpoint& e) {
  Fd fd(::socket(AF_INET, SOCK_STREAM | SOCK_CLOEXEC, 0));
  if (!fd.valid()) throw_errno("socket");
  const auto addr = resolve_ipv4(e);
  if (::connect(fd.get(), reinterpret_cast<const sockaddr*>(&addr), sizeof addr) != 0)
    throw_errno("connect " + e.host + ":" + std::to_string(e.port));
  return fd;
}

inline void set_nodelay(const Fd& fd) {
  int one = 1;
  ::setsockopt(fd.get(), IPPROTO_TCP, TCP_NODELAY, &one, sizeof one);
}

/// Writes everything or throws. MSG_NOSIGNAL keeps a closed peer from raising SIGPIPE.
inline void send_all(const Fd& fd, std::string_view data) {
  while (!data.empty()) {
    const auto n = ::send(fd.get(), data.data(), data.size(), MSG_NOSIGNAL);
    if (n < 0) {
      if (errno == EINTR) continue;
      throw_errno("send");
    }
    data.remove_prefix(static_cast<std::size_t>(n));
  }
}

/// Waits up to timeout_ms for the descriptor to become readable.
inline bool wait_readable(const Fd& fd, int timeout_ms) {
  pollfd p{fd.get(), POLLIN, 0};
  const int r = ::poll(&p, 1, timeout_ms);
  return r > 0;
}

class UdpSender {
 public:
  explicit UdpSender(const Endpoint& target) : fd_(::socket(AF_INET, SOCK_DGRAM | SOCK_CLOEXEC, 0)), addr_(resolve_ipv4(target)) {
    if (!fd_.valid()) throw_errno("socket");
  }

  // One datagram per call; the kernel delivers it whole or not at all.
  void send(std::span<const std::uint8_t> bytes) const {
    ::sendto(fd_.get(), bytes.data(), bytes.size(), 0, reinterpret_cast<const sockaddr*>(&addr_), sizeof addr_);
  }

 private:
  Fd fd_;
  sockaddr_in addr_;
};

inline Fd bind_udp(const Endpoint& e) {
  Fd fd(::socket(AF_INET, SOCK_DGRAM | SOCK_CLOEXEC, 0));
  if (!fd.valid()) throw_errno("socket");
  const auto addr = resolve_ipv4(e);
  if (::bind(fd.get(), reinterpret_cast<const sockaddr*>(&addr), sizeof addr) != 0) throw_errno("bind udp");
  return fd;
}

}  // namespace motionrocket::net
