#include <arpa/inet.h>
#include <netdb.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <sys/socket.h>
#include <unistd.h>

#include <cerrno>
#include <cstring>

#include "dmapf/transport.hpp"

namespace dmapf {

namespace {

void write_all(int fd, const std::string& data) {
  std::size_t done = 0;
  while (done < data.size()) {
    ssize_t n = ::send(fd, data.data() + done, data.size() - done, MSG_NOSIGNAL);
    if (n < 0) {
      if (errno == EINTR) continue;
      throw ProtocolError(std::string("send failed: ") + std::strerror(errno));
    }
    done += static_cast<std::size_t>(n);
  }
}

bool read_all(int fd, char* buf, std::size_t len) {
  std::size_t done = 0;
  while (done < len) {
    ssize_t n = ::recv(fd, buf + done, len - done, 0);
    if (n == 0) return false;
    if (n < 0) {
      if (errno == EINTR) continue;
      return false;
    }
    done += static_cast<std::size_t>(n);
  }
  return true;
}

sockaddr_in resolve(const Endpoint& ep) {
  addrinfo hints{};
  hints.ai_family = AF_INET;
  hints.ai_socktype = SOCK_STREAM;
  addrinfo* res = nullptr;
  if (::getaddrinfo(ep.host.c_str(), nullptr, &hints, &res) != 0 || !res) {
    throw ProtocolError("cannot resolve " + ep.host);
  }
  sockaddr_in addr = *reinterpret_cast<sockaddr_in*>(res->ai_addr);
  ::freeaddrinfo(res);
  addr.sin_port = htons(static_cast<std::uint16_t>(ep.port));
  return addr;
}

}  // namespace

TcpTransport::TcpTransport(std::vector<Endpoint> endpoints, int rank, int solver_count, bool keep_trace)
    : endpoints_(std::move(endpoints)), rank_(rank), solver_count_(solver_count), keep_trace_(keep_trace) {
  auto [first, last] = hosted_range(solver_count_, static_cast<int>(endpoints_.size()), rank_);
  for (SolverId s = first; s <= last; ++s) boxes_[s] = std::make_unique<Mailbox>();

  listen_fd_ = ::socket(AF_INET, SOCK_STREAM, 0);
  if (listen_fd_ < 0) throw ProtocolError("socket() failed");
  int yes = 1;
  ::setsockopt(listen_fd_, SOL_SOCKET, SO_REUSEADDR, &yes, sizeof yes);
  sockaddr_in addr = resolve(endpoints_.at(static_cast<std::size_t>(rank_)));
  if (::bind(listen_fd_, reinterpret_cast<sockaddr*>(&addr), sizeof addr) != 0) {
    ::close(listen_fd_);
    throw ProtocolError("cannot bind port " + std::to_string(endpoints_[static_cast<std::size_t>(rank_)].port) +
                        ": " + std::strerror(errno));
  }
  ::listen(listen_fd_, 64);
  acceptor_ = std::thread([this] { accept_loop(); });
}

TcpTransport::~TcpTransport() { close(); }

int TcpTransport::rank_of(SolverId s) const {
  const int ranks = static_cast<int>(endpoints_.size());
  for (int r = 0; r < ranks; ++r) {
    auto [first, last] = hosted_range(solver_count_, ranks, r);
    if (s >= first && s <= last) return r;
  }
  throw ProtocolError("no process hosts solver " + std::to_string(s));
}

int TcpTransport::connection_to(int rank) {
  auto it = peers_.find(rank);
  if (it != peers_.end()) return it->second;
  sockaddr_in addr = resolve(endpoints_.at(static_cast<std::size_t>(rank)));
  // Peers may still be starting up.
  for (int attempt = 0; attempt < 300; ++attempt) {
    int fd = ::socket(AF_INET, SOCK_STREAM, 0);
    if (fd < 0) throw ProtocolError("socket() failed");
    if (::connect(fd, reinterpret_cast<sockaddr*>(&addr), sizeof addr) == 0) {
      int yes = 1;
      ::setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &yes, sizeof yes);
      peers_[rank] = fd;
      return fd;
    }
    ::close(fd);
    std::this_thread::sleep_for(std::chrono::milliseconds(50));
  }
  throw ProtocolError("cannot connect to rank " + std::to_string(rank));
}

void TcpTransport::send(const Envelope& e) {
  if (keep_trace_) {
    std::lock_guard lock(trace_mutex_);
    trace_.push_back(encode_envelope(e));
  }
  int rank = rank_of(e.to);
  if (rank == rank_) {
    boxes_.at(e.to)->push(e);
    return;
  }
  std::lock_guard lock(send_mutex_);
  write_all(connection_to(rank), frame_envelope(e));
}

std::optional<Envelope> TcpTransport::receive(SolverId self, std::chrono::milliseconds timeout) {
  return boxes_.at(self)->pop(timeout);
}

std::vector<std::string> TcpTransport::trace() const {
  std::lock_guard lock(trace_mutex_);
  return trace_;
}

void TcpTransport::accept_loop() {
  for (;;) {
    int fd = ::accept(listen_fd_, nullptr, nullptr);
    if (fd < 0) {
      if (errno == EINTR) continue;
      return;
    }
    std::lock_guard lock(readers_mutex_);
    if (closed_) {
      ::close(fd);
      return;
    }
    reader_fds_.push_back(fd);
    readers_.emplace_back([this, fd] { read_loop(fd); });
  }
}

void TcpTransport::read_loop(int fd) {
  for (;;) {
    unsigned char header[4];
    if (!read_all(fd, reinterpret_cast<char*>(header), 4)) return;
    std::uint32_t n = (std::uint32_t{header[0]} << 24) | (std::uint32_t{header[1]} << 16) |
                      (std::uint32_t{header[2]} << 8) | std::uint32_t{header[3]};
    std::string payload(n, '\0');
    if (!read_all(fd, payload.data(), n)) return;
    Envelope e;
    try {
      e = decode_envelope(payload);
    } catch (const ProtocolError&) {
      return;
    }
    auto box = boxes_.find(e.to);
    if (box != boxes_.end()) box->second->push(std::move(e));
  }
}

void TcpTransport::close() {
  {
    std::lock_guard lock(readers_mutex_);
    if (closed_) return;
    closed_ = true;
  }
  ::shutdown(listen_fd_, SHUT_RDWR);
  ::close(listen_fd_);
  if (acceptor_.joinable()) acceptor_.join();
  {
    std::lock_guard lock(send_mutex_);
    for (auto& [rank, fd] : peers_) {
      ::shutdown(fd, SHUT_WR);
      ::close(fd);
    }
    peers_.clear();
  }
  for (int fd : reader_fds_) ::shutdown(fd, SHUT_RDWR);
  for (auto& t : readers_) {
    if (t.joinable()) t.join();
  }
  for (int fd : reader_fds_) ::close(fd);
}

}  // namespace dmapf
