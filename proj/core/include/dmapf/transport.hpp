// Message transport between solver workers: an in-process bus and a TCP mesh
// carrying length-prefixed JSON frames.
#pragma once

#include <chrono>
#include <condition_variable>
#include <deque>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "dmapf/model.hpp"

namespace dmapf {

struct Envelope {
  std::string kind;   // track | migrate | aggregate
  std::string phase;  // negotiate | reject | confirm for migrate, else empty
  int round = 0;
  SolverId from = 0;
  SolverId to = 0;
  std::string body;  // serialized JSON object
};

// One JSON object per envelope, the body embedded as an object.
std::string encode_envelope(const Envelope& e);
Envelope decode_envelope(const std::string& text);

// 4-byte big-endian length prefix followed by encode_envelope().
std::string frame_envelope(const Envelope& e);

class ProtocolError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class Mailbox {
 public:
  void push(Envelope e);
  std::optional<Envelope> pop(std::chrono::milliseconds timeout);

 private:
  std::mutex mutex_;
  std::condition_variable ready_;
  std::deque<Envelope> queue_;
};

class Transport {
 public:
  virtual ~Transport() = default;
  virtual int solver_count() const = 0;
  virtual void send(const Envelope& e) = 0;
  // Next message addressed to `self`; nullopt on timeout.
  virtual std::optional<Envelope> receive(SolverId self, std::chrono::milliseconds timeout) = 0;
  // Delivers a copy to every solver, the sender included.
  void broadcast(Envelope e);
};

class InProcTransport : public Transport {
 public:
  InProcTransport(int solver_count, bool keep_trace);

  int solver_count() const override { return static_cast<int>(boxes_.size()); }
  void send(const Envelope& e) override;
  std::optional<Envelope> receive(SolverId self, std::chrono::milliseconds timeout) override;
  // Every sent envelope in send order, one JSON object per line.
  std::vector<std::string> trace() const;

 private:
  std::vector<std::unique_ptr<Mailbox>> boxes_;
  bool keep_trace_;
  mutable std::mutex trace_mutex_;
  std::vector<std::string> trace_;
};

struct Endpoint {
  std::string host;
  int port = 0;
};

// "host:port,host:port,..."
std::vector<Endpoint> parse_endpoints(const std::string& text);

// Solver ids hosted by `rank` when `solver_count` solvers are spread over
// `ranks` processes in contiguous blocks; first > last when empty.
std::pair<SolverId, SolverId> hosted_range(int solver_count, int ranks, int rank);

// Full mesh over TCP. Each process listens on its own endpoint and opens one
// outgoing connection per peer on first use.
class TcpTransport : public Transport {
 public:
  TcpTransport(std::vector<Endpoint> endpoints, int rank, int solver_count, bool keep_trace);
  ~TcpTransport() override;

  int solver_count() const override { return solver_count_; }
  void send(const Envelope& e) override;
  std::optional<Envelope> receive(SolverId self, std::chrono::milliseconds timeout) override;
  std::vector<std::string> trace() const;

  // Stops accepting and closes every socket.
  void close();

 private:
  int rank_of(SolverId s) const;
  int connection_to(int rank);
  void accept_loop();
  void read_loop(int fd);

  std::vector<Endpoint> endpoints_;
  int rank_;
  int solver_count_;
  bool keep_trace_;
  int listen_fd_ = -1;
  std::map<SolverId, std::unique_ptr<Mailbox>> boxes_;
  std::mutex send_mutex_;
  std::map<int, int> peers_;  // rank -> fd
  std::mutex readers_mutex_;
  std::vector<int> reader_fds_;
  std::vector<std::thread> readers_;
  std::thread acceptor_;
  bool closed_ = false;
  mutable std::mutex trace_mutex_;
  std::vector<std::string> trace_;
};

}  // namespace dmapf
