#include "dmapf/transport.hpp"

#include <cstdint>

#include "json.hpp"

namespace dmapf {

using nlohmann::json;

std::string encode_envelope(const Envelope& e) {
  json j{{"kind", e.kind}, {"round", e.round}, {"from", e.from}, {"to", e.to}};
  if (!e.phase.empty()) j["phase"] = e.phase;
  j["body"] = e.body.empty() ? json::object() : json::parse(e.body);
  return j.dump();
}

Envelope decode_envelope(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& ex) {
    throw ProtocolError(std::string("malformed frame: ") + ex.what());
  }
  if (!j.is_object() || !j.contains("kind") || !j.contains("round") || !j.contains("from") || !j.contains("to")) {
    throw ProtocolError("frame lacks kind/round/from/to");
  }
  Envelope e;
  e.kind = j.at("kind").get<std::string>();
  if (j.contains("phase")) e.phase = j.at("phase").get<std::string>();
  e.round = j.at("round").get<int>();
  e.from = j.at("from").get<int>();
  e.to = j.at("to").get<int>();
  e.body = j.contains("body") ? j.at("body").dump() : "{}";
  return e;
}

std::string frame_envelope(const Envelope& e) {
  std::string payload = encode_envelope(e);
  auto n = static_cast<std::uint32_t>(payload.size());
  std::string out;
  out.push_back(static_cast<char>((n >> 24) & 0xff));
  out.push_back(static_cast<char>((n >> 16) & 0xff));
  out.push_back(static_cast<char>((n >> 8) & 0xff));
  out.push_back(static_cast<char>(n & 0xff));
  return out + payload;
}

void Mailbox::push(Envelope e) {
  {
    std::lock_guard lock(mutex_);
    queue_.push_back(std::move(e));
  }
  ready_.notify_one();
}

std::optional<Envelope> Mailbox::pop(std::chrono::milliseconds timeout) {
  std::unique_lock lock(mutex_);
  if (!ready_.wait_for(lock, timeout, [&] { return !queue_.empty(); })) return std::nullopt;
  Envelope e = std::move(queue_.front());
  queue_.pop_front();
  return e;
}

void Transport::broadcast(Envelope e) {
  for (SolverId s = 1; s <= solver_count(); ++s) {
    e.to = s;
    send(e);
  }
}

InProcTransport::InProcTransport(int solver_count, bool keep_trace) : keep_trace_(keep_trace) {
  for (int i = 0; i < solver_count; ++i) boxes_.push_back(std::make_unique<Mailbox>());
}

void InProcTransport::send(const Envelope& e) {
  if (e.to < 1 || e.to > solver_count()) throw ProtocolError("no solver " + std::to_string(e.to));
  // The trace entry and the delivery happen under one lock so trace order
  // is consistent with delivery order.
  std::lock_guard lock(trace_mutex_);
  if (keep_trace_) trace_.push_back(encode_envelope(e));
  boxes_[static_cast<std::size_t>(e.to - 1)]->push(e);
}

std::optional<Envelope> InProcTransport::receive(SolverId self, std::chrono::milliseconds timeout) {
  return boxes_.at(static_cast<std::size_t>(self - 1))->pop(timeout);
}

std::vector<std::string> InProcTransport::trace() const {
  std::lock_guard lock(trace_mutex_);
  return trace_;
}

std::vector<Endpoint> parse_endpoints(const std::string& text) {
  std::vector<Endpoint> out;
  std::size_t start = 0;
  while (start <= text.size()) {
    std::size_t comma = text.find(',', start);
    std::string item = text.substr(start, comma == std::string::npos ? std::string::npos : comma - start);
    if (!item.empty()) {
      auto colon = item.rfind(':');
      if (colon == std::string::npos) throw std::invalid_argument("endpoint without port: " + item);
      Endpoint ep{item.substr(0, colon), 0};
      try {
        ep.port = std::stoi(item.substr(colon + 1));
      } catch (const std::exception&) {
        throw std::invalid_argument("bad port in endpoint: " + item);
      }
      if (ep.port <= 0 || ep.port > 65535) throw std::invalid_argument("port out of range: " + item);
      out.push_back(ep);
    }
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return out;
}

std::pair<SolverId, SolverId> hosted_range(int solver_count, int ranks, int rank) {
  if (ranks < 1 || rank < 0 || rank >= ranks) throw std::invalid_argument("rank out of range");
  int first = rank * solver_count / ranks + 1;
  int last = (rank + 1) * solver_count / ranks;
  return {first, last};
}

}  // namespace dmapf
