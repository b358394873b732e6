#include <gtest/gtest.h>

#include <netinet/in.h>
#include <sys/socket.h>
#include <unistd.h>

#include <thread>

#include "dmapf/transport.hpp"

using namespace dmapf;
using namespace std::chrono_literals;

namespace {

int free_port() {
  int fd = ::socket(AF_INET, SOCK_STREAM, 0);
  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_addr.s_addr = htonl(INADDR_LOOPBACK);
  socklen_t len = sizeof addr;
  ::bind(fd, reinterpret_cast<sockaddr*>(&addr), sizeof addr);
  ::getsockname(fd, reinterpret_cast<sockaddr*>(&addr), &len);
  ::close(fd);
  return ntohs(addr.sin_port);
}

}  // namespace

TEST(Envelope, RoundTrip) {
  Envelope e{"migrate", "reject", 3, 1, 2, R"({"type":"request","rejected":[4]})"};
  Envelope d = decode_envelope(encode_envelope(e));
  EXPECT_EQ(d.kind, e.kind);
  EXPECT_EQ(d.phase, e.phase);
  EXPECT_EQ(d.round, 3);
  EXPECT_EQ(d.from, 1);
  EXPECT_EQ(d.to, 2);
  EXPECT_EQ(decode_envelope(encode_envelope(d)).body, d.body);
}

TEST(Envelope, FrameHasBigEndianLength) {
  Envelope e{"track", "", 0, 1, 0, "{}"};
  std::string frame = frame_envelope(e);
  ASSERT_GE(frame.size(), 4u);
  std::size_t len = 0;
  for (int i = 0; i < 4; ++i) len = (len << 8) | static_cast<unsigned char>(frame[static_cast<std::size_t>(i)]);
  EXPECT_EQ(len, frame.size() - 4);
  EXPECT_EQ(frame.substr(4), encode_envelope(e));
}

TEST(Envelope, GarbageIsRejected) { EXPECT_ANY_THROW(decode_envelope("{not json")); }

TEST(InProc, DeliversInOrderAndTimesOut) {
  InProcTransport t(2, true);
  t.send({"migrate", "negotiate", 0, 1, 2, "{\"n\":1}"});
  t.send({"migrate", "negotiate", 0, 1, 2, "{\"n\":2}"});
  EXPECT_EQ(t.receive(2, 10ms)->body, "{\"n\":1}");
  EXPECT_EQ(t.receive(2, 10ms)->body, "{\"n\":2}");
  EXPECT_FALSE(t.receive(1, 10ms).has_value());
  EXPECT_EQ(t.trace().size(), 2u);
}

TEST(InProc, BroadcastReachesEveryone) {
  InProcTransport t(3, false);
  t.broadcast({"track", "", 0, 2, 0, "{}"});
  for (SolverId s = 1; s <= 3; ++s) {
    auto e = t.receive(s, 10ms);
    ASSERT_TRUE(e);
    EXPECT_EQ(e->to, s);
  }
  EXPECT_TRUE(t.trace().empty());
}

TEST(Endpoints, Parse) {
  auto eps = parse_endpoints("127.0.0.1:4000,localhost:4001");
  ASSERT_EQ(eps.size(), 2u);
  EXPECT_EQ(eps[1].host, "localhost");
  EXPECT_EQ(eps[1].port, 4001);
  EXPECT_ANY_THROW(parse_endpoints("nohost"));
  EXPECT_ANY_THROW(parse_endpoints("h:notaport"));
}

TEST(HostedRange, ContiguousCover) {
  for (int solvers : {1, 2, 5, 9}) {
    for (int ranks : {1, 2, 3, 4}) {
      SolverId next = 1;
      for (int r = 0; r < ranks; ++r) {
        auto [first, last] = hosted_range(solvers, ranks, r);
        if (first > last) continue;
        EXPECT_EQ(first, next);
        next = last + 1;
      }
      EXPECT_EQ(next, solvers + 1);
    }
  }
}

TEST(Tcp, TwoRanksExchangeFrames) {
  std::vector<Endpoint> eps{{"127.0.0.1", free_port()}, {"127.0.0.1", free_port()}};
  TcpTransport a(eps, 0, 2, true), b(eps, 1, 2, false);
  a.send({"migrate", "negotiate", 1, 1, 2, R"({"type":"request"})"});
  auto got = b.receive(2, 5s);
  ASSERT_TRUE(got);
  EXPECT_EQ(got->from, 1);
  EXPECT_EQ(got->phase, "negotiate");
  b.broadcast({"track", "", 0, 2, 0, "{}"});
  EXPECT_TRUE(a.receive(1, 5s).has_value());
  EXPECT_TRUE(b.receive(2, 5s).has_value());
  a.close();
  b.close();
}
