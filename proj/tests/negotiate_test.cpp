#include <gtest/gtest.h>

#include <random>
#include <sstream>

#include "dmapf/instance_io.hpp"
#include "dmapf/negotiate.hpp"
#include "support/oracles.hpp"
#include "support/random_instances.hpp"

using namespace dmapf;

namespace {

MigrationCandidate cand(AgentId id, int tier, Side side, Coord c = {0, 0}) {
  MigrationCandidate m;
  m.agent = id;
  m.tier = tier;
  m.side = side;
  m.coord = c;
  m.node = static_cast<NodeId>(500 + id);
  return m;
}

BorderOption option(NodeId host, Coord hc, NodeId remote, Coord rc) {
  BorderOption o;
  o.host = {host, hc};
  o.remote = {remote, rc};
  return o;
}

std::vector<AgentId> ids(const Tier& t) {
  std::vector<AgentId> out;
  for (const auto& c : t) out.push_back(c.agent);
  return out;
}

Problem open4x4() { return parse_grid("agent 1 0 0\n\n....\n....\n....\n....\n"); }

}  // namespace

TEST(Tiers, HighestFirst) {
  auto tiers = build_tiers({cand(1, 1, Side::Outgoing), cand(2, 3, Side::Outgoing), cand(3, 3, Side::Outgoing)});
  ASSERT_EQ(tiers.size(), 2u);
  EXPECT_EQ(ids(tiers[0]), (std::vector<AgentId>{2, 3}));
  EXPECT_EQ(ids(tiers[1]), (std::vector<AgentId>{1}));
  EXPECT_TRUE(build_tiers({}).empty());
}

TEST(Tiers, OutgoingBeforeIncomingWithinTier) {
  auto tiers = build_tiers({cand(1, 2, Side::Incoming), cand(2, 2, Side::Outgoing)});
  ASSERT_EQ(tiers.size(), 1u);
  EXPECT_EQ(ids(tiers[0]), (std::vector<AgentId>{2, 1}));
}

TEST(Admit, SingleOutgoingIsMandatory) {
  auto a = admit(build_tiers({cand(1, 1, Side::Outgoing)}), make_state(2, 0, 0));
  ASSERT_EQ(a.admitted.size(), 1u);
  EXPECT_TRUE(a.admitted[0].mandatory);
  EXPECT_EQ(a.state.limit, 1);
}

TEST(Admit, OversizedTierIsOptional) {
  auto a = admit(build_tiers({cand(1, 2, Side::Outgoing), cand(2, 2, Side::Outgoing), cand(3, 2, Side::Outgoing)}),
                 make_state(1, 0, 0));
  ASSERT_EQ(a.admitted.size(), 3u);
  for (const auto& c : a.admitted) EXPECT_FALSE(c.mandatory);
  EXPECT_EQ(a.state.limit, 1);
  auto chosen = assign_borders(a.admitted, {option(1, {0, 0}, 2, {1, 0})}, a.state.limit);
  ASSERT_TRUE(chosen);
  EXPECT_EQ(chosen->size(), 1u);
}

TEST(Admit, NoCandidates) {
  auto a = admit({}, make_state(3, 0, 0));
  EXPECT_TRUE(a.admitted.empty());
  EXPECT_EQ(a.state.limit, 0);
}

TEST(Admit, StopsWhenBothSidesSaturated) {
  auto a = admit(build_tiers({cand(1, 3, Side::Outgoing), cand(2, 3, Side::Incoming), cand(3, 1, Side::Outgoing)}),
                 make_state(1, 0, 0));
  EXPECT_EQ(a.admitted.size(), 2u);
}

TEST(Limit, Formula) {
  NegotiationState s = make_state(3, 1, 0);
  EXPECT_EQ(s.n_ai, 2);
  EXPECT_EQ(s.n_ao, 3);
  s.n_i = 5;
  s.n_o = 1;
  EXPECT_EQ(assignment_limit(s), std::min(std::min(5, 2) + std::min(1, 3), std::max(2, 3)));
}

TEST(Assign, SingleAgentAtDistanceZero) {
  auto c = cand(1, 1, Side::Outgoing, {3, 0});
  c.mandatory = true;
  auto r = assign_borders({c}, {option(10, {3, 0}, 20, {4, 0})}, 1);
  ASSERT_TRUE(r);
  ASSERT_EQ(r->size(), 1u);
  EXPECT_EQ((*r)[0], (BorderAssignment{1, 10, 20, 0}));
}

TEST(Assign, DiagonalMatching) {
  // Distances {{0,2},{2,0}}.
  auto a = cand(1, 1, Side::Outgoing, {3, 0});
  auto b = cand(2, 1, Side::Outgoing, {3, 2});
  a.mandatory = b.mandatory = true;
  std::vector<BorderOption> borders{option(10, {3, 0}, 20, {4, 0}), option(12, {3, 2}, 22, {4, 2})};
  auto best = oracle::exhaustive_assignment({a, b}, borders, 2);
  ASSERT_TRUE(best);
  EXPECT_EQ(best->cost, 0);
  auto r = assign_borders({a, b}, borders, 2);
  ASSERT_TRUE(r);
  EXPECT_EQ(*r, (std::vector<BorderAssignment>{{1, 10, 20, 0}, {2, 12, 22, 0}}));
}

TEST(Assign, OppositeDirectionsShareNoPair) {
  auto out = cand(1, 1, Side::Outgoing, {3, 0});
  auto in = cand(2, 1, Side::Incoming, {4, 0});
  auto r = assign_borders({out, in}, {option(10, {3, 0}, 20, {4, 0})}, 1);
  ASSERT_TRUE(r);
  EXPECT_EQ(r->size(), 1u);
  EXPECT_FALSE(assign_borders({out, in}, {option(10, {3, 0}, 20, {4, 0})}, 2).has_value());
}

TEST(Assign, InfeasibleWhenBlocked) {
  auto c = cand(1, 1, Side::Outgoing, {3, 0});
  c.mandatory = true;
  auto o = option(10, {3, 0}, 20, {4, 0});
  o.usable_out = false;
  EXPECT_FALSE(assign_borders({c}, {o}, 1).has_value());
}

TEST(Assign, MatchesExhaustiveSearch) {
  std::mt19937 rng(3);
  for (int trial = 0; trial < 100; ++trial) {
    auto nc = gen::negotiation_case(rng);
    auto adm = admit(build_tiers(nc.candidates), make_state(nc.n_l, nc.n_bi, nc.n_bo));
    auto got = assign_borders(adm.admitted, nc.borders, adm.state.limit);
    auto want = oracle::exhaustive_assignment(adm.admitted, nc.borders, adm.state.limit);
    ASSERT_EQ(got.has_value(), want.has_value()) << "trial " << trial;
    if (!got) continue;
    EXPECT_EQ(static_cast<int>(got->size()), adm.state.limit);
    long cost = 0;
    std::vector<std::tuple<AgentId, NodeId, NodeId>> chosen;
    for (const auto& a : *got) {
      cost += a.distance;
      chosen.emplace_back(a.agent, a.from_border, a.to_border);
    }
    EXPECT_EQ(cost, want->cost) << "trial " << trial;
    EXPECT_EQ(chosen, want->chosen) << "trial " << trial;
  }
}

TEST(BorderOptions, BlocksApplyPerDirection) {
  auto p = open4x4();
  auto part = divide(p, 2, 2);
  AreaBlocks host;
  host.in.insert(*p.node_at({0, 2}));
  auto opts = border_options(part.links, part.area(3), part.area(1), host, nullptr);
  ASSERT_EQ(opts.size(), 2u);
  EXPECT_TRUE(opts[0].usable_out);
  EXPECT_FALSE(opts[0].usable_in);
  EXPECT_TRUE(opts[1].usable_in);
}

TEST(BlockCorners, IncomingOnCornerBlocksIt) {
  auto p = open4x4();
  auto part = divide(p, 2, 2);
  const NodeId corner = *p.node_at({1, 1});
  ASSERT_TRUE(part.area(1).is_corner(corner));
  AreaBlocks blocks;
  NegotiationState s = make_state(2, 0, 0);
  block_corners({{7, *p.node_at({2, 1}), corner, 1}}, part.area(1), blocks, nullptr, nullptr, s);
  EXPECT_EQ(s.n_bi, 1);
  EXPECT_TRUE(blocks.in.count(corner));
  EXPECT_TRUE(blocks.out.empty());
}

TEST(BlockCorners, NonCornerLeavesStateAlone) {
  auto p = parse_grid("agent 1 0 0\n\n......\n......\n......\n");
  auto part = divide(p, 3, 3);
  AreaBlocks blocks;
  NegotiationState s = make_state(3, 0, 0);
  block_corners({{7, *p.node_at({2, 1}), *p.node_at({3, 1}), 0}}, part.area(1), blocks, nullptr, nullptr, s);
  EXPECT_EQ(s.n_bo, 0);
  EXPECT_EQ(s.n_bi, 0);
  EXPECT_TRUE(blocks.out.empty());
}

TEST(BlockCorners, SecondPairCannotReuseCorner) {
  auto p = open4x4();
  auto part = divide(p, 2, 2);
  // Area 4 (bottom right) hosts both pairs; its corner (2,2) touches 2 and 3.
  const NodeId corner = *p.node_at({2, 2});
  ASSERT_TRUE(part.area(4).is_corner(corner));
  AreaBlocks blocks;
  auto first = negotiate_pair(part.links, part.area(4), part.area(2), {cand(1, 1, Side::Incoming, {2, 0})}, blocks,
                              nullptr);
  ASSERT_EQ(first.assignments.size(), 1u);
  EXPECT_EQ(first.assignments[0].to_border, corner);
  EXPECT_TRUE(blocks.in.count(corner));
  auto second = negotiate_pair(part.links, part.area(4), part.area(3), {cand(2, 1, Side::Incoming, {0, 2})}, blocks,
                               nullptr);
  ASSERT_EQ(second.assignments.size(), 1u);
  EXPECT_NE(second.assignments[0].to_border, corner);
  EXPECT_EQ(second.state.n_bi, 1);
  // Without the block the second candidate would have taken the corner.
  AreaBlocks fresh;
  auto alone = negotiate_pair(part.links, part.area(4), part.area(3), {cand(2, 1, Side::Incoming, {0, 2})}, fresh,
                              nullptr);
  EXPECT_EQ(alone.assignments[0].to_border, corner);
}

TEST(Rejections, CornerScenarioRejectsRemotelyComputed) {
  // Host area 2 with corner node 50 linked to areas 1 and 3. The host
  // computed (1,2); the owner of area 3 computed (2,3).
  std::vector<LedgerEntry> entries{
      {{1, 2}, 1, 2, {11, 40, 50, 1}, true},
      {{2, 3}, 3, 2, {33, 60, 50, 1}, false},
  };
  EXPECT_EQ(detect_rejections(entries, {2}), (std::set<AgentId>{33}));
}

TEST(Rejections, NoDuplicates) {
  std::vector<LedgerEntry> entries{
      {{1, 2}, 1, 2, {11, 40, 50, 1}, true},
      {{2, 3}, 3, 2, {33, 60, 51, 1}, false},
  };
  EXPECT_TRUE(detect_rejections(entries, {2}).empty());
}

TEST(Rejections, ThreeWayJunctionKeepsLocal) {
  std::vector<LedgerEntry> entries{
      {{2, 4}, 4, 2, {44, 61, 50, 0}, false},
      {{1, 2}, 1, 2, {11, 40, 50, 2}, true},
      {{2, 3}, 3, 2, {33, 60, 50, 1}, false},
  };
  EXPECT_EQ(detect_rejections(entries, {2}), (std::set<AgentId>{33, 44}));
}

TEST(Rejections, DuplicateSourceBorder) {
  // Two agents leaving area 2 through node 50 towards different areas.
  std::vector<LedgerEntry> entries{
      {{1, 2}, 2, 1, {21, 50, 40, 0}, true},
      {{2, 3}, 2, 3, {22, 50, 60, 0}, false},
  };
  EXPECT_EQ(detect_rejections(entries, {2}), (std::set<AgentId>{22}));
}
