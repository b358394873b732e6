#include <gtest/gtest.h>

#include <random>
#include <sstream>

#include "dmapf/instance_io.hpp"
#include "dmapf/partition.hpp"
#include "support/invariants.hpp"

using namespace dmapf;

namespace {

std::string open_map(int w, int h, const std::string& agents = "agent 1 0 0\n") {
  std::ostringstream os;
  os << agents << "\n";
  for (int y = 0; y < h; ++y) os << std::string(static_cast<std::size_t>(w), '.') << "\n";
  return os.str();
}

}  // namespace

TEST(Divide, Open24MapHasNineSingleAreaTiles) {
  auto p = parse_grid(open_map(24, 24));
  auto part = divide(p, 8, 8);
  ASSERT_EQ(part.solver_count(), 9);
  ASSERT_EQ(part.areas.size(), 9u);
  for (const auto& a : part.areas) EXPECT_EQ(a.size(), 64u);
  EXPECT_TRUE(invariants::partition(p, part).empty());
}

TEST(Divide, WallSplitsTileIntoTwoAreas) {
  std::ostringstream os;
  os << "agent 1 0 0\n\n";
  for (int y = 0; y < 8; ++y) os << "...#....\n";
  auto p = parse_grid(os.str());
  auto part = divide(p, 8, 8);
  EXPECT_EQ(part.solver_count(), 1);
  ASSERT_EQ(part.areas.size(), 2u);
  EXPECT_EQ(part.areas[0].size(), 24u);
  EXPECT_EQ(part.areas[1].size(), 32u);
  EXPECT_TRUE(part.links.pairs().empty());
}

TEST(Divide, FourByTwoHasTwoBorderPairs) {
  auto p = parse_grid(open_map(4, 2));
  auto part = divide(p, 2, 2);
  EXPECT_EQ(part.solver_count(), 2);
  ASSERT_EQ(part.links.pairs().size(), 1u);
  // Crossings of the x = 1 | x = 2 line, one per row.
  int crossings = 0;
  for (const auto& [id, c] : p.nodes()) {
    for (NodeId n : p.neighbors(id)) crossings += (c.x == 1 && p.coord(n).x == 2) ? 1 : 0;
  }
  EXPECT_EQ(part.links.n_l(1, 2), crossings);
  EXPECT_EQ(part.links.n_l(1, 2), 2);
}

TEST(Divide, RowMajorTilesAndEmptyTilesDropped) {
  // The top-right 2x2 tile is all obstacles.
  auto p = parse_grid("agent 1 0 0\n\n..##\n..##\n....\n....\n");
  auto part = divide(p, 2, 2);
  ASSERT_EQ(part.solver_count(), 3);
  EXPECT_EQ(part.subproblems[0].bounds.x_min, 0);
  EXPECT_EQ(part.subproblems[1].bounds.y_min, 2);
  EXPECT_EQ(part.subproblems[1].bounds.x_min, 0);
  EXPECT_EQ(part.subproblems[2].bounds.x_min, 2);
}

TEST(Divide, BordersAreTileBoundaryNodes) {
  auto p = parse_grid(open_map(4, 4));
  auto part = divide(p, 4, 4);
  // 16 nodes, 4 inner ones.
  EXPECT_EQ(part.subproblems[0].borders.size(), 12u);
}

TEST(Divide, RejectsBadTiles) {
  auto p = parse_grid(open_map(4, 4));
  EXPECT_THROW(divide(p, 1, 4), std::invalid_argument);
  EXPECT_THROW(divide(p, 4, 0), std::invalid_argument);
}

TEST(Corners, FourTileJunction) {
  auto p = parse_grid(open_map(4, 4));
  auto part = divide(p, 2, 2);
  ASSERT_EQ(part.areas.size(), 4u);
  // Independent count: a node is a corner when its neighbours lie in two or
  // more tiles other than its own.
  auto tile = [](Coord c) { return std::make_pair(c.x / 2, c.y / 2); };
  std::set<NodeId> expected;
  for (const auto& [id, c] : p.nodes()) {
    std::set<std::pair<int, int>> others;
    for (NodeId n : p.neighbors(id)) {
      if (tile(p.coord(n)) != tile(c)) others.insert(tile(p.coord(n)));
    }
    if (others.size() >= 2) expected.insert(id);
  }
  std::set<NodeId> found;
  for (const auto& a : part.areas) {
    for (const auto& [n, areas] : a.corners) {
      found.insert(n);
      EXPECT_EQ(areas.size(), 2u);
    }
  }
  EXPECT_EQ(found, expected);
  EXPECT_EQ(found, (std::set<NodeId>{*p.node_at({1, 1}), *p.node_at({2, 1}), *p.node_at({1, 2}), *p.node_at({2, 2})}));
}

TEST(Corners, MidEdgeAndInteriorNodesAreNot) {
  auto p = parse_grid(open_map(6, 3));
  auto part = divide(p, 3, 3);
  for (const auto& a : part.areas) EXPECT_TRUE(a.corners.empty());
}

TEST(AssignAgents, ResidentAndGoalAreas) {
  auto p = parse_grid(open_map(24, 24, "agent 1 0 0 23 23\nagent 2 1 1 2 2\nagent 3 5 5\n"));
  auto part = divide(p, 8, 8);
  auto placed = assign_agents(part, p);
  ASSERT_EQ(placed.size(), 3u);
  EXPECT_EQ(placed[0].area, 1);
  EXPECT_EQ(placed[0].goal_area, 9);
  EXPECT_EQ(placed[1].goal_area, placed[1].area);
  EXPECT_FALSE(placed[2].goal_area.has_value());
}

TEST(Invariants, RandomObstacleMaps) {
  std::mt19937 rng(11);
  for (int trial = 0; trial < 20; ++trial) {
    const int w = 4 + static_cast<int>(rng() % 13), h = 4 + static_cast<int>(rng() % 13);
    std::ostringstream os;
    os << "\n";
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) os << (rng() % 4 == 0 ? '#' : '.');
      os << "\n";
    }
    Problem p;
    try {
      p = parse_grid(os.str());
    } catch (const std::exception&) {
      continue;
    }
    if (p.nodes().empty()) continue;
    auto part = divide(p, 2 + static_cast<int>(rng() % 4), 2 + static_cast<int>(rng() % 4));
    auto bad = invariants::partition(p, part);
    EXPECT_TRUE(bad.empty()) << bad.front();
  }
}

TEST(Dump, ContainsAreasAndLinks) {
  auto p = parse_grid(open_map(4, 2));
  auto dump = partition_to_json(divide(p, 2, 2));
  EXPECT_NE(dump.find("\"areas\""), std::string::npos);
  EXPECT_NE(dump.find("\"links\""), std::string::npos);
}
