#include <gtest/gtest.h>

#include <random>

#include "dmapf/instance_io.hpp"
#include "dmapf/motion.hpp"
#include "support/oracles.hpp"
#include "support/random_instances.hpp"

using namespace dmapf;

namespace {

struct Fixture {
  Problem p;
  Partition part;
  MotionInstance inst;

  NodeId at(int x, int y) const { return *p.node_at({x, y}); }
  void agent(AgentId id, Coord start, std::optional<Coord> goal, bool migrating = false) {
    MotionAgent m;
    m.id = id;
    m.start = at(start.x, start.y);
    if (goal) m.goal = at(goal->x, goal->y);
    m.migrating = migrating;
    if (goal) m.border_distance = manhattan(start, *goal);
    inst.agents.push_back(m);
  }
};

Fixture area_of(const std::string& map, int dx, int dy, AreaId area) {
  Fixture f;
  f.p = parse_grid("\n" + map);
  f.part = divide(f.p, dx, dy);
  f.inst.graph = LocalGraph::from_area(f.part.area(area));
  return f;
}

}  // namespace

TEST(Horizon, Values) {
  EXPECT_EQ(horizon(64, 2.0), 36);
  EXPECT_EQ(horizon(64, 1.0), 18);
  EXPECT_EQ(horizon(1, 2.0), 8);
}

TEST(CrowdingGuard, Cases) {
  EXPECT_TRUE(crowding_guard(64, 10, 2, 4));
  EXPECT_FALSE(crowding_guard(9, 5, 2, 4));
  EXPECT_TRUE(crowding_guard(10, 4, 2, 4));
  EXPECT_FALSE(crowding_guard(10, 5, 2, 4));
}

TEST(LocalGraph, InNodesFirstAndMovesTargetThem) {
  auto f = area_of("....\n....\n", 2, 2, 1);
  EXPECT_EQ(f.inst.graph.in_count, 4);
  EXPECT_EQ(f.inst.graph.size(), 6);
  for (int v = 0; v < f.inst.graph.size(); ++v) {
    for (int w : f.inst.graph.succ[static_cast<std::size_t>(v)]) EXPECT_TRUE(f.inst.graph.is_in(w));
  }
}

TEST(Plan, AgentAtGoalNeedsNoSteps) {
  auto f = area_of("...\n...\n...\n", 3, 3, 1);
  f.agent(1, {1, 1}, Coord{1, 1});
  auto plan = plan_movements(f.inst, horizon(9, 2));
  ASSERT_TRUE(plan);
  EXPECT_EQ(plan->length, 0);
  EXPECT_EQ(plan->steps.at(1), (std::vector<NodeId>{f.at(1, 1)}));
}

TEST(Plan, CorridorSwapIsImpossible) {
  auto f = area_of("..\n", 2, 2, 1);
  f.agent(1, {0, 0}, Coord{1, 0});
  f.agent(2, {1, 0}, Coord{0, 0});
  EXPECT_FALSE(plan_movements(f.inst, horizon(2, 2)).has_value());
  EXPECT_FALSE(oracle::joint_bfs_makespan(f.inst, horizon(2, 2)).has_value());
}

TEST(Plan, TwoIndependentAgentsOnOpenArea) {
  auto f = area_of("...\n...\n...\n", 3, 3, 1);
  f.agent(1, {0, 0}, Coord{2, 0});
  f.agent(2, {0, 2}, Coord{2, 2});
  auto plan = plan_movements(f.inst, horizon(9, 2));
  ASSERT_TRUE(plan);
  EXPECT_EQ(plan->length, 2);
  EXPECT_EQ(oracle::joint_bfs_makespan(f.inst, horizon(9, 2)), 2);
  EXPECT_TRUE(check_plan(f.inst, *plan).empty());
}

TEST(Plan, EnteringAgentMovesInAtFirstStep) {
  // Area 2 is the right tile; the agent waits on (1,0) in area 1.
  auto f = area_of("....\n", 2, 2, 2);
  f.agent(1, {1, 0}, std::nullopt);
  auto plan = plan_movements(f.inst, horizon(2, 2));
  ASSERT_TRUE(plan);
  EXPECT_EQ(plan->length, 1);
  EXPECT_EQ(plan->steps.at(1), (std::vector<NodeId>{f.at(1, 0), f.at(2, 0)}));
}

TEST(Plan, ReservedNodeMustBeFreeAtEnd) {
  auto f = area_of("...\n", 3, 2, 1);
  f.agent(1, {0, 0}, std::nullopt);
  f.inst.reserved = {f.at(0, 0)};
  f.inst.crowding = true;
  auto plan = plan_movements(f.inst, horizon(3, 2));
  ASSERT_TRUE(plan);
  EXPECT_EQ(plan->length, 1);
  EXPECT_NE(plan->steps.at(1).back(), f.at(0, 0));
  // The guard off means the reservation is ignored.
  f.inst.crowding = false;
  EXPECT_EQ(plan_movements(f.inst, horizon(3, 2))->length, 0);
}

TEST(Plan, MovesAreNotWasted) {
  auto f = area_of("....\n....\n", 4, 2, 1);
  f.agent(1, {0, 0}, Coord{3, 0});
  f.agent(2, {0, 1}, std::nullopt);
  auto plan = plan_movements(f.inst, horizon(8, 2));
  ASSERT_TRUE(plan);
  EXPECT_EQ(plan->length, 3);
  const auto& idle = plan->steps.at(2);
  EXPECT_TRUE(std::all_of(idle.begin(), idle.end(), [&](NodeId n) { return n == f.at(0, 1); }));
}

TEST(Plan, MatchesJointBfsOnRandomInstances) {
  std::mt19937 rng(17);
  for (int trial = 0; trial < 60; ++trial) {
    auto inst = gen::motion_instance(rng);
    const int h = horizon(inst.graph.in_count, 2.0);
    auto plan = plan_movements(inst, h);
    auto best = oracle::joint_bfs_makespan(inst, h);
    ASSERT_EQ(plan.has_value(), best.has_value()) << "trial " << trial;
    if (!plan) continue;
    EXPECT_EQ(plan->length, *best) << "trial " << trial;
    auto errors = check_plan(inst, *plan);
    EXPECT_TRUE(errors.empty()) << errors.front();
  }
}

TEST(Plan, InterruptIsReported) {
  auto f = area_of("...\n...\n...\n", 3, 3, 1);
  f.agent(1, {0, 0}, Coord{2, 2});
  EXPECT_THROW(plan_movements(f.inst, 12, [] { return true; }), PlanningInterrupted);
}

TEST(Relax, StripsTheBlockedMigrant) {
  // Agent 9 rests on its goal at (6,0) and walls off (7,0).
  auto f = area_of("........\n", 8, 2, 1);
  f.agent(9, {6, 0}, Coord{6, 0});
  f.agent(2, {5, 0}, Coord{7, 0}, true);
  auto r = relax_and_retry(f.inst, horizon(8, 2));
  ASSERT_TRUE(r);
  EXPECT_EQ(r->stripped, (std::vector<AgentId>{2}));
}

TEST(Relax, LongestDistanceFirst) {
  auto f = area_of("........\n", 8, 2, 1);
  f.agent(9, {6, 0}, Coord{6, 0});
  f.agent(1, {0, 0}, Coord{5, 0}, true);
  f.agent(2, {5, 0}, Coord{7, 0}, true);
  ASSERT_FALSE(plan_movements(f.inst, horizon(8, 2)));
  auto r = relax_and_retry(f.inst, horizon(8, 2));
  ASSERT_TRUE(r);
  EXPECT_EQ(r->stripped, (std::vector<AgentId>{1, 2}));
}

TEST(Relax, NothingToStrip) {
  auto f = area_of("..\n", 2, 2, 1);
  f.agent(1, {0, 0}, Coord{1, 0});
  f.agent(2, {1, 0}, Coord{0, 0});
  EXPECT_FALSE(relax_and_retry(f.inst, horizon(2, 2)).has_value());
}

TEST(CheckPlan, FlagsBrokenPlans) {
  auto f = area_of("...\n", 3, 2, 1);
  f.agent(1, {0, 0}, Coord{2, 0});
  MovementPlan jump{1, {{1, {f.at(0, 0), f.at(2, 0)}}}};
  EXPECT_FALSE(check_plan(f.inst, jump).empty());
  MovementPlan short_of_goal{1, {{1, {f.at(0, 0), f.at(1, 0)}}}};
  EXPECT_FALSE(check_plan(f.inst, short_of_goal).empty());
}
