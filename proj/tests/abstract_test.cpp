#include <gtest/gtest.h>

#include <random>
#include <sstream>

#include "dmapf/abstract.hpp"
#include "dmapf/instance_io.hpp"
#include "support/oracles.hpp"

using namespace dmapf;

namespace {

LinkGraph chain(int n) {
  LinkGraph g(n);
  for (int a = 1; a < n; ++a) g.add(a, {static_cast<NodeId>(a * 10), {a, 0}}, a + 1, {static_cast<NodeId>(a * 10 + 1), {a, 1}});
  g.finalize();
  return g;
}

}  // namespace

TEST(AbstractPlan, SameAreaIsLengthZero) {
  auto plan = abstract_plan(chain(3), 2, 2, 3);
  ASSERT_TRUE(plan);
  EXPECT_EQ(plan->areas(), (std::vector<AreaId>{2}));
  EXPECT_EQ(plan->remaining(), 0);
}

TEST(AbstractPlan, ChainIsUnique) {
  auto plan = abstract_plan(chain(3), 1, 3, 3);
  ASSERT_TRUE(plan);
  EXPECT_EQ(plan->areas(), (std::vector<AreaId>{1, 2, 3}));
  auto copy = *plan;
  copy.advance();
  EXPECT_EQ(copy.remaining(), 1);
  EXPECT_EQ(copy.current(), 2);
}

TEST(AbstractPlan, UnlinkedAreasHaveNoPlan) {
  LinkGraph g(2);
  g.finalize();
  EXPECT_FALSE(abstract_plan(g, 1, 2, 2).has_value());
  EXPECT_THROW(abstract_plan(g, 1, 5, 2), std::out_of_range);
}

TEST(AbstractPlan, CornerToCornerOnThreeByThreeAreaGrid) {
  std::ostringstream os;
  os << "agent 1 0 0 5 5\n\n";
  for (int y = 0; y < 6; ++y) os << "......\n";
  auto p = parse_grid(os.str());
  auto part = divide(p, 2, 2);
  ASSERT_EQ(part.links.area_count(), 9);
  std::set<std::pair<AreaId, AreaId>> edges;
  for (const auto& [key, list] : part.links.pairs()) edges.insert(key);
  auto expected = oracle::area_distance(9, edges, 1, 9);
  ASSERT_TRUE(expected);
  EXPECT_EQ(*expected, 4);
  auto plans = plan_all(assign_agents(part, p), part.links);
  EXPECT_EQ(plans.at(1).areas().size(), 5u);
  // Ties go to the smaller next area: right along the top row first.
  EXPECT_EQ(plans.at(1).areas(), (std::vector<AreaId>{1, 2, 3, 6, 9}));
}

TEST(PlanAll, GoalLocalAndGoalLess) {
  auto p = parse_grid("agent 1 0 0 1 0\nagent 2 1 1\nagent 3 0 1 1 1\n\n..\n..\n");
  auto part = divide(p, 2, 2);
  auto plans = plan_all(assign_agents(part, p), part.links);
  for (AgentId a : {1, 2, 3}) EXPECT_EQ(plans.at(a).remaining(), 0);
}

TEST(PlanAll, UnreachableAgentFailsGlobally) {
  auto p = parse_grid("agent 1 0 0 3 0\nagent 2 1 0\n\n..#.\n");
  auto part = divide(p, 2, 2);
  try {
    plan_all(assign_agents(part, p), part.links);
    FAIL() << "expected UnreachableGoal";
  } catch (const UnreachableGoal& e) {
    EXPECT_EQ(e.agent(), 1);
  }
}

TEST(AbstractPlan, MatchesBfsOnRandomGraphs) {
  std::mt19937 rng(5);
  for (int trial = 0; trial < 30; ++trial) {
    const int n = 2 + static_cast<int>(rng() % 12);
    LinkGraph g(n);
    std::set<std::pair<AreaId, AreaId>> edges;
    for (int e = 0; e < n; ++e) {
      AreaId a = 1 + static_cast<int>(rng() % n), b = 1 + static_cast<int>(rng() % n);
      if (a == b) continue;
      g.add(a, {static_cast<NodeId>(100 * a + b), {a, b}}, b, {static_cast<NodeId>(100 * b + a), {b, a}});
      edges.insert(make_pair_key(a, b));
    }
    g.finalize();
    for (AreaId s = 1; s <= n; ++s) {
      for (AreaId t = 1; t <= n; ++t) {
        auto plan = abstract_plan(g, s, t, n);
        auto d = oracle::area_distance(n, edges, s, t);
        ASSERT_EQ(plan.has_value(), d.has_value());
        if (!plan) continue;
        EXPECT_EQ(plan->remaining(), *d);
        for (std::size_t i = 1; i < plan->areas().size(); ++i) {
          EXPECT_TRUE(edges.count(make_pair_key(plan->areas()[i - 1], plan->areas()[i])));
        }
      }
    }
  }
}
