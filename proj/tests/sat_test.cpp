#include <gtest/gtest.h>

#include <random>

#include "dmapf/sat.hpp"

using namespace dmapf::sat;

namespace {

using Cnf = std::vector<std::vector<Lit>>;

bool satisfies(const Cnf& cnf, const std::vector<bool>& assignment) {
  for (const auto& clause : cnf) {
    bool any = false;
    for (Lit l : clause) any = any || (assignment[static_cast<std::size_t>(var_of(l))] == !(l & 1));
    if (!any) return false;
  }
  return true;
}

bool brute_force(const Cnf& cnf, int vars) {
  for (std::uint32_t m = 0; m < (1u << vars); ++m) {
    std::vector<bool> a(static_cast<std::size_t>(vars));
    for (int v = 0; v < vars; ++v) a[static_cast<std::size_t>(v)] = (m >> v) & 1u;
    if (satisfies(cnf, a)) return true;
  }
  return false;
}

}  // namespace

TEST(Sat, EmptyFormulaIsSat) {
  Solver s;
  s.new_var();
  EXPECT_EQ(s.solve(), Result::Sat);
}

TEST(Sat, ContradictoryUnits) {
  Solver s;
  int x = s.new_var();
  EXPECT_TRUE(s.add_clause({pos(x)}));
  EXPECT_FALSE(s.add_clause({neg(x)}));
  EXPECT_EQ(s.solve(), Result::Unsat);
}

TEST(Sat, PigeonholeThreeIntoTwo) {
  Solver s;
  int p[3][2];
  for (auto& row : p) {
    for (int& v : row) v = s.new_var();
  }
  for (auto& row : p) s.add_clause({pos(row[0]), pos(row[1])});
  for (int h = 0; h < 2; ++h) {
    for (int i = 0; i < 3; ++i) {
      for (int j = i + 1; j < 3; ++j) s.add_clause({neg(p[i][h]), neg(p[j][h])});
    }
  }
  EXPECT_EQ(s.solve(), Result::Unsat);
}

TEST(Sat, InterruptStopsSearch) {
  // Pigeonhole 9 into 8 is hard enough to reach the polling point.
  Solver s;
  const int n = 9, m = 8;
  std::vector<std::vector<int>> p(n, std::vector<int>(m));
  for (auto& row : p) {
    for (int& v : row) v = s.new_var();
  }
  for (auto& row : p) {
    std::vector<Lit> c;
    for (int v : row) c.push_back(pos(v));
    s.add_clause(c);
  }
  for (int h = 0; h < m; ++h) {
    for (int i = 0; i < n; ++i) {
      for (int j = i + 1; j < n; ++j) s.add_clause({neg(p[i][h]), neg(p[j][h])});
    }
  }
  EXPECT_EQ(s.solve([] { return true; }), Result::Interrupted);
}

TEST(Sat, AgreesWithBruteForceOnRandom3Sat) {
  std::mt19937 rng(9);
  for (int trial = 0; trial < 300; ++trial) {
    const int vars = 4 + static_cast<int>(rng() % 9);
    const int clauses = static_cast<int>(vars * (3 + rng() % 3));
    Cnf cnf;
    Solver s;
    for (int v = 0; v < vars; ++v) s.new_var();
    bool trivially_unsat = false;
    for (int c = 0; c < clauses; ++c) {
      std::vector<Lit> clause;
      for (int k = 0; k < 3; ++k) {
        int v = static_cast<int>(rng() % static_cast<unsigned>(vars));
        clause.push_back(rng() % 2 ? pos(v) : neg(v));
      }
      cnf.push_back(clause);
      trivially_unsat = !s.add_clause(clause) || trivially_unsat;
    }
    const bool expected = brute_force(cnf, vars);
    const Result r = trivially_unsat ? Result::Unsat : s.solve();
    ASSERT_EQ(r == Result::Sat, expected) << "trial " << trial;
    if (r == Result::Sat) {
      std::vector<bool> model;
      for (int v = 0; v < vars; ++v) model.push_back(s.value(v));
      EXPECT_TRUE(satisfies(cnf, model));
    }
  }
}
