#include <benchmark/benchmark.h>

#include "cli.hpp"
#include "dmapf/instance_io.hpp"
#include "dmapf/runtime.hpp"

using namespace dmapf;

namespace {

Problem open_grid(int size, int agents, unsigned seed = 1) {
  cli::GenerateOptions o;
  o.width = o.height = size;
  o.agents = agents;
  o.seed = seed;
  return parse_grid(cli::generate_instance(o));
}

// One full 8x8 area with every agent crossing to the mirrored node.
MotionInstance crowded_area(int agents) {
  auto p = open_grid(8, 1);
  auto part = divide(p, 8, 8);
  MotionInstance inst;
  inst.graph = LocalGraph::from_area(part.areas.front());
  for (int i = 0; i < agents; ++i) {
    const int x = i % 8, y = i / 8;
    inst.agents.push_back({i + 1, *p.node_at({x, y}), *p.node_at({7 - x, 7 - y}), false, 0});
  }
  return inst;
}

}  // namespace

static void BM_PlanMovements(benchmark::State& state) {
  const auto inst = crowded_area(static_cast<int>(state.range(0)));
  const int h = horizon(inst.graph.in_count, 2.0);
  for (auto _ : state) benchmark::DoNotOptimize(plan_movements(inst, h));
}
BENCHMARK(BM_PlanMovements)->Arg(2)->Arg(4)->Arg(8)->Unit(benchmark::kMillisecond);

static void BM_Divide(benchmark::State& state) {
  const auto p = open_grid(static_cast<int>(state.range(0)), 10);
  for (auto _ : state) benchmark::DoNotOptimize(divide(p, 8, 8));
}
BENCHMARK(BM_Divide)->Arg(24)->Arg(48)->Unit(benchmark::kMillisecond);

static void BM_AssignBorders(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  std::vector<MigrationCandidate> cands;
  std::vector<BorderOption> borders;
  for (int i = 0; i < n; ++i) {
    MigrationCandidate c;
    c.agent = i + 1;
    c.node = 1000 + i;
    c.coord = {i % 3, (7 * i) % 8};
    c.tier = 1;
    c.side = i % 2 ? Side::Incoming : Side::Outgoing;
    cands.push_back(c);
  }
  for (int y = 0; y < 8; ++y) {
    BorderOption o;
    o.host = {static_cast<NodeId>(10 + y), {7, y}};
    o.remote = {static_cast<NodeId>(20 + y), {8, y}};
    borders.push_back(o);
  }
  for (auto _ : state) benchmark::DoNotOptimize(assign_borders(cands, borders, std::min(n, 4)));
}
BENCHMARK(BM_AssignBorders)->Arg(4)->Arg(8)->Arg(16);

static void BM_Solve24(benchmark::State& state) {
  const auto p = open_grid(24, static_cast<int>(state.range(0)));
  for (auto _ : state) {
    auto r = solve(p, SolverConfig{});
    if (r.status != SolveStatus::Solved) state.SkipWithError(r.message.c_str());
  }
}
BENCHMARK(BM_Solve24)->Arg(23)->Arg(69)->Arg(120)->Unit(benchmark::kMillisecond);

// The packaged benchmark_main archive carries LTO bytecode from another
// compiler release, so main is defined here.
BENCHMARK_MAIN();
