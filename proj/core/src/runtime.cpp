#include "dmapf/runtime.hpp"

#include <algorithm>
#include <thread>

#include "worker.hpp"

namespace dmapf {

std::string to_string(SolveStatus s) {
  switch (s) {
    case SolveStatus::Solved: return "solved";
    case SolveStatus::Unsolvable: return "unsolvable";
    case SolveStatus::PlanFailed: return "plan-failed";
    case SolveStatus::RoundLimit: return "round-limit";
    case SolveStatus::Timeout: return "timeout";
    case SolveStatus::ProtocolError: return "protocol-error";
  }
  return "unknown";
}

Tasks determine_tasks(const std::vector<TrackMessage>& messages, const Partition& part, SolverId self) {
  Tasks t;
  std::set<AreaPair> pairs;
  for (const auto& m : messages) {
    if (m.has_work) t.active.insert(m.solver);
    for (const auto& p : m.pending) pairs.insert(make_pair_key(p.current, p.next));
  }
  for (const auto& pr : pairs) {
    SolverId u = part.owner(pr.first), v = part.owner(pr.second);
    if (u > v) throw ProtocolError("area ids not ordered by owner");
    t.active.insert(u);
    t.active.insert(v);
    t.pairs.push_back(pr);
    if (u == v) {
      if (u == self) t.local.push_back(pr);
    } else if (u == self) {
      t.send.push_back(pr);
    } else if (v == self) {
      t.recv.push_back(pr);
    }
  }
  return t;
}

void confirm_apply(std::map<AgentId, AgentState>& destination, const std::vector<MigrantRecord>& migrants,
                   const std::set<AgentId>& rejected) {
  std::set<NodeId> entries;
  for (const auto& m : migrants) {
    if (rejected.count(m.agent)) {
      throw ProtocolError("agent " + std::to_string(m.agent) + " confirmed after its assignment was rejected");
    }
    if (destination.count(m.agent)) throw ProtocolError("agent " + std::to_string(m.agent) + " confirmed twice");
    if (!entries.insert(m.node).second) {
      throw ProtocolError("two migrants enter from node " + std::to_string(m.node));
    }
    destination[m.agent] = AgentState{m.agent, m.node, m.goal, m.plan};
  }
}

GlobalSolution stitch(const Problem& p, const std::vector<RoundPlan>& plans) {
  std::map<AgentId, NodeId> pos = p.starts();
  std::map<AgentId, std::vector<NodeId>> paths;
  for (const auto& [a, n] : pos) paths[a].push_back(n);

  std::map<int, std::vector<const RoundPlan*>> by_round;
  for (const auto& r : plans) by_round[r.round].push_back(&r);
  for (const auto& [round, list] : by_round) {
    int T = 0;
    for (const auto* r : list) T = std::max(T, r->plan.length);
    std::set<AgentId> covered;
    for (const auto* r : list) {
      for (const auto& [agent, steps] : r->plan.steps) {
        auto it = pos.find(agent);
        if (it == pos.end() || steps.empty() || steps.front() != it->second || !covered.insert(agent).second) {
          throw std::logic_error("round " + std::to_string(round) + " plan for area " + std::to_string(r->area) +
                                 " does not continue agent " + std::to_string(agent));
        }
        auto& path = paths[agent];
        path.insert(path.end(), steps.begin() + 1, steps.end());
        path.resize(path.size() + static_cast<std::size_t>(T - r->plan.length), steps.back());
        it->second = steps.back();
      }
    }
    for (auto& [agent, path] : paths) {
      if (!covered.count(agent)) path.resize(path.size() + static_cast<std::size_t>(T), pos[agent]);
    }
  }
  GlobalSolution s = make_solution(std::move(paths));
  auto report = validate(p, s);
  if (!report.ok) throw std::logic_error("stitched solution invalid: " + report.violations.front().describe());
  return s;
}

SolveReport run_hosted(const Problem& p, const SolverConfig& cfg, Transport& transport, SolverId first,
                       SolverId last) {
  const auto start = std::chrono::steady_clock::now();
  auto elapsed = [&] { return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count(); };
  SolveReport report;
  Partition part = divide(p, cfg.dx, cfg.dy);
  if (transport.solver_count() != part.solver_count()) {
    throw std::invalid_argument("transport has " + std::to_string(transport.solver_count()) + " solvers, partition " +
                                std::to_string(part.solver_count()));
  }
  std::map<AgentId, AbstractPlan> plans;
  try {
    plans = plan_all(assign_agents(part, p), part.links);
  } catch (const UnreachableGoal& e) {
    report.status = SolveStatus::Unsolvable;
    report.message = e.what();
    report.seconds = elapsed();
    return report;
  }

  SharedContext ctx{p, part, cfg,
                    start + std::chrono::milliseconds(static_cast<long>(cfg.timeout_s * 1000)), std::move(plans)};
  std::vector<WorkerOutcome> outcomes(static_cast<std::size_t>(std::max(0, last - first + 1)));
  std::vector<std::string> crashes(outcomes.size());
  {
    std::vector<std::thread> threads;
    for (SolverId s = first; s <= last; ++s) {
      threads.emplace_back([&, s] {
        const auto i = static_cast<std::size_t>(s - first);
        try {
          outcomes[i] = Worker(ctx, s, transport).run();
        } catch (const std::exception& e) {
          crashes[i] = e.what();
        }
      });
    }
    for (auto& t : threads) t.join();
  }
  for (std::size_t i = 0; i < crashes.size(); ++i) {
    if (!crashes[i].empty()) throw std::logic_error("solver " + std::to_string(first + static_cast<int>(i)) + ": " + crashes[i]);
  }
  if (outcomes.empty()) {
    report.seconds = elapsed();
    return report;
  }
  // The hosting process of solver 1 holds the aggregate.
  WorkerOutcome& main = outcomes.front();
  report.status = main.status;
  report.message = main.detail;
  for (const auto& o : outcomes) {
    if (o.status == SolveStatus::ProtocolError && report.status != SolveStatus::ProtocolError) {
      report.status = o.status;
      report.message = o.detail;
    }
  }
  report.rounds = main.rounds;
  report.solution = std::move(main.solution);
  for (const auto& e : main.events) report.events.push_back(e.text);
  report.ledger = std::move(main.ledger);
  report.seconds = elapsed();
  return report;
}

SolveReport solve(const Problem& p, const SolverConfig& cfg) {
  Partition part = divide(p, cfg.dx, cfg.dy);
  InProcTransport transport(part.solver_count(), cfg.keep_trace);
  SolveReport report = run_hosted(p, cfg, transport, 1, part.solver_count());
  report.trace = transport.trace();
  return report;
}

}  // namespace dmapf
