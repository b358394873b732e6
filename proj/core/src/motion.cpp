#include "dmapf/motion.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <sstream>

#include "dmapf/sat.hpp"

namespace dmapf {

LocalGraph LocalGraph::from_area(const Area& area) {
  LocalGraph g;
  for (const auto& n : area.in_nodes) {
    g.index[n.id] = static_cast<int>(g.ids.size());
    g.ids.push_back(n.id);
    g.coords.push_back(n.coord);
  }
  g.in_count = static_cast<int>(g.ids.size());
  for (const auto& n : area.out_nodes) {
    g.index[n.id] = static_cast<int>(g.ids.size());
    g.ids.push_back(n.id);
    g.coords.push_back(n.coord);
  }
  g.succ.resize(g.ids.size());
  g.pred.resize(g.ids.size());
  for (const auto& adj : area.adjacency) {
    int from = g.index.at(adj.from), to = g.index.at(adj.to);
    g.succ[static_cast<std::size_t>(from)].push_back(to);
    g.pred[static_cast<std::size_t>(to)].push_back(from);
  }
  for (auto& list : g.succ) std::sort(list.begin(), list.end());
  for (auto& list : g.pred) std::sort(list.begin(), list.end());
  return g;
}

int LocalGraph::at(NodeId n) const {
  auto it = index.find(n);
  if (it == index.end()) throw std::out_of_range("node " + std::to_string(n) + " is not part of the area");
  return it->second;
}

int horizon(int n_a, double F) {
  return static_cast<int>(std::floor((std::sqrt(static_cast<double>(n_a)) + 1.0) * 2.0 * F));
}

bool crowding_guard(int n_a, int n_r, int n_i, int n_f) { return n_a - n_r - n_i >= n_f; }

namespace {

constexpr int kUnreached = std::numeric_limits<int>::max() / 2;

std::vector<int> bfs(const std::vector<std::vector<int>>& adj, int source) {
  std::vector<int> dist(adj.size(), kUnreached);
  std::deque<int> queue{source};
  dist[static_cast<std::size_t>(source)] = 0;
  while (!queue.empty()) {
    int u = queue.front();
    queue.pop_front();
    for (int v : adj[static_cast<std::size_t>(u)]) {
      if (dist[static_cast<std::size_t>(v)] != kUnreached) continue;
      dist[static_cast<std::size_t>(v)] = dist[static_cast<std::size_t>(u)] + 1;
      queue.push_back(v);
    }
  }
  return dist;
}

struct Prepared {
  const MotionInstance* inst = nullptr;
  std::vector<int> start;
  std::vector<int> goal;  // -1 when none
  std::vector<std::vector<int>> from_start;
  std::vector<std::vector<int>> to_goal;
  std::vector<bool> reserved;
};

Prepared prepare(const MotionInstance& inst) {
  Prepared p;
  p.inst = &inst;
  const auto& g = inst.graph;
  p.reserved.assign(static_cast<std::size_t>(g.size()), false);
  if (inst.crowding) {
    for (NodeId n : inst.reserved) {
      auto it = g.index.find(n);
      if (it != g.index.end()) p.reserved[static_cast<std::size_t>(it->second)] = true;
    }
  }
  for (const auto& a : inst.agents) {
    int s = g.at(a.start);
    p.start.push_back(s);
    p.from_start.push_back(bfs(g.succ, s));
    if (a.goal) {
      int t = g.at(*a.goal);
      p.goal.push_back(t);
      p.to_goal.push_back(bfs(g.pred, t));
    } else {
      p.goal.push_back(-1);
      p.to_goal.emplace_back();
    }
  }
  return p;
}

class Encoding {
 public:
  Encoding(const Prepared& p, int T) : p_(p), T_(T) {}

  // nullopt when UNSAT; throws PlanningInterrupted.
  std::optional<MovementPlan> solve(const Interrupt& interrupt) {
    build();
    if (trivially_unsat_) return std::nullopt;
    auto r = solver_.solve(interrupt);
    if (r == sat::Result::Interrupted) throw PlanningInterrupted();
    if (r == sat::Result::Unsat) return std::nullopt;
    return extract();
  }

 private:
  bool allowed(std::size_t a, int t, int v) const {
    const auto& g = p_.inst->graph;
    if (t == T_ && p_.reserved[static_cast<std::size_t>(v)] && v != p_.goal[a]) return false;
    if (t == 0) return v == p_.start[a];
    if (!g.is_in(v)) return false;
    if (p_.from_start[a][static_cast<std::size_t>(v)] > t) return false;
    if (p_.goal[a] >= 0 && p_.to_goal[a][static_cast<std::size_t>(v)] > T_ - t) return false;
    return true;
  }

  int x(std::size_t a, int t, int v) const {
    return vars_[a][static_cast<std::size_t>(t)][static_cast<std::size_t>(v)];
  }

  void add(std::vector<sat::Lit> clause) {
    if (!solver_.add_clause(std::move(clause))) trivially_unsat_ = true;
  }

  void at_most_one(const std::vector<int>& vs) {
    if (vs.size() < 2) return;
    if (vs.size() <= 5) {
      for (std::size_t i = 0; i < vs.size(); ++i) {
        for (std::size_t j = i + 1; j < vs.size(); ++j) add({sat::neg(vs[i]), sat::neg(vs[j])});
      }
      return;
    }
    std::vector<int> s(vs.size() - 1);
    for (auto& v : s) v = solver_.new_var();
    add({sat::neg(vs[0]), sat::pos(s[0])});
    for (std::size_t i = 1; i + 1 < vs.size(); ++i) {
      add({sat::neg(vs[i]), sat::pos(s[i])});
      add({sat::neg(s[i - 1]), sat::pos(s[i])});
      add({sat::neg(vs[i]), sat::neg(s[i - 1])});
    }
    add({sat::neg(vs.back()), sat::neg(s.back())});
  }

  void build() {
    const auto& g = p_.inst->graph;
    const std::size_t n_agents = p_.start.size();
    const auto n = static_cast<std::size_t>(g.size());
    vars_.assign(n_agents, std::vector<std::vector<int>>(static_cast<std::size_t>(T_) + 1, std::vector<int>(n, -1)));
    for (std::size_t a = 0; a < n_agents; ++a) {
      for (int t = 0; t <= T_; ++t) {
        for (int v = 0; v < g.size(); ++v) {
          if (allowed(a, t, v)) vars_[a][static_cast<std::size_t>(t)][static_cast<std::size_t>(v)] = solver_.new_var();
        }
      }
    }

    for (std::size_t a = 0; a < n_agents; ++a) {
      if (x(a, 0, p_.start[a]) < 0) {
        trivially_unsat_ = true;
        return;
      }
      add({sat::pos(x(a, 0, p_.start[a]))});
      if (p_.goal[a] >= 0) {
        int gv = x(a, T_, p_.goal[a]);
        if (gv < 0) {
          trivially_unsat_ = true;
          return;
        }
        add({sat::pos(gv)});
      }
      for (int t = 0; t <= T_; ++t) {
        for (int v = 0; v < g.size(); ++v) {
          int xv = x(a, t, v);
          if (xv < 0) continue;
          if (t < T_) {
            std::vector<sat::Lit> fwd{sat::neg(xv)};
            if (int w = x(a, t + 1, v); w >= 0) fwd.push_back(sat::pos(w));
            for (int u : g.succ[static_cast<std::size_t>(v)]) {
              if (int w = x(a, t + 1, u); w >= 0) fwd.push_back(sat::pos(w));
            }
            add(std::move(fwd));
          }
          if (t > 0) {
            std::vector<sat::Lit> bwd{sat::neg(xv)};
            if (int w = x(a, t - 1, v); w >= 0) bwd.push_back(sat::pos(w));
            for (int u : g.pred[static_cast<std::size_t>(v)]) {
              if (int w = x(a, t - 1, u); w >= 0) bwd.push_back(sat::pos(w));
            }
            add(std::move(bwd));
          }
        }
      }
    }

    // One agent per node and step.
    for (int t = 0; t <= T_; ++t) {
      for (int v = 0; v < g.size(); ++v) {
        std::vector<int> occupants;
        for (std::size_t a = 0; a < n_agents; ++a) {
          if (int xv = x(a, t, v); xv >= 0) occupants.push_back(xv);
        }
        at_most_one(occupants);
      }
    }

    // No swaps: only edges that may be used in both directions at a step
    // need an auxiliary variable.
    std::map<std::tuple<int, int, int>, std::vector<std::pair<int, int>>> uses;
    for (std::size_t a = 0; a < n_agents; ++a) {
      for (int t = 0; t < T_; ++t) {
        for (int u = 0; u < g.in_count; ++u) {
          int xu = x(a, t, u);
          if (xu < 0) continue;
          for (int v : g.succ[static_cast<std::size_t>(u)]) {
            int xv = x(a, t + 1, v);
            if (xv >= 0) uses[{t, u, v}].emplace_back(xu, xv);
          }
        }
      }
    }
    for (const auto& [key, list] : uses) {
      auto [t, u, v] = key;
      if (u > v) continue;
      auto back = uses.find({t, v, u});
      if (back == uses.end()) continue;
      int e_uv = solver_.new_var(), e_vu = solver_.new_var();
      for (auto [xu, xv] : list) add({sat::neg(xu), sat::neg(xv), sat::pos(e_uv)});
      for (auto [xv, xu] : back->second) add({sat::neg(xv), sat::neg(xu), sat::pos(e_vu)});
      add({sat::neg(e_uv), sat::neg(e_vu)});
    }
  }

  bool holds(std::size_t a, int t, int v) const {
    int xv = x(a, t, v);
    return xv >= 0 && solver_.value(xv);
  }

  MovementPlan extract() const {
    const auto& g = p_.inst->graph;
    MovementPlan plan;
    plan.length = T_;
    for (std::size_t a = 0; a < p_.start.size(); ++a) {
      std::vector<int> path(static_cast<std::size_t>(T_) + 1);
      if (p_.goal[a] >= 0) {
        path[static_cast<std::size_t>(T_)] = p_.goal[a];
        for (int t = T_; t > 0; --t) {
          int v = path[static_cast<std::size_t>(t)];
          int chosen = holds(a, t - 1, v) ? v : -1;
          for (int u : g.pred[static_cast<std::size_t>(v)]) {
            if (chosen < 0 && holds(a, t - 1, u)) chosen = u;
          }
          path[static_cast<std::size_t>(t - 1)] = chosen;
        }
      } else {
        path[0] = p_.start[a];
        for (int t = 0; t < T_; ++t) {
          int v = path[static_cast<std::size_t>(t)];
          int chosen = holds(a, t + 1, v) ? v : -1;
          for (int u : g.succ[static_cast<std::size_t>(v)]) {
            if (chosen < 0 && holds(a, t + 1, u)) chosen = u;
          }
          path[static_cast<std::size_t>(t + 1)] = chosen;
        }
      }
      auto& steps = plan.steps[p_.inst->agents[a].id];
      for (int v : path) steps.push_back(g.ids[static_cast<std::size_t>(v)]);
    }
    return plan;
  }

  const Prepared& p_;
  int T_;
  sat::Solver solver_;
  std::vector<std::vector<std::vector<int>>> vars_;
  bool trivially_unsat_ = false;
};

// Re-routes each agent in turn with the others fixed, minimising its moves
// at the same horizon and end constraints.
void reduce_moves(const Prepared& p, MovementPlan& plan) {
  const auto& inst = *p.inst;
  const auto& g = inst.graph;
  const int T = plan.length;
  if (T == 0) return;
  std::vector<std::vector<int>> paths;
  for (const auto& a : inst.agents) {
    std::vector<int> path;
    for (NodeId n : plan.steps.at(a.id)) path.push_back(g.at(n));
    paths.push_back(std::move(path));
  }
  auto moves = [](const std::vector<int>& path) {
    int m = 0;
    for (std::size_t t = 1; t < path.size(); ++t) m += path[t] != path[t - 1] ? 1 : 0;
    return m;
  };

  const auto n = static_cast<std::size_t>(g.size());
  for (std::size_t a = 0; a < paths.size(); ++a) {
    std::vector<std::vector<int>> owner(static_cast<std::size_t>(T) + 1, std::vector<int>(n, -1));
    for (std::size_t b = 0; b < paths.size(); ++b) {
      if (b == a) continue;
      for (int t = 0; t <= T; ++t) owner[static_cast<std::size_t>(t)][static_cast<std::size_t>(paths[b][static_cast<std::size_t>(t)])] = static_cast<int>(b);
    }
    // cost[t][v], parent[t][v]
    std::vector<std::vector<int>> cost(static_cast<std::size_t>(T) + 1, std::vector<int>(n, kUnreached));
    std::vector<std::vector<int>> parent(static_cast<std::size_t>(T) + 1, std::vector<int>(n, -1));
    cost[0][static_cast<std::size_t>(p.start[a])] = 0;
    for (int t = 0; t < T; ++t) {
      const auto ts = static_cast<std::size_t>(t);
      for (int v = 0; v < g.in_count; ++v) {
        const auto vs = static_cast<std::size_t>(v);
        if (owner[ts + 1][vs] >= 0) continue;
        if (t + 1 == T && p.reserved[vs] && v != p.goal[a]) continue;
        auto relax = [&](int u, int step) {
          const auto us = static_cast<std::size_t>(u);
          if (cost[ts][us] == kUnreached) return;
          if (u != v) {
            // A swap with the agent moving v -> u at this step.
            int other = owner[ts][vs];
            if (other >= 0 && paths[static_cast<std::size_t>(other)][ts + 1] == u) return;
          }
          int c = cost[ts][us] + step;
          if (c < cost[ts + 1][vs]) {
            cost[ts + 1][vs] = c;
            parent[ts + 1][vs] = u;
          }
        };
        relax(v, 0);
        for (int u : g.pred[vs]) relax(u, 1);
      }
    }
    int end = -1;
    if (p.goal[a] >= 0) {
      end = p.goal[a];
    } else {
      for (int v = 0; v < g.in_count; ++v) {
        if (cost[static_cast<std::size_t>(T)][static_cast<std::size_t>(v)] == kUnreached) continue;
        if (end < 0 || cost[static_cast<std::size_t>(T)][static_cast<std::size_t>(v)] <
                           cost[static_cast<std::size_t>(T)][static_cast<std::size_t>(end)]) {
          end = v;
        }
      }
    }
    if (end < 0 || cost[static_cast<std::size_t>(T)][static_cast<std::size_t>(end)] >= moves(paths[a])) continue;
    std::vector<int> path(static_cast<std::size_t>(T) + 1);
    path[static_cast<std::size_t>(T)] = end;
    for (int t = T; t > 0; --t) {
      path[static_cast<std::size_t>(t - 1)] = parent[static_cast<std::size_t>(t)][static_cast<std::size_t>(path[static_cast<std::size_t>(t)])];
    }
    paths[a] = std::move(path);
  }
  for (std::size_t a = 0; a < paths.size(); ++a) {
    auto& steps = plan.steps[inst.agents[a].id];
    steps.clear();
    for (int v : paths[a]) steps.push_back(g.ids[static_cast<std::size_t>(v)]);
  }
}

}  // namespace

std::optional<MovementPlan> plan_movements(const MotionInstance& inst, int h_m, const Interrupt& interrupt) {
  Prepared p = prepare(inst);
  int lower = 0;
  for (std::size_t a = 0; a < inst.agents.size(); ++a) {
    if (!inst.graph.is_in(p.start[a])) lower = std::max(lower, 1);
    if (p.goal[a] < 0) continue;
    if (!inst.graph.is_in(p.goal[a])) return std::nullopt;
    int d = p.from_start[a][static_cast<std::size_t>(p.goal[a])];
    if (d == kUnreached) return std::nullopt;
    lower = std::max(lower, d);
  }
  if (lower > h_m) return std::nullopt;

  auto attempt = [&](int T) {
    if (interrupt && interrupt()) throw PlanningInterrupted();
    return Encoding(p, T).solve(interrupt);
  };

  // Feasibility is monotone in T (agents can wait), so a short linear scan
  // followed by bisection finds the same minimum as a full scan.
  constexpr int kLinear = 4;
  std::optional<MovementPlan> best;
  int T = lower;
  for (; T <= h_m && T < lower + kLinear; ++T) {
    best = attempt(T);
    if (best) break;
  }
  if (!best && T <= h_m) {
    best = attempt(h_m);
    if (!best) return std::nullopt;
    int lo = T - 1, hi = h_m;
    while (hi - lo > 1) {
      int mid = lo + (hi - lo) / 2;
      if (auto plan = attempt(mid)) {
        best = std::move(plan);
        hi = mid;
      } else {
        lo = mid;
      }
    }
  }
  if (!best) return std::nullopt;
  reduce_moves(p, *best);
  return best;
}

std::optional<RelaxedPlan> relax_and_retry(MotionInstance inst, int h_m, const Interrupt& interrupt) {
  std::vector<std::size_t> order;
  for (std::size_t i = 0; i < inst.agents.size(); ++i) {
    if (inst.agents[i].migrating && inst.agents[i].goal) order.push_back(i);
  }
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    const auto& x = inst.agents[a];
    const auto& y = inst.agents[b];
    if (x.border_distance != y.border_distance) return x.border_distance > y.border_distance;
    return x.id < y.id;
  });
  RelaxedPlan out;
  for (std::size_t next = 0;; ++next) {
    if (auto plan = plan_movements(inst, h_m, interrupt)) {
      out.plan = std::move(*plan);
      return out;
    }
    if (next >= order.size()) return std::nullopt;
    auto& agent = inst.agents[order[next]];
    agent.goal.reset();
    agent.migrating = false;
    out.stripped.push_back(agent.id);
  }
}

std::vector<std::string> check_plan(const MotionInstance& inst, const MovementPlan& plan) {
  std::vector<std::string> errors;
  auto fail = [&](auto&&... parts) {
    std::ostringstream os;
    (os << ... << parts);
    errors.push_back(os.str());
  };
  const auto& g = inst.graph;
  const int T = plan.length;
  if (plan.steps.size() != inst.agents.size()) fail("plan covers ", plan.steps.size(), " agents, instance has ", inst.agents.size());
  std::map<AgentId, std::vector<int>> local;
  for (const auto& a : inst.agents) {
    auto it = plan.steps.find(a.id);
    if (it == plan.steps.end()) {
      fail("agent ", a.id, ": missing");
      continue;
    }
    if (static_cast<int>(it->second.size()) != T + 1) {
      fail("agent ", a.id, ": ", it->second.size(), " steps, expected ", T + 1);
      continue;
    }
    std::vector<int> path;
    for (NodeId n : it->second) {
      auto idx = g.index.find(n);
      path.push_back(idx == g.index.end() ? -1 : idx->second);
    }
    if (it->second.front() != a.start) fail("agent ", a.id, ": does not start at ", a.start);
    for (int t = 1; t <= T; ++t) {
      int u = path[static_cast<std::size_t>(t - 1)], v = path[static_cast<std::size_t>(t)];
      if (v < 0 || !g.is_in(v)) {
        fail("agent ", a.id, ": outside the area at t=", t);
        continue;
      }
      if (u < 0) continue;
      const auto& s = g.succ[static_cast<std::size_t>(u)];
      if (u != v && !std::binary_search(s.begin(), s.end(), v)) fail("agent ", a.id, ": illegal move at t=", t);
    }
    if (a.goal && it->second.back() != *a.goal) fail("agent ", a.id, ": misses goal ", *a.goal);
    if (inst.crowding && inst.reserved.count(it->second.back()) && (!a.goal || *a.goal != it->second.back())) {
      fail("agent ", a.id, ": rests on reserved node ", it->second.back());
    }
    local[a.id] = std::move(path);
  }
  for (int t = 0; t <= T; ++t) {
    std::map<int, AgentId> seen;
    for (const auto& [id, path] : local) {
      int v = path[static_cast<std::size_t>(t)];
      auto [it, fresh] = seen.emplace(v, id);
      if (!fresh) fail("agents ", it->second, " and ", id, " share a node at t=", t);
    }
  }
  for (int t = 1; t <= T; ++t) {
    for (auto a = local.begin(); a != local.end(); ++a) {
      for (auto b = std::next(a); b != local.end(); ++b) {
        const auto ts = static_cast<std::size_t>(t);
        if (a->second[ts - 1] != a->second[ts] && a->second[ts - 1] == b->second[ts] &&
            a->second[ts] == b->second[ts - 1]) {
          fail("agents ", a->first, " and ", b->first, " swap at t=", t);
        }
      }
    }
  }
  return errors;
}

}  // namespace dmapf
