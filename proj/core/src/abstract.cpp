#include "dmapf/abstract.hpp"

#include <deque>
#include <string>

namespace dmapf {

void AbstractPlan::advance() {
  if (areas_.size() < 2) throw std::logic_error("abstract plan already at its goal area");
  areas_.erase(areas_.begin());
}

UnreachableGoal::UnreachableGoal(AgentId agent)
    : std::runtime_error("agent " + std::to_string(agent) + " cannot reach its goal area"), agent_(agent) {}

std::optional<AbstractPlan> abstract_plan(const LinkGraph& links, AreaId start, AreaId goal, int horizon) {
  const int n = links.area_count();
  if (start < 1 || start > n || goal < 1 || goal > n) throw std::out_of_range("unknown area id");

  // Distances to the goal, then a greedy walk that always takes the
  // smallest-id neighbour one step closer.
  std::vector<int> dist(static_cast<std::size_t>(n) + 1, -1);
  std::deque<AreaId> queue{goal};
  dist[static_cast<std::size_t>(goal)] = 0;
  while (!queue.empty()) {
    AreaId a = queue.front();
    queue.pop_front();
    for (AreaId b : links.neighbors(a)) {
      if (dist[static_cast<std::size_t>(b)] >= 0) continue;
      dist[static_cast<std::size_t>(b)] = dist[static_cast<std::size_t>(a)] + 1;
      queue.push_back(b);
    }
  }
  int d = dist[static_cast<std::size_t>(start)];
  if (d < 0 || d > horizon) return std::nullopt;

  std::vector<AreaId> path{start};
  AreaId at = start;
  while (at != goal) {
    for (AreaId b : links.neighbors(at)) {
      if (dist[static_cast<std::size_t>(b)] == dist[static_cast<std::size_t>(at)] - 1) {
        at = b;
        break;
      }
    }
    path.push_back(at);
  }
  return AbstractPlan(std::move(path));
}

std::map<AgentId, AbstractPlan> plan_all(const std::vector<AgentPlacement>& agents, const LinkGraph& links) {
  std::map<AgentId, AbstractPlan> plans;
  for (const auto& a : agents) {
    if (!a.goal_area) {
      plans.emplace(a.agent, AbstractPlan({a.area}));
      continue;
    }
    auto plan = abstract_plan(links, a.area, *a.goal_area, links.area_count());
    if (!plan) throw UnreachableGoal(a.agent);
    plans.emplace(a.agent, std::move(*plan));
  }
  return plans;
}

}  // namespace dmapf
