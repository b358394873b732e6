// Area-level routing over the link graph.
#pragma once

#include <map>
#include <optional>
#include <stdexcept>
#include <vector>

#include "dmapf/partition.hpp"

namespace dmapf {

// Remaining sequence of areas ⟨current, ..., goal area⟩.
class AbstractPlan {
 public:
  AbstractPlan() = default;
  explicit AbstractPlan(std::vector<AreaId> areas) : areas_(std::move(areas)) {}

  const std::vector<AreaId>& areas() const { return areas_; }
  AreaId current() const { return areas_.front(); }
  std::optional<AreaId> next() const {
    if (areas_.size() < 2) return std::nullopt;
    return areas_[1];
  }
  // Hops left until the goal area.
  int remaining() const { return static_cast<int>(areas_.size()) - 1; }
  // Drops the current area after a confirmed migration.
  void advance();

  bool operator==(const AbstractPlan&) const = default;

 private:
  std::vector<AreaId> areas_;
};

class UnreachableGoal : public std::runtime_error {
 public:
  explicit UnreachableGoal(AgentId agent);
  AgentId agent() const { return agent_; }

 private:
  AgentId agent_;
};

// Shortest area path from start to goal within `horizon` hops, ties broken
// toward the smallest next-area id. Throws std::out_of_range on unknown ids.
std::optional<AbstractPlan> abstract_plan(const LinkGraph& links, AreaId start, AreaId goal, int horizon);

// Plans for the given agents; goal-less agents get the length-0 plan of their
// current area. Throws UnreachableGoal on the first agent without a plan.
std::map<AgentId, AbstractPlan> plan_all(const std::vector<AgentPlacement>& agents, const LinkGraph& links);

}  // namespace dmapf
