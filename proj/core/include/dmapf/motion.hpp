// Bounded-horizon movement planning inside one area for one round.
#pragma once

#include <functional>
#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

#include "dmapf/partition.hpp"

namespace dmapf {

// Area graph with in-nodes at local indices [0, in_count) followed by
// out-nodes. Moves always target an in-node.
struct LocalGraph {
  std::vector<NodeId> ids;
  std::vector<Coord> coords;
  std::vector<std::vector<int>> succ;
  std::vector<std::vector<int>> pred;
  std::unordered_map<NodeId, int> index;
  int in_count = 0;

  static LocalGraph from_area(const Area& area);
  bool is_in(int local) const { return local < in_count; }
  int size() const { return static_cast<int>(ids.size()); }
  int at(NodeId n) const;
};

struct MotionAgent {
  AgentId id = 0;
  NodeId start = 0;             // an out-node for agents entering this round
  std::optional<NodeId> goal;   // plan goal for this round
  bool migrating = false;       // goal is an assigned from_border
  int border_distance = 0;      // Manhattan distance start -> from_border
};

struct MotionInstance {
  LocalGraph graph;
  std::vector<MotionAgent> agents;
  std::set<NodeId> reserved;  // entry nodes for next round's migrants
  bool crowding = false;      // enforce the reserved-node constraint
};

struct MovementPlan {
  int length = 0;
  std::map<AgentId, std::vector<NodeId>> steps;  // length + 1 nodes each
};

// Raised when the interrupt callback fires during planning.
class PlanningInterrupted : public std::runtime_error {
 public:
  PlanningInterrupted() : std::runtime_error("movement planning interrupted") {}
};

// floor((sqrt(n_a) + 1) * 2.0 * F)
int horizon(int n_a, double F);

// n_a - n_r - n_i >= n_f
bool crowding_guard(int n_a, int n_r, int n_i, int n_f);

using Interrupt = std::function<bool()>;

// Smallest T <= h_m admitting a plan, then a per-agent pass that removes
// unnecessary moves at that T. nullopt when no T <= h_m works.
std::optional<MovementPlan> plan_movements(const MotionInstance& inst, int h_m, const Interrupt& interrupt = {});

struct RelaxedPlan {
  MovementPlan plan;
  std::vector<AgentId> stripped;  // in stripping order
};

// Retries planning after dropping migrant goals one at a time, farthest
// from its border first, ties by agent id.
std::optional<RelaxedPlan> relax_and_retry(MotionInstance inst, int h_m, const Interrupt& interrupt = {});

// Constraint violations of `plan` against `inst`; empty when valid.
std::vector<std::string> check_plan(const MotionInstance& inst, const MovementPlan& plan);

}  // namespace dmapf
