// Core MAPF data model: grid graph, agents, solutions and their validation.
#pragma once

#include <array>
#include <compare>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace dmapf {

using NodeId = int;
using AgentId = int;
using AreaId = int;
using SolverId = int;

struct Coord {
  int x = 0;
  int y = 0;
  auto operator<=>(const Coord&) const = default;
};

inline int manhattan(Coord a, Coord b) {
  return (a.x > b.x ? a.x - b.x : b.x - a.x) + (a.y > b.y ? a.y - b.y : b.y - a.y);
}

// The four unit moves, indexed by direction code.
struct Direction {
  int code;
  int dx;
  int dy;
};

inline constexpr std::array<Direction, 4> kDirections{{
    {0, -1, 0},
    {1, 1, 0},
    {2, 0, -1},
    {3, 0, 1},
}};

// Direction code of the unit move from `from` to `to`, if they are adjacent.
std::optional<int> direction_code(Coord from, Coord to);

// Malformed input text. `line` is 1-based, 0 when unknown.
class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& what, int line);
  int line() const { return line_; }

 private:
  int line_;
};

// Input that parses but violates a model invariant (duplicate starts, ...).
class ModelError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// The quadruple (G, A, S, T). Immutable once built; construction validates
// every invariant and throws ModelError on violation.
class Problem {
 public:
  Problem() = default;
  Problem(std::map<NodeId, Coord> nodes,
          std::vector<std::pair<NodeId, NodeId>> edges,
          std::map<AgentId, NodeId> starts,
          std::map<AgentId, NodeId> goals);

  // Builds the 4-neighbourhood edge set over the given nodes.
  static std::vector<std::pair<NodeId, NodeId>> grid_edges(
      const std::map<NodeId, Coord>& nodes);

  const std::map<NodeId, Coord>& nodes() const { return nodes_; }
  const std::vector<AgentId>& agents() const { return agents_; }
  const std::map<AgentId, NodeId>& starts() const { return starts_; }
  const std::map<AgentId, NodeId>& goals() const { return goals_; }

  bool has_node(NodeId n) const { return nodes_.count(n) != 0; }
  Coord coord(NodeId n) const;
  std::optional<NodeId> node_at(Coord c) const;
  // Sorted neighbour list; waiting is implicit and not listed.
  const std::vector<NodeId>& neighbors(NodeId n) const;
  bool adjacent(NodeId a, NodeId b) const;
  std::optional<NodeId> goal(AgentId a) const;
  // Number of stored (directed) edges.
  std::size_t edge_count() const;

 private:
  std::map<NodeId, Coord> nodes_;
  std::map<Coord, NodeId> by_coord_;
  std::map<NodeId, std::vector<NodeId>> adjacency_;
  std::vector<AgentId> agents_;
  std::map<AgentId, NodeId> starts_;
  std::map<AgentId, NodeId> goals_;
};

struct GlobalSolution {
  std::map<AgentId, std::vector<NodeId>> paths;
  int makespan = 0;
  int moves = 0;
};

// Wraps paths into a solution, computing makespan and moves.
GlobalSolution make_solution(std::map<AgentId, std::vector<NodeId>> paths);

enum class ViolationKind {
  BadEdge,
  VertexConflict,
  SwapConflict,
  WrongStart,
  GoalMissed,
  LengthMismatch,
};

std::string to_string(ViolationKind kind);

struct Violation {
  int time = 0;
  ViolationKind kind = ViolationKind::BadEdge;
  std::vector<AgentId> agents;
  std::vector<NodeId> nodes;

  std::string describe() const;
};

struct ValidationReport {
  bool ok = true;
  std::vector<Violation> violations;

  bool has(ViolationKind kind) const;
};

ValidationReport validate(const Problem& p, const GlobalSolution& s);

struct Metrics {
  int makespan = 0;
  int moves = 0;
};

// Throws ModelError when paths differ in length.
Metrics metrics(const GlobalSolution& s);

}  // namespace dmapf
