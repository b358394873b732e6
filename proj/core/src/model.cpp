#include "dmapf/model.hpp"

#include <algorithm>
#include <set>
#include <sstream>

namespace dmapf {

std::optional<int> direction_code(Coord from, Coord to) {
  for (const auto& d : kDirections) {
    if (from.x + d.dx == to.x && from.y + d.dy == to.y) return d.code;
  }
  return std::nullopt;
}

ParseError::ParseError(const std::string& what, int line)
    : std::runtime_error(line > 0 ? "line " + std::to_string(line) + ": " + what : what),
      line_(line) {}

Problem::Problem(std::map<NodeId, Coord> nodes,
                 std::vector<std::pair<NodeId, NodeId>> edges,
                 std::map<AgentId, NodeId> starts,
                 std::map<AgentId, NodeId> goals)
    : nodes_(std::move(nodes)), starts_(std::move(starts)), goals_(std::move(goals)) {
  for (const auto& [id, c] : nodes_) {
    if (!by_coord_.emplace(c, id).second) {
      throw ModelError("nodes " + std::to_string(by_coord_.at(c)) + " and " +
                       std::to_string(id) + " share a coordinate");
    }
    adjacency_[id];
  }
  for (const auto& [a, b] : edges) {
    if (!has_node(a) || !has_node(b)) {
      throw ModelError("edge (" + std::to_string(a) + "," + std::to_string(b) +
                       ") references an undeclared node");
    }
    if (manhattan(nodes_.at(a), nodes_.at(b)) != 1) {
      throw ModelError("edge (" + std::to_string(a) + "," + std::to_string(b) +
                       ") does not join grid neighbours");
    }
    adjacency_[a].push_back(b);
    adjacency_[b].push_back(a);
  }
  for (auto& [id, list] : adjacency_) {
    std::sort(list.begin(), list.end());
    list.erase(std::unique(list.begin(), list.end()), list.end());
  }

  std::map<NodeId, AgentId> occupied;
  for (const auto& [agent, node] : starts_) {
    if (!has_node(node)) {
      throw ModelError("agent " + std::to_string(agent) + " starts on unknown node " +
                       std::to_string(node));
    }
    auto [it, inserted] = occupied.emplace(node, agent);
    if (!inserted) {
      throw ModelError("agents " + std::to_string(it->second) + " and " +
                       std::to_string(agent) + " share start node " + std::to_string(node));
    }
    agents_.push_back(agent);
  }
  std::map<NodeId, AgentId> targeted;
  for (const auto& [agent, node] : goals_) {
    if (!starts_.count(agent)) {
      throw ModelError("goal given for unknown agent " + std::to_string(agent));
    }
    if (!has_node(node)) {
      throw ModelError("agent " + std::to_string(agent) + " has goal on unknown node " +
                       std::to_string(node));
    }
    auto [it, inserted] = targeted.emplace(node, agent);
    if (!inserted) {
      throw ModelError("agents " + std::to_string(it->second) + " and " +
                       std::to_string(agent) + " share goal node " + std::to_string(node));
    }
  }
}

std::vector<std::pair<NodeId, NodeId>> Problem::grid_edges(
    const std::map<NodeId, Coord>& nodes) {
  std::map<Coord, NodeId> by_coord;
  for (const auto& [id, c] : nodes) by_coord.emplace(c, id);
  std::vector<std::pair<NodeId, NodeId>> edges;
  for (const auto& [id, c] : nodes) {
    // Right and down neighbours only; the constructor symmetrises.
    for (Coord n : {Coord{c.x + 1, c.y}, Coord{c.x, c.y + 1}}) {
      auto it = by_coord.find(n);
      if (it != by_coord.end()) edges.emplace_back(id, it->second);
    }
  }
  return edges;
}

Coord Problem::coord(NodeId n) const {
  auto it = nodes_.find(n);
  if (it == nodes_.end()) throw ModelError("unknown node " + std::to_string(n));
  return it->second;
}

std::optional<NodeId> Problem::node_at(Coord c) const {
  auto it = by_coord_.find(c);
  if (it == by_coord_.end()) return std::nullopt;
  return it->second;
}

const std::vector<NodeId>& Problem::neighbors(NodeId n) const {
  static const std::vector<NodeId> kEmpty;
  auto it = adjacency_.find(n);
  return it == adjacency_.end() ? kEmpty : it->second;
}

bool Problem::adjacent(NodeId a, NodeId b) const {
  const auto& list = neighbors(a);
  return std::binary_search(list.begin(), list.end(), b);
}

std::optional<NodeId> Problem::goal(AgentId a) const {
  auto it = goals_.find(a);
  if (it == goals_.end()) return std::nullopt;
  return it->second;
}

std::size_t Problem::edge_count() const {
  std::size_t n = 0;
  for (const auto& [id, list] : adjacency_) n += list.size();
  return n;
}

GlobalSolution make_solution(std::map<AgentId, std::vector<NodeId>> paths) {
  GlobalSolution s;
  s.paths = std::move(paths);
  auto m = metrics(s);
  s.makespan = m.makespan;
  s.moves = m.moves;
  return s;
}

std::string to_string(ViolationKind kind) {
  switch (kind) {
    case ViolationKind::BadEdge: return "bad-edge";
    case ViolationKind::VertexConflict: return "vertex-conflict";
    case ViolationKind::SwapConflict: return "swap-conflict";
    case ViolationKind::WrongStart: return "wrong-start";
    case ViolationKind::GoalMissed: return "goal-missed";
    case ViolationKind::LengthMismatch: return "length-mismatch";
  }
  return "unknown";
}

std::string Violation::describe() const {
  std::ostringstream os;
  os << "t=" << time << " " << to_string(kind);
  if (!agents.empty()) {
    os << " agents";
    for (auto a : agents) os << " " << a;
  }
  if (!nodes.empty()) {
    os << " nodes";
    for (auto n : nodes) os << " " << n;
  }
  return os.str();
}

bool ValidationReport::has(ViolationKind kind) const {
  return std::any_of(violations.begin(), violations.end(),
                     [kind](const Violation& v) { return v.kind == kind; });
}

ValidationReport validate(const Problem& p, const GlobalSolution& s) {
  ValidationReport report;
  auto add = [&](Violation v) { report.violations.push_back(std::move(v)); };
  const std::size_t expected = static_cast<std::size_t>(s.makespan) + 1;

  for (AgentId a : p.agents()) {
    auto it = s.paths.find(a);
    if (it == s.paths.end()) {
      add({0, ViolationKind::LengthMismatch, {a}, {}});
    } else if (it->second.size() != expected) {
      add({static_cast<int>(it->second.size()) - 1, ViolationKind::LengthMismatch, {a}, {}});
    }
  }
  for (const auto& [a, path] : s.paths) {
    if (!p.starts().count(a)) add({0, ViolationKind::LengthMismatch, {a}, {}});
  }

  // Per-agent checks.
  for (const auto& [a, path] : s.paths) {
    auto start = p.starts().find(a);
    if (start == p.starts().end() || path.empty()) continue;
    if (path.front() != start->second) {
      add({0, ViolationKind::WrongStart, {a}, {path.front(), start->second}});
    }
    for (std::size_t t = 0; t + 1 < path.size(); ++t) {
      NodeId u = path[t], v = path[t + 1];
      if (!p.has_node(v) || (u != v && !p.adjacent(u, v))) {
        add({static_cast<int>(t + 1), ViolationKind::BadEdge, {a}, {u, v}});
      }
    }
    if (auto g = p.goal(a); g && (path.size() != expected || path.back() != *g)) {
      add({static_cast<int>(path.size()) - 1, ViolationKind::GoalMissed, {a}, {*g}});
    }
  }

  // Pairwise checks over the common horizon.
  std::size_t horizon = expected;
  for (const auto& [a, path] : s.paths) horizon = std::min(horizon, path.size());
  for (std::size_t t = 0; t < horizon; ++t) {
    std::map<NodeId, std::vector<AgentId>> at;
    for (const auto& [a, path] : s.paths) at[path[t]].push_back(a);
    for (const auto& [n, who] : at) {
      if (who.size() > 1) add({static_cast<int>(t), ViolationKind::VertexConflict, who, {n}});
    }
    if (t + 1 >= horizon) continue;
    std::map<std::pair<NodeId, NodeId>, AgentId> moves;
    for (const auto& [a, path] : s.paths) {
      if (path[t] != path[t + 1]) moves.emplace(std::make_pair(path[t], path[t + 1]), a);
    }
    for (const auto& [edge, a] : moves) {
      if (edge.first > edge.second) continue;
      auto back = moves.find({edge.second, edge.first});
      if (back != moves.end()) {
        add({static_cast<int>(t + 1), ViolationKind::SwapConflict, {a, back->second},
             {edge.first, edge.second}});
      }
    }
  }

  report.ok = report.violations.empty();
  return report;
}

Metrics metrics(const GlobalSolution& s) {
  Metrics m;
  std::optional<std::size_t> length;
  for (const auto& [a, path] : s.paths) {
    if (path.empty()) throw ModelError("agent " + std::to_string(a) + " has an empty path");
    if (length && *length != path.size()) {
      throw ModelError("paths differ in length (agent " + std::to_string(a) + ")");
    }
    length = path.size();
    for (std::size_t t = 0; t + 1 < path.size(); ++t) {
      if (path[t] != path[t + 1]) ++m.moves;
    }
  }
  m.makespan = length ? static_cast<int>(*length) - 1 : 0;
  return m;
}

}  // namespace dmapf
