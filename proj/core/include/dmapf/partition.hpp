// Spatial decomposition: rectangular subproblems, connected areas inside each
// subproblem, inter-area links and corners.
#pragma once

#include <map>
#include <optional>
#include <set>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "dmapf/model.hpp"

namespace dmapf {

// Half-open tile bounds: x_min <= x < x_max, y_min <= y < y_max.
struct Bounds {
  int x_min = 0;
  int x_max = 0;
  int y_min = 0;
  int y_max = 0;

  bool contains(Coord c) const {
    return c.x >= x_min && c.x < x_max && c.y >= y_min && c.y < y_max;
  }
  bool on_border(Coord c) const {
    return c.x == x_min || c.x == x_max - 1 || c.y == y_min || c.y == y_max - 1;
  }
};

struct NodeRef {
  NodeId id = 0;
  Coord coord;
  auto operator<=>(const NodeRef&) const = default;
};

// Directed adjacency (from, to, direction code); `to` is always inside the area.
struct Adjacency {
  NodeId from = 0;
  NodeId to = 0;
  int direction = 0;
  auto operator<=>(const Adjacency&) const = default;
};

// A border node of this area next to a node of another area.
struct BorderLink {
  NodeRef inside;
  NodeRef outside;
  AreaId other_area = 0;
  auto operator<=>(const BorderLink&) const = default;
};

struct Area {
  AreaId id = 0;
  SolverId owner = 0;
  std::vector<NodeRef> in_nodes;   // sorted by id
  std::vector<NodeRef> out_nodes;  // sorted by id
  std::vector<Adjacency> adjacency;
  std::vector<BorderLink> links;
  // Border node -> the foreign areas it touches; only nodes touching >= 2.
  std::map<NodeId, std::vector<AreaId>> corners;

  bool contains(NodeId n) const;
  bool is_out_node(NodeId n) const;
  bool is_corner(NodeId n) const { return corners.count(n) != 0; }
  std::size_t size() const { return in_nodes.size(); }
};

struct Subproblem {
  SolverId id = 0;
  Bounds bounds;
  std::vector<NodeRef> nodes;
  std::vector<std::pair<AgentId, NodeId>> robots;
  std::vector<NodeId> borders;
  std::vector<AreaId> areas;
};

// One linked pair of border nodes between two areas.
struct BorderPair {
  NodeRef low;   // node in the lower-id area
  NodeRef high;  // node in the higher-id area
  auto operator<=>(const BorderPair&) const = default;
};

using AreaPair = std::pair<AreaId, AreaId>;  // (low, high)

inline AreaPair make_pair_key(AreaId a, AreaId b) {
  return a < b ? AreaPair{a, b} : AreaPair{b, a};
}

// Area-level connectivity: the abstract map shared by every solver.
class LinkGraph {
 public:
  LinkGraph() = default;
  explicit LinkGraph(int area_count) : area_count_(area_count) {}

  void add(AreaId a, NodeRef in_a, AreaId b, NodeRef in_b);
  void finalize();

  int area_count() const { return area_count_; }
  bool linked(AreaId a, AreaId b) const;
  // Border pairs ordered by the lower-area node id.
  const std::vector<BorderPair>& border_pairs(AreaId a, AreaId b) const;
  int n_l(AreaId a, AreaId b) const { return static_cast<int>(border_pairs(a, b).size()); }
  const std::vector<AreaId>& neighbors(AreaId a) const;
  const std::map<AreaPair, std::vector<BorderPair>>& pairs() const { return pairs_; }

 private:
  int area_count_ = 0;
  std::map<AreaPair, std::vector<BorderPair>> pairs_;
  std::map<AreaId, std::vector<AreaId>> neighbors_;
};

struct Partition {
  std::vector<Subproblem> subproblems;  // index = solver id - 1
  std::vector<Area> areas;              // index = area id - 1
  LinkGraph links;
  std::unordered_map<NodeId, AreaId> area_of_node;

  const Area& area(AreaId id) const { return areas.at(static_cast<std::size_t>(id - 1)); }
  SolverId owner(AreaId id) const { return area(id).owner; }
  int solver_count() const { return static_cast<int>(subproblems.size()); }
};

// Tiles the problem into dx-by-dy subproblems (row-major, empty tiles
// dropped), splits each into connected areas and links the areas.
// Throws std::invalid_argument for dx or dy below 2 or an empty problem.
Partition divide(const Problem& p, int dx, int dy);

// For each area, border nodes linked to at least two foreign areas.
std::map<AreaId, std::map<NodeId, std::vector<AreaId>>> find_corners(
    const std::vector<Area>& areas);

struct AgentPlacement {
  AgentId agent = 0;
  NodeId node = 0;
  AreaId area = 0;
  std::optional<NodeId> goal;
  std::optional<AreaId> goal_area;
};

// Resident area and goal area for every agent, ordered by agent id.
std::vector<AgentPlacement> assign_agents(const Partition& part, const Problem& p);

// Debug dump consumed by `dmapf render`.
std::string partition_to_json(const Partition& part);

}  // namespace dmapf
