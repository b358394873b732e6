#include "dmapf/partition.hpp"

#include <algorithm>
#include <deque>
#include <stdexcept>

#include "json.hpp"

namespace dmapf {

bool Area::contains(NodeId n) const {
  auto it = std::lower_bound(in_nodes.begin(), in_nodes.end(), n,
                             [](const NodeRef& r, NodeId id) { return r.id < id; });
  return it != in_nodes.end() && it->id == n;
}

bool Area::is_out_node(NodeId n) const {
  auto it = std::lower_bound(out_nodes.begin(), out_nodes.end(), n,
                             [](const NodeRef& r, NodeId id) { return r.id < id; });
  return it != out_nodes.end() && it->id == n;
}

void LinkGraph::add(AreaId a, NodeRef in_a, AreaId b, NodeRef in_b) {
  if (a == b) return;
  if (a > b) {
    std::swap(a, b);
    std::swap(in_a, in_b);
  }
  pairs_[{a, b}].push_back({in_a, in_b});
}

void LinkGraph::finalize() {
  neighbors_.clear();
  for (auto& [key, list] : pairs_) {
    std::sort(list.begin(), list.end());
    list.erase(std::unique(list.begin(), list.end()), list.end());
    neighbors_[key.first].push_back(key.second);
    neighbors_[key.second].push_back(key.first);
  }
  for (auto& [a, list] : neighbors_) std::sort(list.begin(), list.end());
}

bool LinkGraph::linked(AreaId a, AreaId b) const { return pairs_.count(make_pair_key(a, b)) != 0; }

const std::vector<BorderPair>& LinkGraph::border_pairs(AreaId a, AreaId b) const {
  static const std::vector<BorderPair> kEmpty;
  auto it = pairs_.find(make_pair_key(a, b));
  return it == pairs_.end() ? kEmpty : it->second;
}

const std::vector<AreaId>& LinkGraph::neighbors(AreaId a) const {
  static const std::vector<AreaId> kEmpty;
  auto it = neighbors_.find(a);
  return it == neighbors_.end() ? kEmpty : it->second;
}

Partition divide(const Problem& p, int dx, int dy) {
  if (dx < 2 || dy < 2) throw std::invalid_argument("tile size must be at least 2x2");
  if (p.nodes().empty()) throw std::invalid_argument("problem has no nodes");

  int x_min = std::numeric_limits<int>::max(), y_min = x_min;
  int x_max = std::numeric_limits<int>::min(), y_max = x_max;
  for (const auto& [id, c] : p.nodes()) {
    x_min = std::min(x_min, c.x);
    y_min = std::min(y_min, c.y);
    x_max = std::max(x_max, c.x);
    y_max = std::max(y_max, c.y);
  }
  const int cols = (x_max - x_min + 1 + dx - 1) / dx;
  const int rows = (y_max - y_min + 1 + dy - 1) / dy;

  // Bucket nodes by tile (row-major tile index).
  std::vector<std::vector<NodeRef>> buckets(static_cast<std::size_t>(cols * rows));
  for (const auto& [id, c] : p.nodes()) {
    int tx = (c.x - x_min) / dx, ty = (c.y - y_min) / dy;
    buckets[static_cast<std::size_t>(ty * cols + tx)].push_back({id, c});
  }

  Partition part;
  std::unordered_map<NodeId, SolverId> solver_of_node;
  for (int ty = 0; ty < rows; ++ty) {
    for (int tx = 0; tx < cols; ++tx) {
      auto& nodes = buckets[static_cast<std::size_t>(ty * cols + tx)];
      if (nodes.empty()) continue;
      Subproblem sp;
      sp.id = static_cast<SolverId>(part.subproblems.size()) + 1;
      sp.bounds = {x_min + tx * dx, x_min + (tx + 1) * dx, y_min + ty * dy, y_min + (ty + 1) * dy};
      sp.nodes = std::move(nodes);  // already id-ordered (map iteration)
      for (const auto& n : sp.nodes) {
        solver_of_node[n.id] = sp.id;
        if (sp.bounds.on_border(n.coord)) sp.borders.push_back(n.id);
      }
      part.subproblems.push_back(std::move(sp));
    }
  }

  // Areas: connected components inside each tile, discovered in node-id order.
  for (auto& sp : part.subproblems) {
    for (const auto& start : sp.nodes) {
      if (part.area_of_node.count(start.id)) continue;
      Area area;
      area.id = static_cast<AreaId>(part.areas.size()) + 1;
      area.owner = sp.id;
      std::deque<NodeId> queue{start.id};
      part.area_of_node[start.id] = area.id;
      while (!queue.empty()) {
        NodeId n = queue.front();
        queue.pop_front();
        area.in_nodes.push_back({n, p.coord(n)});
        for (NodeId m : p.neighbors(n)) {
          if (solver_of_node.at(m) != sp.id || part.area_of_node.count(m)) continue;
          part.area_of_node[m] = area.id;
          queue.push_back(m);
        }
      }
      std::sort(area.in_nodes.begin(), area.in_nodes.end());
      sp.areas.push_back(area.id);
      part.areas.push_back(std::move(area));
    }
  }

  for (const auto& [agent, node] : p.starts()) {
    part.subproblems[static_cast<std::size_t>(solver_of_node.at(node) - 1)].robots.emplace_back(agent, node);
  }

  // Adjacency inside areas, links and out-nodes across areas.
  part.links = LinkGraph(static_cast<int>(part.areas.size()));
  for (auto& area : part.areas) {
    std::set<NodeRef> outs;
    for (const auto& in : area.in_nodes) {
      for (NodeId m : p.neighbors(in.id)) {
        Coord mc = p.coord(m);
        AreaId other = part.area_of_node.at(m);
        if (other == area.id) {
          area.adjacency.push_back({in.id, m, *direction_code(in.coord, mc)});
        } else {
          outs.insert({m, mc});
          area.adjacency.push_back({m, in.id, *direction_code(mc, in.coord)});
          area.links.push_back({in, {m, mc}, other});
          part.links.add(area.id, in, other, {m, mc});
        }
      }
    }
    area.out_nodes.assign(outs.begin(), outs.end());
    std::sort(area.adjacency.begin(), area.adjacency.end());
    std::sort(area.links.begin(), area.links.end());
  }
  part.links.finalize();

  auto corners = find_corners(part.areas);
  for (auto& area : part.areas) area.corners = std::move(corners[area.id]);
  return part;
}

std::map<AreaId, std::map<NodeId, std::vector<AreaId>>> find_corners(const std::vector<Area>& areas) {
  std::map<AreaId, std::map<NodeId, std::vector<AreaId>>> out;
  for (const auto& area : areas) {
    std::map<NodeId, std::set<AreaId>> touching;
    for (const auto& link : area.links) touching[link.inside.id].insert(link.other_area);
    auto& corners = out[area.id];
    for (const auto& [node, others] : touching) {
      if (others.size() >= 2) corners[node].assign(others.begin(), others.end());
    }
  }
  return out;
}

std::vector<AgentPlacement> assign_agents(const Partition& part, const Problem& p) {
  std::vector<AgentPlacement> out;
  for (AgentId a : p.agents()) {
    AgentPlacement pl;
    pl.agent = a;
    pl.node = p.starts().at(a);
    auto it = part.area_of_node.find(pl.node);
    if (it == part.area_of_node.end()) {
      throw ModelError("agent " + std::to_string(a) + " starts outside every subproblem");
    }
    pl.area = it->second;
    if (auto g = p.goal(a)) {
      pl.goal = *g;
      pl.goal_area = part.area_of_node.at(*g);
    }
    out.push_back(pl);
  }
  return out;
}

std::string partition_to_json(const Partition& part) {
  using nlohmann::json;
  auto node_json = [](const NodeRef& n) { return json{{"id", n.id}, {"x", n.coord.x}, {"y", n.coord.y}}; };
  json subs = json::array();
  for (const auto& sp : part.subproblems) {
    json robots = json::array();
    for (const auto& [a, n] : sp.robots) robots.push_back({{"agent", a}, {"node", n}});
    subs.push_back({{"id", sp.id},
                    {"bounds", {sp.bounds.x_min, sp.bounds.x_max, sp.bounds.y_min, sp.bounds.y_max}},
                    {"borders", sp.borders},
                    {"robots", robots},
                    {"areas", sp.areas}});
  }
  json areas = json::array();
  for (const auto& a : part.areas) {
    json in = json::array(), out = json::array(), links = json::array(), corners = json::array();
    for (const auto& n : a.in_nodes) in.push_back(node_json(n));
    for (const auto& n : a.out_nodes) out.push_back(node_json(n));
    for (const auto& l : a.links) {
      links.push_back({{"inside", l.inside.id}, {"outside", l.outside.id}, {"area", l.other_area}});
    }
    for (const auto& [n, others] : a.corners) corners.push_back({{"node", n}, {"areas", others}});
    areas.push_back({{"id", a.id}, {"owner", a.owner}, {"in", in}, {"out", out},
                     {"links", links}, {"corners", corners}});
  }
  json pairs = json::array();
  for (const auto& [key, list] : part.links.pairs()) {
    json borders = json::array();
    for (const auto& bp : list) borders.push_back({bp.low.id, bp.high.id});
    pairs.push_back({{"areas", {key.first, key.second}}, {"borders", borders}});
  }
  json j{{"subproblems", subs}, {"areas", areas}, {"links", pairs}};
  return j.dump(1) + "\n";
}

}  // namespace dmapf
