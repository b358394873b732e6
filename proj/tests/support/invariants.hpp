// Structural checks on a partition and on protocol traces. Each returns a
// list of human-readable failures; empty means the property holds.
#pragma once

#include <deque>
#include <map>
#include <set>
#include <tuple>
#include <algorithm>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "dmapf/model.hpp"
#include "dmapf/partition.hpp"

namespace invariants {

using namespace dmapf;

inline std::vector<std::string> partition(const Problem& p, const Partition& part) {
  std::vector<std::string> bad;
  auto fail = [&](const std::string& s) { bad.push_back(s); };

  // Node partition: each node in exactly one area and one subproblem.
  std::map<NodeId, int> seen;
  for (const auto& a : part.areas) {
    for (const auto& n : a.in_nodes) ++seen[n.id];
  }
  for (const auto& [id, c] : p.nodes()) {
    if (seen[id] != 1) fail("node " + std::to_string(id) + " in " + std::to_string(seen[id]) + " areas");
    int tiles = 0;
    for (const auto& sp : part.subproblems) tiles += sp.bounds.contains(c) ? 1 : 0;
    if (tiles != 1) fail("node " + std::to_string(id) + " in " + std::to_string(tiles) + " tiles");
    auto it = part.area_of_node.find(id);
    if (it == part.area_of_node.end() || !part.area(it->second).contains(id)) {
      fail("area_of_node wrong for " + std::to_string(id));
    }
  }
  if (seen.size() != p.nodes().size()) fail("areas hold nodes outside the problem");

  // Id ordering: dense ids, owners non-decreasing in area id.
  for (std::size_t i = 0; i < part.areas.size(); ++i) {
    if (part.areas[i].id != static_cast<AreaId>(i + 1)) fail("area ids not dense");
    if (i > 0 && part.areas[i - 1].owner > part.areas[i].owner) fail("area ids not ordered by owner");
  }
  for (std::size_t i = 0; i < part.subproblems.size(); ++i) {
    const auto& sp = part.subproblems[i];
    if (sp.id != static_cast<SolverId>(i + 1)) fail("subproblem ids not dense");
    for (AreaId a : sp.areas) {
      if (part.owner(a) != sp.id) fail("area " + std::to_string(a) + " listed by a non-owner");
    }
  }

  for (const auto& a : part.areas) {
    std::set<NodeId> in;
    for (const auto& n : a.in_nodes) in.insert(n.id);
    const Bounds& b = part.subproblems.at(static_cast<std::size_t>(a.owner - 1)).bounds;
    for (const auto& n : a.in_nodes) {
      if (!b.contains(n.coord)) fail("area " + std::to_string(a.id) + " leaves its tile");
    }
    // Connectivity within the area.
    if (!in.empty()) {
      std::set<NodeId> reached{*in.begin()};
      std::deque<NodeId> q{*in.begin()};
      while (!q.empty()) {
        NodeId u = q.front();
        q.pop_front();
        for (NodeId v : p.neighbors(u)) {
          if (in.count(v) && reached.insert(v).second) q.push_back(v);
        }
      }
      if (reached.size() != in.size()) fail("area " + std::to_string(a.id) + " is disconnected");
    }
    // Maximality and out-node soundness.
    std::set<NodeId> expected_out;
    for (NodeId u : in) {
      for (NodeId v : p.neighbors(u)) {
        if (in.count(v)) continue;
        expected_out.insert(v);
        if (b.contains(p.coord(v))) fail("area " + std::to_string(a.id) + " is not maximal in its tile");
      }
    }
    std::set<NodeId> out;
    for (const auto& n : a.out_nodes) out.insert(n.id);
    if (out != expected_out) fail("area " + std::to_string(a.id) + " out-nodes differ from its outside neighbours");
    // Link symmetry.
    for (const auto& l : a.links) {
      if (part.area_of_node.at(l.outside.id) != l.other_area) fail("link points at the wrong area");
      const Area& o = part.area(l.other_area);
      bool mirrored = false;
      for (const auto& m : o.links) {
        mirrored = mirrored || (m.inside.id == l.outside.id && m.outside.id == l.inside.id && m.other_area == a.id);
      }
      if (!mirrored) fail("link " + std::to_string(l.inside.id) + "->" + std::to_string(l.outside.id) + " not mirrored");
      if (!part.links.linked(a.id, l.other_area)) fail("link missing from the link graph");
    }
  }
  for (const auto& [key, list] : part.links.pairs()) {
    if (key.first >= key.second) fail("link graph key not ordered");
    for (const auto& bp : list) {
      if (part.area_of_node.at(bp.low.id) != key.first || part.area_of_node.at(bp.high.id) != key.second ||
          !p.adjacent(bp.low.id, bp.high.id)) {
        fail("border pair inconsistent with its areas");
      }
    }
  }
  return bad;
}

// Protocol properties of one in-process trace (one JSON envelope per line).
inline std::vector<std::string> trace(const std::vector<std::string>& lines, int solver_count) {
  using nlohmann::json;
  std::vector<std::string> bad;
  auto fail = [&](const std::string& s) { bad.push_back(s); };
  std::map<int, std::set<std::pair<int, int>>> track_seen;  // round -> (from, to)
  std::map<std::tuple<int, int, int>, int> last_phase;       // (round, low, high) -> phase index
  std::map<std::tuple<int, int, int>, std::vector<json>> confirmed_entries;
  const std::map<std::string, int> phase_index{{"negotiate", 0}, {"reject", 1}, {"confirm", 2}};

  for (const auto& line : lines) {
    json e = json::parse(line);
    const std::string kind = e.at("kind");
    const int from = e.at("from"), to = e.at("to"), round = e.at("round");
    if (kind == "track") {
      track_seen[round].insert({from, to});
      continue;
    }
    if (kind != "migrate") continue;
    const json& body = e.at("body");
    const std::string type = body.at("type");
    const std::string phase = e.at("phase");
    // Requests go from the lower id to the higher id, responses back.
    if (type == "request" && from > to) fail("request from " + std::to_string(from) + " to lower " + std::to_string(to));
    if (type == "response" && from < to) fail("response from " + std::to_string(from) + " to higher " + std::to_string(to));
    const int low = body.at("pair").at(0), high = body.at("pair").at(1);
    const auto key = std::make_tuple(round, low, high);
    const int idx = phase_index.at(phase);
    auto it = last_phase.find(key);
    if (it != last_phase.end() && it->second > idx) {
      fail("phase " + phase + " after a later phase for pair " + std::to_string(low) + "-" + std::to_string(high));
    }
    last_phase[key] = std::max(idx, it == last_phase.end() ? idx : it->second);
    if (phase == "confirm") {
      for (const auto& m : body.at("migrants")) confirmed_entries[key].push_back(m);
    }
  }
  // Barrier completeness: every solver heard from every solver each round.
  for (const auto& [round, seen] : track_seen) {
    if (static_cast<int>(seen.size()) != solver_count * solver_count) {
      fail("track barrier of round " + std::to_string(round) + " incomplete");
    }
  }
  // Border uniqueness: per round, no to_border entered twice and no
  // from_border used twice across the confirmed migrants.
  std::map<int, std::map<long, std::set<int>>> to_users, from_users;
  for (const auto& [key, list] : confirmed_entries) {
    const int round = std::get<0>(key);
    for (const auto& m : list) {
      to_users[round][m.at("to").get<long>()].insert(m.at("agent").get<int>());
      from_users[round][m.at("node").get<long>()].insert(m.at("agent").get<int>());
    }
  }
  for (auto* users : {&to_users, &from_users}) {
    for (const auto& [round, nodes] : *users) {
      for (const auto& [node, agents] : nodes) {
        if (agents.size() > 1) {
          fail("round " + std::to_string(round) + " node " + std::to_string(node) + " used by " +
               std::to_string(agents.size()) + " migrants");
        }
      }
    }
  }
  return bad;
}

}  // namespace invariants
