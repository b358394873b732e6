#include <algorithm>
#include <climits>
#include <set>
#include <sstream>

#include "cli.hpp"
#include "json.hpp"

namespace dmapf::cli {

namespace {

constexpr int kCell = 20;

// Distinct, stable fill per area id.
std::string area_color(long id) {
  const int hue = static_cast<int>((id * 137) % 360);
  std::ostringstream os;
  os << "hsl(" << hue << ",55%,75%)";
  return os.str();
}

struct Extent {
  int x_min = INT_MAX, y_min = INT_MAX, x_max = INT_MIN, y_max = INT_MIN;
  void add(int x, int y) {
    x_min = std::min(x_min, x);
    y_min = std::min(y_min, y);
    x_max = std::max(x_max, x);
    y_max = std::max(y_max, y);
  }
  int width() const { return x_max - x_min + 1; }
  int height() const { return y_max - y_min + 1; }
};

std::string svg_open(const Extent& e) {
  std::ostringstream os;
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << e.width() * kCell << "\" height=\""
     << e.height() * kCell << "\">\n"
     << "<rect width=\"100%\" height=\"100%\" fill=\"#333\"/>\n";
  return os.str();
}

}  // namespace

std::string render_partition_svg(const std::string& dump_json) {
  auto j = nlohmann::json::parse(dump_json);
  Extent e;
  for (const auto& a : j.at("areas")) {
    for (const auto& n : a.at("in")) e.add(n.at("x").get<int>(), n.at("y").get<int>());
  }
  if (e.x_min == INT_MAX) e.add(0, 0);
  std::ostringstream os;
  os << svg_open(e);
  for (const auto& a : j.at("areas")) {
    const long id = a.at("id").get<long>();
    std::set<long> out;
    for (const auto& n : a.at("out")) out.insert(n.at("id").get<long>());
    std::set<long> corners;
    for (const auto& c : a.at("corners")) corners.insert(c.at("node").get<long>());
    for (const auto& n : a.at("in")) {
      const int x = (n.at("x").get<int>() - e.x_min) * kCell, y = (n.at("y").get<int>() - e.y_min) * kCell;
      const long node = n.at("id").get<long>();
      os << "<rect x=\"" << x << "\" y=\"" << y << "\" width=\"" << kCell << "\" height=\"" << kCell << "\" fill=\""
         << area_color(id) << "\"";
      if (out.count(node)) os << " stroke=\"#000\" stroke-width=\"2\"";
      os << "><title>area " << id << " node " << node << "</title></rect>\n";
      if (corners.count(node)) {
        os << "<circle cx=\"" << x + kCell / 2 << "\" cy=\"" << y + kCell / 2 << "\" r=\"" << kCell / 4
           << "\" fill=\"#c00\"/>\n";
      }
    }
  }
  for (const auto& sp : j.at("subproblems")) {
    const auto& b = sp.at("bounds");
    const int x0 = b[0].get<int>() - e.x_min, x1 = b[1].get<int>() - e.x_min;
    const int y0 = b[2].get<int>() - e.y_min, y1 = b[3].get<int>() - e.y_min;
    os << "<rect x=\"" << x0 * kCell << "\" y=\"" << y0 * kCell << "\" width=\"" << (x1 - x0) * kCell
       << "\" height=\"" << (y1 - y0) * kCell << "\" fill=\"none\" stroke=\"#fff\" stroke-width=\"3\"/>\n";
  }
  os << "</svg>\n";
  return os.str();
}

std::vector<std::string> render_ascii_frames(const Problem& p, const GlobalSolution& s) {
  Extent e;
  for (const auto& [id, c] : p.nodes()) e.add(c.x, c.y);
  std::vector<std::string> frames;
  for (int t = 0; t <= s.makespan; ++t) {
    std::vector<std::string> rows(static_cast<std::size_t>(e.height()),
                                  std::string(static_cast<std::size_t>(e.width()), '#'));
    auto at = [&](Coord c) -> char& {
      return rows[static_cast<std::size_t>(c.y - e.y_min)][static_cast<std::size_t>(c.x - e.x_min)];
    };
    for (const auto& [id, c] : p.nodes()) at(c) = '.';
    for (const auto& [a, g] : p.goals()) at(p.coord(g)) = '+';
    for (const auto& [a, path] : s.paths) {
      NodeId n = path[static_cast<std::size_t>(std::min<int>(t, static_cast<int>(path.size()) - 1))];
      // Agents 1..26 print as letters, the rest as '@'.
      at(p.coord(n)) = a <= 26 ? static_cast<char>('A' + a - 1) : '@';
    }
    std::string frame;
    for (const auto& r : rows) frame += r + "\n";
    frames.push_back(std::move(frame));
  }
  return frames;
}

std::vector<std::string> render_svg_frames(const Problem& p, const GlobalSolution& s) {
  Extent e;
  for (const auto& [id, c] : p.nodes()) e.add(c.x, c.y);
  std::vector<std::string> frames;
  for (int t = 0; t <= s.makespan; ++t) {
    std::ostringstream os;
    os << svg_open(e);
    for (const auto& [id, c] : p.nodes()) {
      os << "<rect x=\"" << (c.x - e.x_min) * kCell << "\" y=\"" << (c.y - e.y_min) * kCell << "\" width=\""
         << kCell << "\" height=\"" << kCell << "\" fill=\"#eee\" stroke=\"#ccc\"/>\n";
    }
    for (const auto& [a, path] : s.paths) {
      NodeId n = path[static_cast<std::size_t>(std::min<int>(t, static_cast<int>(path.size()) - 1))];
      Coord c = p.coord(n);
      os << "<circle cx=\"" << (c.x - e.x_min) * kCell + kCell / 2 << "\" cy=\"" << (c.y - e.y_min) * kCell + kCell / 2
         << "\" r=\"" << kCell * 2 / 5 << "\" fill=\"" << area_color(a) << "\" stroke=\"#000\"><title>agent " << a
         << "</title></circle>\n";
    }
    os << "<text x=\"4\" y=\"14\" fill=\"#f00\" font-size=\"12\">t=" << t << "</text>\n</svg>\n";
    frames.push_back(os.str());
  }
  return frames;
}

}  // namespace dmapf::cli
