#include "dmapf/instance_io.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"

namespace dmapf {
namespace {

// Recursive-descent reader for the ASPRILO init/2 fact shape.
class FactReader {
 public:
  explicit FactReader(std::string_view text) : text_(text) {}

  struct Fact {
    std::string type;
    int id = 0;
    std::string key;
    std::vector<int> args;  // one value or a pair
    int line = 0;
  };

  std::optional<Fact> next() {
    skip_space();
    if (pos_ >= text_.size()) return std::nullopt;
    Fact f;
    f.line = line_;
    expect_word("init");
    expect('(');
    expect_word("object");
    expect('(');
    f.type = word();
    expect(',');
    f.id = integer();
    expect(')');
    expect(',');
    expect_word("value");
    expect('(');
    f.key = word();
    expect(',');
    skip_space();
    if (peek() == '(') {
      expect('(');
      f.args.push_back(integer());
      expect(',');
      f.args.push_back(integer());
      expect(')');
    } else {
      f.args.push_back(integer());
    }
    expect(')');
    expect(')');
    expect('.');
    return f;
  }

 private:
  char peek() const { return pos_ < text_.size() ? text_[pos_] : '\0'; }

  void skip_space() {
    while (pos_ < text_.size()) {
      char c = text_[pos_];
      if (c == '%') {
        while (pos_ < text_.size() && text_[pos_] != '\n') ++pos_;
      } else if (std::isspace(static_cast<unsigned char>(c))) {
        if (c == '\n') ++line_;
        ++pos_;
      } else {
        break;
      }
    }
  }

  [[noreturn]] void fail(const std::string& what) const { throw ParseError(what, line_); }

  void expect(char c) {
    skip_space();
    if (peek() != c) fail(std::string("expected '") + c + "'");
    ++pos_;
  }

  std::string word() {
    skip_space();
    std::size_t start = pos_;
    while (pos_ < text_.size() &&
           (std::isalnum(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == '_')) {
      ++pos_;
    }
    if (start == pos_) fail("expected identifier");
    return std::string(text_.substr(start, pos_ - start));
  }

  void expect_word(std::string_view w) {
    auto got = word();
    if (got != w) fail("expected '" + std::string(w) + "', got '" + got + "'");
  }

  int integer() {
    skip_space();
    std::size_t start = pos_;
    if (peek() == '-') ++pos_;
    while (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_]))) ++pos_;
    if (start == pos_ || (pos_ == start + 1 && text_[start] == '-')) fail("expected integer");
    return std::stoi(std::string(text_.substr(start, pos_ - start)));
  }

  std::string_view text_;
  std::size_t pos_ = 0;
  int line_ = 1;
};

std::vector<std::string_view> split_lines(std::string_view text) {
  std::vector<std::string_view> lines;
  std::size_t start = 0;
  while (start <= text.size()) {
    auto end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    auto line = text.substr(start, end - start);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    lines.push_back(line);
    if (end == text.size()) break;
    start = end + 1;
  }
  while (!lines.empty() && lines.back().empty()) lines.pop_back();
  return lines;
}

bool blank(std::string_view s) {
  return std::all_of(s.begin(), s.end(), [](char c) { return std::isspace(static_cast<unsigned char>(c)); });
}

}  // namespace

Problem parse_asprilo(std::string_view text) {
  struct Located {
    std::vector<int> args;
    int line;
  };
  std::map<NodeId, Coord> nodes;
  std::map<AgentId, Located> robots;
  std::map<int, Located> orders;
  std::map<int, Located> products;
  std::map<int, Located> shelves;

  auto put = [](std::map<int, Located>& into, const FactReader::Fact& f, const char* what) {
    if (!into.emplace(f.id, Located{f.args, f.line}).second) {
      if (std::string(what) == "order") {
        throw ModelError("robot " + std::to_string(f.id) + " has more than one order (line " +
                         std::to_string(f.line) + ")");
      }
      throw ModelError(std::string("duplicate ") + what + " " + std::to_string(f.id) +
                       " (line " + std::to_string(f.line) + ")");
    }
  };

  FactReader reader(text);
  while (auto f = reader.next()) {
    auto need_pair = [&] {
      if (f->args.size() != 2) throw ParseError("expected a pair value for " + f->type, f->line);
    };
    if (f->type == "node" && f->key == "at") {
      need_pair();
      if (!nodes.emplace(f->id, Coord{f->args[0], f->args[1]}).second) {
        throw ModelError("duplicate node " + std::to_string(f->id));
      }
    } else if (f->type == "robot" && f->key == "at") {
      need_pair();
      put(robots, *f, "robot");
    } else if (f->type == "order" && f->key == "line") {
      need_pair();
      put(orders, *f, "order");
    } else if (f->type == "product" && f->key == "on") {
      need_pair();
      put(products, *f, "product");
    } else if (f->type == "shelf" && f->key == "at") {
      need_pair();
      put(shelves, *f, "shelf");
    } else {
      throw ParseError("unsupported fact object(" + f->type + ")/value(" + f->key +
                           "); only node/at, robot/at, order/line, product/on and shelf/at are read",
                       f->line);
    }
  }

  std::map<Coord, NodeId> by_coord;
  for (const auto& [id, c] : nodes) by_coord.emplace(c, id);
  auto node_at = [&](Coord c, int line, const std::string& who) {
    auto it = by_coord.find(c);
    if (it == by_coord.end()) {
      throw ModelError(who + " at (" + std::to_string(c.x) + "," + std::to_string(c.y) +
                       ") is not on a node (line " + std::to_string(line) + ")");
    }
    return it->second;
  };

  std::map<AgentId, NodeId> starts;
  for (const auto& [r, loc] : robots) {
    starts[r] = node_at({loc.args[0], loc.args[1]}, loc.line, "robot " + std::to_string(r));
  }
  std::map<AgentId, NodeId> goals;
  for (const auto& [r, loc] : orders) {
    if (!robots.count(r)) {
      throw ModelError("order " + std::to_string(r) + " has no robot (line " +
                       std::to_string(loc.line) + ")");
    }
    int product = loc.args[0];
    auto p = products.find(product);
    if (p == products.end()) {
      throw ModelError("order " + std::to_string(r) + " references missing product " +
                       std::to_string(product));
    }
    int shelf = p->second.args[0];
    auto s = shelves.find(shelf);
    if (s == shelves.end()) {
      throw ModelError("product " + std::to_string(product) + " references missing shelf " +
                       std::to_string(shelf));
    }
    goals[r] = node_at({s->second.args[0], s->second.args[1]}, s->second.line,
                       "shelf " + std::to_string(shelf));
  }
  auto edges = Problem::grid_edges(nodes);
  return Problem(std::move(nodes), std::move(edges), std::move(starts), std::move(goals));
}

Problem parse_grid(std::string_view text) {
  auto lines = split_lines(text);
  struct Header {
    AgentId id;
    Coord start;
    std::optional<Coord> goal;
    int line;
  };
  std::vector<Header> headers;
  std::size_t i = 0;
  for (; i < lines.size(); ++i) {
    auto line = lines[i];
    if (blank(line)) continue;
    std::istringstream is{std::string(line)};
    std::string tag;
    is >> tag;
    if (tag != "agent") break;
    std::vector<long> v;
    long x;
    while (is >> x) v.push_back(x);
    if (!is.eof()) throw ParseError("non-numeric field in agent line", static_cast<int>(i + 1));
    if (v.size() != 3 && v.size() != 5) {
      throw ParseError("agent line needs <id> <sx> <sy> [<gx> <gy>]", static_cast<int>(i + 1));
    }
    Header h{static_cast<AgentId>(v[0]), {static_cast<int>(v[1]), static_cast<int>(v[2])},
             std::nullopt, static_cast<int>(i + 1)};
    if (v.size() == 5) h.goal = Coord{static_cast<int>(v[3]), static_cast<int>(v[4])};
    headers.push_back(h);
  }

  std::map<NodeId, Coord> nodes;
  std::size_t width = 0;
  int y = 0;
  const std::size_t first_row = i;
  for (; i < lines.size(); ++i, ++y) {
    auto row = lines[i];
    if (i == first_row) width = row.size();
    if (row.size() != width || width == 0) {
      throw ParseError("ragged grid row (expected width " + std::to_string(width) + ")",
                       static_cast<int>(i + 1));
    }
    for (std::size_t x = 0; x < row.size(); ++x) {
      char c = row[x];
      if (c == '.') {
        NodeId id = y * static_cast<int>(width) + static_cast<int>(x) + 1;
        nodes.emplace(id, Coord{static_cast<int>(x), y});
      } else if (c != '#') {
        throw ParseError(std::string("unexpected grid character '") + c + "'",
                         static_cast<int>(i + 1));
      }
    }
  }
  if (nodes.empty() && first_row == lines.size()) throw ParseError("missing grid", 0);

  std::map<Coord, NodeId> by_coord;
  for (const auto& [id, c] : nodes) by_coord.emplace(c, id);
  std::map<AgentId, NodeId> starts, goals;
  for (const auto& h : headers) {
    auto cell = [&](Coord c, const char* what) {
      auto it = by_coord.find(c);
      if (it == by_coord.end()) {
        throw ModelError("agent " + std::to_string(h.id) + " " + what + " (" +
                         std::to_string(c.x) + "," + std::to_string(c.y) +
                         ") is not a free cell (line " + std::to_string(h.line) + ")");
      }
      return it->second;
    };
    if (!starts.emplace(h.id, cell(h.start, "start")).second) {
      throw ModelError("agent " + std::to_string(h.id) + " declared twice");
    }
    if (h.goal) goals.emplace(h.id, cell(*h.goal, "goal"));
  }
  auto edges = Problem::grid_edges(nodes);
  return Problem(std::move(nodes), std::move(edges), std::move(starts), std::move(goals));
}

std::string render_grid(const Problem& p) {
  std::ostringstream os;
  for (AgentId a : p.agents()) {
    Coord s = p.coord(p.starts().at(a));
    os << "agent " << a << " " << s.x << " " << s.y;
    if (auto g = p.goal(a)) {
      Coord gc = p.coord(*g);
      os << " " << gc.x << " " << gc.y;
    }
    os << "\n";
  }
  os << "\n";
  int w = 0, h = 0;
  for (const auto& [id, c] : p.nodes()) {
    if (c.x < 0 || c.y < 0) throw ModelError("render_grid needs non-negative coordinates");
    w = std::max(w, c.x + 1);
    h = std::max(h, c.y + 1);
  }
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) os << (p.node_at({x, y}) ? '.' : '#');
    os << "\n";
  }
  return os.str();
}

Problem parse_instance(std::string_view text) {
  if (text.find("init(") != std::string_view::npos) return parse_asprilo(text);
  return parse_grid(text);
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

void write_file(const std::string& path, std::string_view content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << content;
}

Problem load_problem(const std::string& path) { return parse_instance(read_file(path)); }

std::string solution_to_text(const Problem& p, const GlobalSolution& s) {
  std::ostringstream os;
  for (const auto& [a, path] : s.paths) {
    os << "agent " << a << ":";
    for (NodeId n : path) {
      Coord c = p.coord(n);
      os << " (" << c.x << "," << c.y << ")";
    }
    os << "\n";
  }
  return os.str();
}

std::string solution_to_json(const Problem& p, const GlobalSolution& s) {
  nlohmann::json paths = nlohmann::json::array();
  for (const auto& [a, path] : s.paths) {
    nlohmann::json cells = nlohmann::json::array();
    for (NodeId n : path) {
      Coord c = p.coord(n);
      cells.push_back({c.x, c.y});
    }
    paths.push_back({{"agent", a}, {"path", std::move(cells)}});
  }
  nlohmann::json j{{"makespan", s.makespan}, {"moves", s.moves}, {"paths", std::move(paths)}};
  return j.dump() + "\n";
}

GlobalSolution parse_solution(const Problem& p, std::string_view text) {
  std::map<AgentId, std::vector<NodeId>> paths;
  auto node_of = [&](Coord c, int line) {
    auto n = p.node_at(c);
    // Off-map cells are kept as an invalid node so validation reports them.
    if (!n) return -1 - line;
    return *n;
  };
  auto first = text.find_first_not_of(" \t\r\n");
  if (first != std::string_view::npos && text[first] == '{') {
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(text);
      for (const auto& entry : j.at("paths")) {
        std::vector<NodeId> path;
        for (const auto& cell : entry.at("path")) {
          path.push_back(node_of({cell.at(0).get<int>(), cell.at(1).get<int>()}, 0));
        }
        paths[entry.at("agent").get<AgentId>()] = std::move(path);
      }
    } catch (const nlohmann::json::exception& e) {
      throw ParseError(std::string("bad solution JSON: ") + e.what(), 0);
    }
  } else {
    auto lines = split_lines(text);
    for (std::size_t i = 0; i < lines.size(); ++i) {
      auto line = lines[i];
      if (blank(line)) continue;
      int ln = static_cast<int>(i + 1);
      if (line.substr(0, 6) != "agent ") throw ParseError("expected 'agent <id>:'", ln);
      auto colon = line.find(':');
      if (colon == std::string_view::npos) throw ParseError("missing ':'", ln);
      AgentId a = std::stoi(std::string(line.substr(6, colon - 6)));
      std::vector<NodeId> path;
      std::size_t pos = colon + 1;
      while ((pos = line.find('(', pos)) != std::string_view::npos) {
        auto close = line.find(')', pos);
        if (close == std::string_view::npos) throw ParseError("unterminated cell", ln);
        auto cell = std::string(line.substr(pos + 1, close - pos - 1));
        auto comma = cell.find(',');
        if (comma == std::string::npos) throw ParseError("cell needs x,y", ln);
        path.push_back(node_of({std::stoi(cell.substr(0, comma)), std::stoi(cell.substr(comma + 1))}, ln));
        pos = close + 1;
      }
      paths[a] = std::move(path);
    }
  }
  GlobalSolution s;
  std::size_t longest = 0, shortest = std::numeric_limits<std::size_t>::max();
  for (const auto& [a, path] : paths) {
    longest = std::max(longest, path.size());
    shortest = std::min(shortest, path.size());
  }
  s.paths = std::move(paths);
  if (!s.paths.empty() && shortest == longest && shortest > 0) {
    auto m = metrics(s);
    s.makespan = m.makespan;
    s.moves = m.moves;
  } else {
    s.makespan = longest > 0 ? static_cast<int>(longest) - 1 : 0;
  }
  return s;
}

}  // namespace dmapf
