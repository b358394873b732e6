#include "dmapf/negotiate.hpp"

#include <algorithm>
#include <limits>
#include <map>

namespace dmapf {

std::vector<Tier> build_tiers(std::vector<MigrationCandidate> candidates) {
  std::sort(candidates.begin(), candidates.end(), [](const auto& a, const auto& b) {
    if (a.tier != b.tier) return a.tier > b.tier;
    if (a.side != b.side) return a.side == Side::Outgoing;
    return a.agent < b.agent;
  });
  std::vector<Tier> tiers;
  for (auto& c : candidates) {
    if (tiers.empty() || tiers.back().front().tier != c.tier) tiers.emplace_back();
    tiers.back().push_back(c);
  }
  return tiers;
}

NegotiationState make_state(int n_l, int n_bi, int n_bo) {
  NegotiationState s;
  s.n_l = n_l;
  s.n_bi = n_bi;
  s.n_bo = n_bo;
  s.n_ai = n_l - n_bi;
  s.n_ao = n_l - n_bo;
  return s;
}

int assignment_limit(const NegotiationState& s) {
  return std::min(std::min(s.n_i, s.n_ai) + std::min(s.n_o, s.n_ao), std::max(s.n_ai, s.n_ao));
}

Admission admit(const std::vector<Tier>& tiers, NegotiationState state) {
  Admission out;
  state.n_i = 0;
  state.n_o = 0;
  const int cap = std::max(state.n_ai, state.n_ao);
  int mandatory_total = 0;
  for (const auto& tier : tiers) {
    if (state.n_o >= state.n_ao && state.n_i >= state.n_ai) break;
    for (Side side : {Side::Outgoing, Side::Incoming}) {
      std::vector<MigrationCandidate> group;
      for (const auto& c : tier) {
        if (c.side == side) group.push_back(c);
      }
      if (group.empty()) continue;
      const int k = static_cast<int>(group.size());
      int& used = side == Side::Outgoing ? state.n_o : state.n_i;
      const int available = side == Side::Outgoing ? state.n_ao : state.n_ai;
      const bool mandatory = k <= available - used && mandatory_total + k <= cap;
      if (mandatory) mandatory_total += k;
      used += k;
      for (auto& c : group) {
        c.mandatory = mandatory;
        out.admitted.push_back(c);
      }
    }
  }
  state.limit = assignment_limit(state);
  out.state = state;
  return out;
}

namespace {

constexpr long kBonus = 1'000'000;

struct Choice {
  NodeId from = 0;
  NodeId to = 0;
  int distance = 0;
};

// Option `k` as used by candidate `c`, if the direction is available.
std::optional<Choice> choice_for(const MigrationCandidate& c, const BorderOption& o) {
  if (c.side == Side::Outgoing) {
    if (!o.usable_out) return std::nullopt;
    return Choice{o.host.id, o.remote.id, manhattan(c.coord, o.host.coord)};
  }
  if (!o.usable_in) return std::nullopt;
  return Choice{o.remote.id, o.host.id, manhattan(c.coord, o.remote.coord)};
}

// Successive-shortest-path min-cost flow on a tiny bipartite network.
class MinCostFlow {
 public:
  explicit MinCostFlow(int n) : graph_(static_cast<std::size_t>(n)) {}

  void add(int u, int v, long cost) {
    graph_[static_cast<std::size_t>(u)].push_back(static_cast<int>(edges_.size()));
    edges_.push_back({v, 1, cost});
    graph_[static_cast<std::size_t>(v)].push_back(static_cast<int>(edges_.size()));
    edges_.push_back({u, 0, -cost});
  }

  // Pushes up to `units` units; returns the number pushed.
  int run(int s, int t, int units) {
    const long inf = std::numeric_limits<long>::max() / 4;
    int pushed = 0;
    const auto n = graph_.size();
    while (pushed < units) {
      std::vector<long> dist(n, inf);
      std::vector<int> via(n, -1);
      dist[static_cast<std::size_t>(s)] = 0;
      for (std::size_t iter = 0; iter < n; ++iter) {
        bool changed = false;
        for (std::size_t u = 0; u < n; ++u) {
          if (dist[u] == inf) continue;
          for (int e : graph_[u]) {
            const auto& edge = edges_[static_cast<std::size_t>(e)];
            if (edge.cap == 0) continue;
            long nd = dist[u] + edge.cost;
            if (nd < dist[static_cast<std::size_t>(edge.to)]) {
              dist[static_cast<std::size_t>(edge.to)] = nd;
              via[static_cast<std::size_t>(edge.to)] = e;
              changed = true;
            }
          }
        }
        if (!changed) break;
      }
      if (dist[static_cast<std::size_t>(t)] == inf) break;
      for (int v = t; v != s;) {
        int e = via[static_cast<std::size_t>(v)];
        edges_[static_cast<std::size_t>(e)].cap -= 1;
        edges_[static_cast<std::size_t>(e ^ 1)].cap += 1;
        v = edges_[static_cast<std::size_t>(e ^ 1)].to;
      }
      ++pushed;
    }
    return pushed;
  }

  bool used(int edge_index) const { return edges_[static_cast<std::size_t>(edge_index)].cap == 0; }
  int edge_count() const { return static_cast<int>(edges_.size()); }

 private:
  struct Edge {
    int to;
    int cap;
    long cost;
  };
  std::vector<Edge> edges_;
  std::vector<std::vector<int>> graph_;
};

struct Solved {
  std::vector<int> option_of;  // per candidate, -1 when unassigned
  long cost = 0;
};

// Restrictions layered on top of the admitted set while breaking ties.
struct Restriction {
  std::vector<std::vector<bool>> allowed;  // [candidate][option]
  std::vector<bool> must;
};

std::optional<Solved> solve_matching(const std::vector<MigrationCandidate>& cands,
                                     const std::vector<BorderOption>& options, const Restriction& r, int limit) {
  const int nc = static_cast<int>(cands.size()), no = static_cast<int>(options.size());
  const int s = 0, t = 1 + nc + no;
  MinCostFlow flow(t + 1);
  struct Arc {
    int c, k, edge;
  };
  std::vector<Arc> arcs;
  for (int c = 0; c < nc; ++c) {
    flow.add(s, 1 + c, 0);
    for (int k = 0; k < no; ++k) {
      if (!r.allowed[static_cast<std::size_t>(c)][static_cast<std::size_t>(k)]) continue;
      auto ch = choice_for(cands[static_cast<std::size_t>(c)], options[static_cast<std::size_t>(k)]);
      if (!ch) continue;
      long cost = ch->distance - (r.must[static_cast<std::size_t>(c)] ? kBonus : 0);
      arcs.push_back({c, k, flow.edge_count()});
      flow.add(1 + c, 1 + nc + k, cost);
    }
  }
  for (int k = 0; k < no; ++k) flow.add(1 + nc + k, t, 0);
  if (flow.run(s, t, limit) != limit) return std::nullopt;

  Solved out;
  out.option_of.assign(static_cast<std::size_t>(nc), -1);
  for (const auto& a : arcs) {
    if (!flow.used(a.edge)) continue;
    out.option_of[static_cast<std::size_t>(a.c)] = a.k;
    out.cost += choice_for(cands[static_cast<std::size_t>(a.c)], options[static_cast<std::size_t>(a.k)])->distance;
  }
  for (int c = 0; c < nc; ++c) {
    if (r.must[static_cast<std::size_t>(c)] && out.option_of[static_cast<std::size_t>(c)] < 0) return std::nullopt;
  }
  return out;
}

// Depth-first branch and bound for border sets that are not a matching
// (a node shared by several linked pairs).
class ExhaustiveAssigner {
 public:
  ExhaustiveAssigner(const std::vector<MigrationCandidate>& cands, const std::vector<BorderOption>& options,
                     std::vector<int> order, int limit)
      : cands_(cands), options_(options), order_(std::move(order)), limit_(limit) {
    for (std::size_t i = 0; i < order_.size(); ++i) {
      const auto& c = cands_[static_cast<std::size_t>(order_[i])];
      std::vector<std::pair<NodeId, int>> opts;
      int best = std::numeric_limits<int>::max();
      for (int k = 0; k < static_cast<int>(options_.size()); ++k) {
        if (auto ch = choice_for(c, options_[static_cast<std::size_t>(k)])) {
          opts.emplace_back(ch->from, k);
          best = std::min(best, ch->distance);
        }
      }
      std::sort(opts.begin(), opts.end());
      std::vector<int> ks;
      for (auto& [from, k] : opts) ks.push_back(k);
      choices_.push_back(std::move(ks));
      min_dist_.push_back(c.mandatory ? (opts.empty() ? -1 : best) : 0);
    }
    suffix_bound_.assign(order_.size() + 1, 0);
    for (std::size_t i = order_.size(); i-- > 0;) {
      suffix_bound_[i] = suffix_bound_[i + 1] + std::max(0, min_dist_[i]);
    }
  }

  std::optional<Solved> run() {
    for (std::size_t i = 0; i < order_.size(); ++i) {
      if (cands_[static_cast<std::size_t>(order_[i])].mandatory && choices_[i].empty()) return std::nullopt;
    }
    current_.assign(cands_.size(), -1);
    dfs(0, 0, 0);
    return best_;
  }

 private:
  void dfs(std::size_t i, int assigned, long cost) {
    if (best_ && cost + suffix_bound_[i] >= best_->cost) return;
    const int left = static_cast<int>(order_.size() - i);
    if (assigned + left < limit_) return;
    if (i == order_.size()) {
      if (assigned == limit_) best_ = Solved{current_, cost};
      return;
    }
    const int c = order_[i];
    const auto& cand = cands_[static_cast<std::size_t>(c)];
    if (assigned < limit_) {
      for (int k : choices_[i]) {
        auto ch = *choice_for(cand, options_[static_cast<std::size_t>(k)]);
        if (!compatible(ch)) continue;
        used_.push_back(ch);
        current_[static_cast<std::size_t>(c)] = k;
        dfs(i + 1, assigned + 1, cost + ch.distance);
        current_[static_cast<std::size_t>(c)] = -1;
        used_.pop_back();
      }
    }
    if (!cand.mandatory) dfs(i + 1, assigned, cost);
  }

  bool compatible(const Choice& ch) const {
    for (const auto& u : used_) {
      if (u.from == ch.from || u.to == ch.to) return false;
      if (u.from == ch.to && u.to == ch.from) return false;
    }
    return true;
  }

  const std::vector<MigrationCandidate>& cands_;
  const std::vector<BorderOption>& options_;
  std::vector<int> order_;
  int limit_;
  std::vector<std::vector<int>> choices_;
  std::vector<int> min_dist_;
  std::vector<long> suffix_bound_;
  std::vector<int> current_;
  std::vector<Choice> used_;
  std::optional<Solved> best_;
};

bool is_matching(const std::vector<BorderOption>& options) {
  std::set<NodeId> hosts, remotes;
  for (const auto& o : options) {
    if (!hosts.insert(o.host.id).second || !remotes.insert(o.remote.id).second) return false;
  }
  return true;
}

}  // namespace

std::optional<std::vector<BorderAssignment>> assign_borders(const std::vector<MigrationCandidate>& admitted,
                                                            const std::vector<BorderOption>& borders, int limit) {
  if (limit < 0) return std::nullopt;
  const std::size_t nc = admitted.size(), no = borders.size();
  std::vector<int> order(nc);
  for (std::size_t i = 0; i < nc; ++i) order[i] = static_cast<int>(i);
  std::sort(order.begin(), order.end(), [&](int a, int b) {
    return admitted[static_cast<std::size_t>(a)].agent < admitted[static_cast<std::size_t>(b)].agent;
  });

  std::optional<Solved> solved;
  if (is_matching(borders)) {
    Restriction r;
    r.allowed.assign(nc, std::vector<bool>(no, true));
    r.must.resize(nc);
    for (std::size_t c = 0; c < nc; ++c) r.must[c] = admitted[c].mandatory;
    auto best = solve_matching(admitted, borders, r, limit);
    if (!best) return std::nullopt;
    // Fix candidates one at a time in agent order, each to its smallest
    // from_border that keeps the optimum (or to "unassigned").
    for (int c : order) {
      const auto ci = static_cast<std::size_t>(c);
      std::vector<std::pair<NodeId, std::size_t>> opts;
      for (std::size_t k = 0; k < no; ++k) {
        if (!r.allowed[ci][k]) continue;
        if (auto ch = choice_for(admitted[ci], borders[k])) opts.emplace_back(ch->from, k);
      }
      std::sort(opts.begin(), opts.end());
      bool fixed = false;
      for (auto [from, k] : opts) {
        Restriction trial = r;
        trial.allowed[ci].assign(no, false);
        trial.allowed[ci][k] = true;
        trial.must[ci] = true;
        auto res = solve_matching(admitted, borders, trial, limit);
        if (res && res->cost == best->cost) {
          r = std::move(trial);
          fixed = true;
          break;
        }
      }
      if (!fixed) {
        r.allowed[ci].assign(no, false);
        r.must[ci] = false;
      }
    }
    solved = solve_matching(admitted, borders, r, limit);
  } else {
    solved = ExhaustiveAssigner(admitted, borders, order, limit).run();
  }
  if (!solved) return std::nullopt;

  std::vector<BorderAssignment> out;
  for (int c : order) {
    int k = solved->option_of[static_cast<std::size_t>(c)];
    if (k < 0) continue;
    auto ch = *choice_for(admitted[static_cast<std::size_t>(c)], borders[static_cast<std::size_t>(k)]);
    out.push_back({admitted[static_cast<std::size_t>(c)].agent, ch.from, ch.to, ch.distance});
  }
  return out;
}

std::vector<BorderOption> border_options(const LinkGraph& links, const Area& host, const Area& remote,
                                         const AreaBlocks& host_blocks, const AreaBlocks* remote_blocks) {
  std::vector<BorderOption> out;
  const bool host_low = host.id < remote.id;
  for (const auto& bp : links.border_pairs(host.id, remote.id)) {
    BorderOption o;
    o.host = host_low ? bp.low : bp.high;
    o.remote = host_low ? bp.high : bp.low;
    o.usable_out = !host_blocks.out.count(o.host.id) && !(remote_blocks && remote_blocks->in.count(o.remote.id));
    o.usable_in = !host_blocks.in.count(o.host.id) && !(remote_blocks && remote_blocks->out.count(o.remote.id));
    out.push_back(o);
  }
  return out;
}

void block_corners(const std::vector<BorderAssignment>& assignments, const Area& host, AreaBlocks& host_blocks,
                   const Area* remote, AreaBlocks* remote_blocks, NegotiationState& state) {
  for (const auto& a : assignments) {
    if (host.contains(a.from_border)) {
      if (host.is_corner(a.from_border) && host_blocks.out.insert(a.from_border).second) ++state.n_bo;
      if (remote && remote_blocks && remote->is_corner(a.to_border)) remote_blocks->in.insert(a.to_border);
    } else {
      if (host.is_corner(a.to_border) && host_blocks.in.insert(a.to_border).second) ++state.n_bi;
      if (remote && remote_blocks && remote->is_corner(a.from_border)) remote_blocks->out.insert(a.from_border);
    }
  }
}

PairOutcome negotiate_pair(const LinkGraph& links, const Area& host, const Area& remote,
                           std::vector<MigrationCandidate> candidates, AreaBlocks& host_blocks,
                           AreaBlocks* remote_blocks) {
  PairOutcome out;
  auto options = border_options(links, host, remote, host_blocks, remote_blocks);
  int n_bo = 0, n_bi = 0;
  for (const auto& o : options) {
    n_bo += o.usable_out ? 0 : 1;
    n_bi += o.usable_in ? 0 : 1;
  }
  auto admission = admit(build_tiers(std::move(candidates)), make_state(static_cast<int>(options.size()), n_bi, n_bo));
  out.state = admission.state;
  out.admitted = admission.admitted;
  if (out.state.limit == 0) return out;
  auto assigned = assign_borders(admission.admitted, options, out.state.limit);
  if (!assigned) {
    out.failed = true;
    return out;
  }
  out.assignments = std::move(*assigned);
  block_corners(out.assignments, host, host_blocks, remote_blocks ? &remote : nullptr, remote_blocks, out.state);
  return out;
}

std::set<AgentId> detect_rejections(const std::vector<LedgerEntry>& entries, const std::set<AreaId>& host_areas) {
  std::set<AgentId> rejected;
  auto rank = [](const LedgerEntry& e) {
    return std::make_tuple(e.computed_locally ? 0 : 1, e.pair, e.assignment.agent);
  };
  auto resolve = [&](std::map<std::pair<AreaId, NodeId>, std::vector<const LedgerEntry*>>& groups) {
    for (auto& [key, list] : groups) {
      std::vector<const LedgerEntry*> live;
      for (const auto* e : list) {
        if (!rejected.count(e->assignment.agent)) live.push_back(e);
      }
      if (live.size() < 2) continue;
      std::sort(live.begin(), live.end(), [&](const auto* a, const auto* b) { return rank(*a) < rank(*b); });
      for (std::size_t i = 1; i < live.size(); ++i) rejected.insert(live[i]->assignment.agent);
    }
  };
  std::map<std::pair<AreaId, NodeId>, std::vector<const LedgerEntry*>> incoming, outgoing;
  for (const auto& e : entries) {
    if (host_areas.count(e.destination)) incoming[{e.destination, e.assignment.to_border}].push_back(&e);
    if (host_areas.count(e.origin)) outgoing[{e.origin, e.assignment.from_border}].push_back(&e);
  }
  resolve(incoming);
  resolve(outgoing);
  return rejected;
}

}  // namespace dmapf
