#include "dmapf/sat.hpp"

#include <algorithm>
#include <cmath>

namespace dmapf::sat {

namespace {

double luby(double y, int x) {
  int size = 1, seq = 0;
  while (size < x + 1) {
    ++seq;
    size = 2 * size + 1;
  }
  while (size - 1 != x) {
    size = (size - 1) >> 1;
    --seq;
    x = x % size;
  }
  return std::pow(y, seq);
}

constexpr double kVarDecay = 0.95;
constexpr double kClauseDecay = 0.999;
constexpr int kRestartBase = 100;

}  // namespace

int Solver::new_var() {
  int v = var_count();
  assigns_.push_back(kUndef);
  levels_.push_back(0);
  reasons_.push_back(kNoReason);
  polarity_.push_back(true);
  seen_.push_back(false);
  activity_.push_back(0);
  watches_.emplace_back();
  watches_.emplace_back();
  heap_index_.push_back(-1);
  heap_insert(v);
  return v;
}

bool Solver::add_clause(std::vector<Lit> lits) {
  if (!ok_) return false;
  std::sort(lits.begin(), lits.end());
  std::vector<Lit> kept;
  Lit prev = -1;
  for (Lit l : lits) {
    if (l == prev) continue;
    if (prev >= 0 && l == negate(prev)) return true;  // tautology
    std::int8_t v = lit_value(l);
    if (v == kTrue) return true;
    if (v == kFalse) continue;
    kept.push_back(l);
    prev = l;
  }
  if (kept.empty()) return ok_ = false;
  if (kept.size() == 1) {
    enqueue(kept[0], kNoReason);
    return ok_ = propagate() == kNoReason;
  }
  clauses_.push_back({std::move(kept), 0, false, false});
  attach(static_cast<int>(clauses_.size()) - 1);
  return true;
}

void Solver::attach(int cref) {
  const auto& c = clauses_[static_cast<std::size_t>(cref)].lits;
  watches_[static_cast<std::size_t>(c[0])].push_back({cref, c[1]});
  watches_[static_cast<std::size_t>(c[1])].push_back({cref, c[0]});
}

void Solver::enqueue(Lit l, int reason) {
  auto v = static_cast<std::size_t>(var_of(l));
  assigns_[v] = (l & 1) ? kFalse : kTrue;
  levels_[v] = level();
  reasons_[v] = reason;
  trail_.push_back(l);
}

// Watches are indexed by the literal that, once false, triggers a visit.
int Solver::propagate() {
  int conflict = kNoReason;
  while (qhead_ < trail_.size()) {
    Lit p = trail_[qhead_++];
    Lit false_lit = negate(p);
    auto& ws = watches_[static_cast<std::size_t>(false_lit)];
    std::size_t i = 0, j = 0;
    while (i < ws.size()) {
      Watcher w = ws[i];
      auto& clause = clauses_[static_cast<std::size_t>(w.clause)];
      if (clause.deleted) {
        ++i;
        continue;
      }
      if (lit_value(w.blocker) == kTrue) {
        ws[j++] = ws[i++];
        continue;
      }
      auto& c = clause.lits;
      if (c[0] == false_lit) std::swap(c[0], c[1]);
      ++i;
      Lit first = c[0];
      Watcher nw{w.clause, first};
      if (first != w.blocker && lit_value(first) == kTrue) {
        ws[j++] = nw;
        continue;
      }
      bool moved = false;
      for (std::size_t k = 2; k < c.size(); ++k) {
        if (lit_value(c[k]) != kFalse) {
          std::swap(c[1], c[k]);
          watches_[static_cast<std::size_t>(c[1])].push_back(nw);
          moved = true;
          break;
        }
      }
      if (moved) continue;
      ws[j++] = nw;
      if (lit_value(first) == kFalse) {
        conflict = w.clause;
        qhead_ = trail_.size();
        while (i < ws.size()) ws[j++] = ws[i++];
      } else {
        enqueue(first, w.clause);
      }
    }
    ws.resize(j);
    if (conflict != kNoReason) break;
  }
  return conflict;
}

void Solver::analyze(int conflict, std::vector<Lit>& learnt, int& back_level) {
  learnt.assign(1, 0);
  int path = 0;
  Lit p = -1;
  std::size_t index = trail_.size();
  int reason = conflict;
  do {
    auto& c = clauses_[static_cast<std::size_t>(reason)];
    if (c.learnt) bump_clause(c);
    for (std::size_t k = (p == -1 ? 0 : 1); k < c.lits.size(); ++k) {
      Lit q = c.lits[k];
      auto v = static_cast<std::size_t>(var_of(q));
      if (seen_[v] || levels_[v] == 0) continue;
      bump_var(static_cast<int>(v));
      seen_[v] = true;
      if (levels_[v] >= level()) {
        ++path;
      } else {
        learnt.push_back(q);
      }
    }
    while (!seen_[static_cast<std::size_t>(var_of(trail_[--index]))]) {
    }
    p = trail_[index];
    reason = reasons_[static_cast<std::size_t>(var_of(p))];
    seen_[static_cast<std::size_t>(var_of(p))] = false;
    --path;
  } while (path > 0);
  learnt[0] = negate(p);

  // Drop literals implied by the rest of the clause.
  std::vector<Lit> all = learnt;
  std::size_t keep = 1;
  for (std::size_t k = 1; k < learnt.size(); ++k) {
    auto v = static_cast<std::size_t>(var_of(learnt[k]));
    int r = reasons_[v];
    bool redundant = r != kNoReason;
    if (redundant) {
      const auto& rc = clauses_[static_cast<std::size_t>(r)].lits;
      for (std::size_t m = 1; m < rc.size(); ++m) {
        auto u = static_cast<std::size_t>(var_of(rc[m]));
        if (!seen_[u] && levels_[u] > 0) {
          redundant = false;
          break;
        }
      }
    }
    if (!redundant) learnt[keep++] = learnt[k];
  }
  learnt.resize(keep);
  for (Lit l : all) seen_[static_cast<std::size_t>(var_of(l))] = false;

  back_level = 0;
  if (learnt.size() > 1) {
    std::size_t best = 1;
    for (std::size_t k = 2; k < learnt.size(); ++k) {
      if (levels_[static_cast<std::size_t>(var_of(learnt[k]))] >
          levels_[static_cast<std::size_t>(var_of(learnt[best]))]) {
        best = k;
      }
    }
    std::swap(learnt[1], learnt[best]);
    back_level = levels_[static_cast<std::size_t>(var_of(learnt[1]))];
  }
}

void Solver::cancel_until(int lvl) {
  if (level() <= lvl) return;
  for (std::size_t k = trail_.size(); k-- > static_cast<std::size_t>(trail_lim_[static_cast<std::size_t>(lvl)]);) {
    auto v = static_cast<std::size_t>(var_of(trail_[k]));
    assigns_[v] = kUndef;
    polarity_[v] = (trail_[k] & 1) != 0;
    if (heap_index_[v] < 0) heap_insert(static_cast<int>(v));
  }
  trail_.resize(static_cast<std::size_t>(trail_lim_[static_cast<std::size_t>(lvl)]));
  qhead_ = trail_.size();
  trail_lim_.resize(static_cast<std::size_t>(lvl));
}

int Solver::pick_branch() {
  while (!heap_.empty()) {
    int v = heap_pop();
    if (assigns_[static_cast<std::size_t>(v)] == kUndef) return v;
  }
  return -1;
}

bool Solver::locked(int cref) const {
  const auto& c = clauses_[static_cast<std::size_t>(cref)].lits;
  auto v = static_cast<std::size_t>(var_of(c[0]));
  return reasons_[v] == cref && lit_value(c[0]) == kTrue;
}

void Solver::reduce_learnts() {
  std::sort(learnts_.begin(), learnts_.end(), [&](int a, int b) {
    const auto& ca = clauses_[static_cast<std::size_t>(a)];
    const auto& cb = clauses_[static_cast<std::size_t>(b)];
    if ((ca.lits.size() > 2) != (cb.lits.size() > 2)) return ca.lits.size() > 2;
    return ca.activity < cb.activity;
  });
  std::size_t half = learnts_.size() / 2;
  std::vector<int> kept;
  for (std::size_t k = 0; k < learnts_.size(); ++k) {
    int cref = learnts_[k];
    auto& c = clauses_[static_cast<std::size_t>(cref)];
    if (k < half && c.lits.size() > 2 && !locked(cref)) {
      c.deleted = true;
      c.lits.clear();
      c.lits.shrink_to_fit();
    } else {
      kept.push_back(cref);
    }
  }
  learnts_ = std::move(kept);
}

void Solver::bump_var(int v) {
  auto i = static_cast<std::size_t>(v);
  if ((activity_[i] += var_inc_) > 1e100) {
    for (auto& a : activity_) a *= 1e-100;
    var_inc_ *= 1e-100;
  }
  if (heap_index_[i] >= 0) heap_up(static_cast<std::size_t>(heap_index_[i]));
}

void Solver::bump_clause(Clause& c) {
  if ((c.activity += clause_inc_) > 1e20) {
    for (int cref : learnts_) clauses_[static_cast<std::size_t>(cref)].activity *= 1e-20;
    clause_inc_ *= 1e-20;
  }
}

void Solver::heap_insert(int v) {
  heap_index_[static_cast<std::size_t>(v)] = static_cast<int>(heap_.size());
  heap_.push_back(v);
  heap_up(heap_.size() - 1);
}

int Solver::heap_pop() {
  int top = heap_[0];
  heap_[0] = heap_.back();
  heap_index_[static_cast<std::size_t>(heap_[0])] = 0;
  heap_index_[static_cast<std::size_t>(top)] = -1;
  heap_.pop_back();
  if (!heap_.empty()) heap_down(0);
  return top;
}

void Solver::heap_up(std::size_t i) {
  int v = heap_[i];
  while (i > 0) {
    std::size_t parent = (i - 1) / 2;
    if (!heap_less(v, heap_[parent])) break;
    heap_[i] = heap_[parent];
    heap_index_[static_cast<std::size_t>(heap_[i])] = static_cast<int>(i);
    i = parent;
  }
  heap_[i] = v;
  heap_index_[static_cast<std::size_t>(v)] = static_cast<int>(i);
}

void Solver::heap_down(std::size_t i) {
  int v = heap_[i];
  for (;;) {
    std::size_t child = 2 * i + 1;
    if (child >= heap_.size()) break;
    if (child + 1 < heap_.size() && heap_less(heap_[child + 1], heap_[child])) ++child;
    if (!heap_less(heap_[child], v)) break;
    heap_[i] = heap_[child];
    heap_index_[static_cast<std::size_t>(heap_[i])] = static_cast<int>(i);
    i = child;
  }
  heap_[i] = v;
  heap_index_[static_cast<std::size_t>(v)] = static_cast<int>(i);
}

Result Solver::solve(const std::function<bool()>& interrupted) {
  model_.clear();
  if (!ok_) return Result::Unsat;
  if (propagate() != kNoReason) {
    ok_ = false;
    return Result::Unsat;
  }
  max_learnts_ = std::max(1000.0, static_cast<double>(clauses_.size()) / 3);
  std::vector<Lit> learnt;
  std::uint64_t ticks = 0;
  for (int restart = 0;; ++restart) {
    const auto budget = static_cast<std::uint64_t>(luby(2, restart) * kRestartBase);
    std::uint64_t local = 0;
    for (;;) {
      if (interrupted && (++ticks & 255) == 0 && interrupted()) {
        cancel_until(0);
        return Result::Interrupted;
      }
      int conflict = propagate();
      if (conflict != kNoReason) {
        ++conflicts_;
        ++local;
        if (level() == 0) {
          ok_ = false;
          return Result::Unsat;
        }
        int back = 0;
        analyze(conflict, learnt, back);
        cancel_until(back);
        if (learnt.size() == 1) {
          enqueue(learnt[0], kNoReason);
        } else {
          clauses_.push_back({learnt, 0, true, false});
          int cref = static_cast<int>(clauses_.size()) - 1;
          attach(cref);
          learnts_.push_back(cref);
          bump_clause(clauses_.back());
          enqueue(learnt[0], cref);
        }
        var_inc_ /= kVarDecay;
        clause_inc_ /= kClauseDecay;
        continue;
      }
      if (local >= budget) {
        cancel_until(0);
        break;
      }
      if (static_cast<double>(learnts_.size()) - static_cast<double>(trail_.size()) >= max_learnts_) {
        reduce_learnts();
        max_learnts_ *= 1.1;
      }
      int v = pick_branch();
      if (v < 0) {
        model_.resize(assigns_.size());
        for (std::size_t k = 0; k < assigns_.size(); ++k) model_[k] = assigns_[k] == kTrue;
        cancel_until(0);
        return Result::Sat;
      }
      trail_lim_.push_back(static_cast<int>(trail_.size()));
      enqueue(polarity_[static_cast<std::size_t>(v)] ? neg(v) : pos(v), kNoReason);
    }
  }
}

}  // namespace dmapf::sat
