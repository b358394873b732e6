// Small CDCL SAT solver backing the movement planner.
#pragma once

#include <cstdint>
#include <functional>
#include <vector>

namespace dmapf::sat {

// Literal encoding: 2 * var + (negated ? 1 : 0).
using Lit = int;
inline Lit pos(int var) { return var * 2; }
inline Lit neg(int var) { return var * 2 + 1; }
inline Lit negate(Lit l) { return l ^ 1; }
inline int var_of(Lit l) { return l >> 1; }

enum class Result { Sat, Unsat, Interrupted };

class Solver {
 public:
  int new_var();
  int var_count() const { return static_cast<int>(assigns_.size()); }
  // Must be called before solve(). Returns false once the formula is
  // trivially unsatisfiable.
  bool add_clause(std::vector<Lit> lits);
  // `interrupted` is polled periodically; returning true aborts the search.
  Result solve(const std::function<bool()>& interrupted = {});
  // Model value after Sat.
  bool value(int var) const { return model_[static_cast<std::size_t>(var)]; }

  std::uint64_t conflicts() const { return conflicts_; }

 private:
  static constexpr std::int8_t kTrue = 1, kFalse = -1, kUndef = 0;
  static constexpr int kNoReason = -1;

  struct Clause {
    std::vector<Lit> lits;
    double activity = 0;
    bool learnt = false;
    bool deleted = false;
  };
  struct Watcher {
    int clause;
    Lit blocker;
  };

  std::int8_t lit_value(Lit l) const {
    std::int8_t v = assigns_[static_cast<std::size_t>(var_of(l))];
    return (l & 1) ? static_cast<std::int8_t>(-v) : v;
  }
  int level() const { return static_cast<int>(trail_lim_.size()); }
  void enqueue(Lit l, int reason);
  void attach(int cref);
  int propagate();
  void analyze(int conflict, std::vector<Lit>& learnt, int& back_level);
  void cancel_until(int lvl);
  int pick_branch();
  void reduce_learnts();
  bool locked(int cref) const;

  void bump_var(int v);
  void bump_clause(Clause& c);
  void heap_insert(int v);
  int heap_pop();
  void heap_up(std::size_t i);
  void heap_down(std::size_t i);
  bool heap_less(int a, int b) const { return activity_[static_cast<std::size_t>(a)] > activity_[static_cast<std::size_t>(b)]; }

  bool ok_ = true;
  std::vector<Clause> clauses_;
  std::vector<int> learnts_;
  std::vector<std::vector<Watcher>> watches_;
  std::vector<std::int8_t> assigns_;
  std::vector<int> levels_;
  std::vector<int> reasons_;
  std::vector<bool> polarity_;
  std::vector<bool> seen_;
  std::vector<double> activity_;
  std::vector<Lit> trail_;
  std::vector<int> trail_lim_;
  std::size_t qhead_ = 0;
  std::vector<int> heap_;
  std::vector<int> heap_index_;
  double var_inc_ = 1;
  double clause_inc_ = 1;
  double max_learnts_ = 0;
  std::uint64_t conflicts_ = 0;
  std::vector<bool> model_;
};

}  // namespace dmapf::sat
