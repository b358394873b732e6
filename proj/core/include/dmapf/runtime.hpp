// Solver workers, the per-round protocol and plan aggregation.
#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "dmapf/abstract.hpp"
#include "dmapf/motion.hpp"
#include "dmapf/negotiate.hpp"
#include "dmapf/partition.hpp"
#include "dmapf/transport.hpp"

namespace dmapf {

struct SolverConfig {
  int dx = 8;
  int dy = 8;
  double F = 2.0;
  int n_f = 4;
  double timeout_s = 180.0;     // whole solve
  double rpc_timeout_s = 30.0;  // any single wait for a message
  int round_cap = 0;            // 0: 4 * areas * max plan length
  bool keep_trace = false;
};

enum class SolveStatus { Solved, Unsolvable, PlanFailed, RoundLimit, Timeout, ProtocolError };

std::string to_string(SolveStatus s);

struct PendingMigration {
  AgentId agent = 0;
  AreaId current = 0;
  AreaId next = 0;
  auto operator<=>(const PendingMigration&) const = default;
};

// Broadcast by every worker at the start of each round.
struct TrackMessage {
  SolverId solver = 0;
  int round = 0;
  bool has_work = false;
  bool abort = false;
  SolveStatus reason = SolveStatus::Solved;  // meaningful when abort
  std::string detail;
  bool timed_out = false;
  int max_remaining = 0;
  std::uint64_t fingerprint = 0;  // hash of the hosted agents' nodes, goals and plans
  std::vector<PendingMigration> pending;
};

struct Tasks {
  std::set<SolverId> active;
  std::vector<AreaPair> pairs;  // every pair with a pending migration
  std::vector<AreaPair> send;   // pairs this solver requests (it owns the low area)
  std::vector<AreaPair> recv;   // pairs this solver serves (it owns the high area)
  std::vector<AreaPair> local;  // pairs with both areas owned by this solver
};

// Identical on every worker given the same messages.
Tasks determine_tasks(const std::vector<TrackMessage>& messages, const Partition& part, SolverId self);

// An agent as tracked by the worker owning its current area.
struct AgentState {
  AgentId id = 0;
  NodeId node = 0;  // an out-node while entering
  std::optional<NodeId> goal;
  AbstractPlan plan;
};

// Confirmed migrant handed to the destination area.
struct MigrantRecord {
  AgentId agent = 0;
  NodeId node = 0;  // from_border, the entry out-node of the destination
  NodeId to = 0;    // to_border
  std::optional<NodeId> goal;
  AbstractPlan plan;  // already advanced past the origin area
};

// Adds confirmed migrants to the destination's agent set. Throws
// ProtocolError for a migrant whose assignment was rejected or already present.
void confirm_apply(std::map<AgentId, AgentState>& destination, const std::vector<MigrantRecord>& migrants,
                   const std::set<AgentId>& rejected);

struct RoundPlan {
  int round = 0;
  AreaId area = 0;
  MovementPlan plan;
};

// Concatenates rounds: each round lasts as long as its longest plan, agents
// wait out the rest and agents without a plan wait in place. Throws
// std::logic_error when the result does not validate.
GlobalSolution stitch(const Problem& p, const std::vector<RoundPlan>& plans);

struct LedgerRecord {
  int round = 0;
  AreaPair pair;
  AreaId origin = 0;
  AreaId destination = 0;
  BorderAssignment assignment;
  SolverId computed_by = 0;
  bool rejected = false;
  bool confirmed = false;
};

struct SolveReport {
  SolveStatus status = SolveStatus::Solved;
  std::string message;
  std::optional<GlobalSolution> solution;
  int rounds = 0;
  double seconds = 0;
  std::vector<std::string> events;
  std::vector<LedgerRecord> ledger;
  std::vector<std::string> trace;  // one JSON envelope per line
};

// Runs every worker of the partition in this process over an in-process bus.
SolveReport solve(const Problem& p, const SolverConfig& cfg);

// Runs the workers [first, last] over `transport`. The report carries the
// solution only in the process hosting solver 1.
SolveReport run_hosted(const Problem& p, const SolverConfig& cfg, Transport& transport, SolverId first,
                       SolverId last);

}  // namespace dmapf
