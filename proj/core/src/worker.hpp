// One solver worker: owns the areas of a subproblem and runs the round loop.
#pragma once

#include <chrono>
#include <deque>
#include <functional>

#include "dmapf/runtime.hpp"
#include "wire.hpp"

namespace dmapf {

struct SharedContext {
  const Problem& problem;
  const Partition& part;
  SolverConfig cfg;
  std::chrono::steady_clock::time_point deadline;
  std::map<AgentId, AbstractPlan> plans;
};

struct WorkerEvent {
  int round = 0;
  SolverId solver = 0;
  std::string text;
};

struct WorkerOutcome {
  SolveStatus status = SolveStatus::Solved;
  std::string detail;
  int rounds = 0;
  std::vector<RoundPlan> plans;
  std::vector<WorkerEvent> events;
  std::vector<LedgerRecord> ledger;
  std::optional<GlobalSolution> solution;  // worker 1 only
};

struct Message {
  Envelope envelope;
  wire::json body;
};

// Buffers messages that arrive ahead of the phase waiting for them.
class Inbox {
 public:
  Inbox(Transport& transport, SolverId self, std::chrono::milliseconds timeout)
      : transport_(transport), self_(self), timeout_(timeout) {}

  Message take(const std::function<bool(const Message&)>& match, const std::string& what);

 private:
  Transport& transport_;
  SolverId self_;
  std::chrono::milliseconds timeout_;
  std::deque<Message> buffer_;
};

class Worker {
 public:
  Worker(const SharedContext& ctx, SolverId id, Transport& transport);
  WorkerOutcome run();

 private:
  struct RoundState;

  TrackMessage track(int round) const;
  void run_round(int round, const Tasks& tasks);
  void negotiate(RoundState& rs, const Tasks& tasks);
  void reject(RoundState& rs, const Tasks& tasks);
  void plan(RoundState& rs);
  void confirm(RoundState& rs, const Tasks& tasks);
  void aggregate(WorkerOutcome& out);

  void send(const std::string& kind, const std::string& phase, int round, SolverId to, const wire::json& body);
  Message take_migrate(const std::string& phase, int round, const std::string& type);
  std::vector<MigrationCandidate> candidates(AreaId area, AreaId other, Side side) const;
  std::vector<NodeId> parked(AreaId area) const;
  bool owns(AreaId a) const;
  void abort(SolveStatus status, const std::string& detail);

  const SharedContext& ctx_;
  SolverId id_;
  Transport& transport_;
  Inbox inbox_;
  std::map<AreaId, std::map<AgentId, AgentState>> areas_;
  std::optional<std::pair<SolveStatus, std::string>> abort_;
  std::vector<RoundPlan> round_plans_;
  std::vector<WorkerEvent> events_;
  std::vector<LedgerRecord> ledger_;
};

}  // namespace dmapf
