#include "worker.hpp"

#include <algorithm>
#include <sstream>

namespace dmapf {

using wire::json;

Message Inbox::take(const std::function<bool(const Message&)>& match, const std::string& what) {
  for (auto it = buffer_.begin(); it != buffer_.end(); ++it) {
    if (match(*it)) {
      Message m = std::move(*it);
      buffer_.erase(it);
      return m;
    }
  }
  const auto deadline = std::chrono::steady_clock::now() + timeout_;
  for (;;) {
    auto left = std::chrono::duration_cast<std::chrono::milliseconds>(deadline - std::chrono::steady_clock::now());
    if (left.count() <= 0) throw ProtocolError("solver " + std::to_string(self_) + " timed out waiting for " + what);
    auto e = transport_.receive(self_, left);
    if (!e) continue;
    Message m{*e, json::parse(e->body)};
    if (match(m)) return m;
    buffer_.push_back(std::move(m));
  }
}

struct Worker::RoundState {
  int round = 0;
  std::map<AreaPair, std::vector<BorderAssignment>> assigned;
  std::set<AreaPair> computed_here;
  std::set<AgentId> rejected;
  std::set<AreaId> failed_areas;
  std::set<AgentId> stripped;
  std::map<AreaPair, std::vector<MigrantRecord>> outgoing;  // confirmed, ours
  std::map<AreaPair, std::vector<MigrantRecord>> incoming;  // confirmed, theirs
  std::vector<AreaPair> pairs;                              // all pairs of the round
};

Worker::Worker(const SharedContext& ctx, SolverId id, Transport& transport)
    : ctx_(ctx),
      id_(id),
      transport_(transport),
      inbox_(transport, id, std::chrono::milliseconds(static_cast<long>(ctx.cfg.rpc_timeout_s * 1000))) {
  const auto& sp = ctx_.part.subproblems.at(static_cast<std::size_t>(id_ - 1));
  for (AreaId a : sp.areas) areas_[a];
  for (const auto& [agent, node] : sp.robots) {
    AreaId a = ctx_.part.area_of_node.at(node);
    areas_[a][agent] = AgentState{agent, node, ctx_.problem.goal(agent), ctx_.plans.at(agent)};
  }
}

std::vector<NodeId> Worker::parked(AreaId area) const {
  std::vector<NodeId> out;
  for (const auto& [id, a] : areas_.at(area)) {
    if (a.goal && a.plan.remaining() == 0) out.push_back(*a.goal);
  }
  std::sort(out.begin(), out.end());
  return out;
}

bool Worker::owns(AreaId a) const { return areas_.count(a) != 0; }

void Worker::abort(SolveStatus status, const std::string& detail) {
  if (!abort_) abort_ = {status, detail};
}

TrackMessage Worker::track(int round) const {
  TrackMessage m;
  m.solver = id_;
  m.round = round;
  // FNV-1a; must agree across processes, so std::hash is not used.
  std::uint64_t h = 14695981039346656037ull;
  auto mix = [&](std::int64_t v) {
    for (int i = 0; i < 8; ++i) {
      h ^= static_cast<std::uint64_t>(v >> (8 * i)) & 0xffu;
      h *= 1099511628211ull;
    }
  };
  for (const auto& [area, agents] : areas_) {
    for (const auto& [id, a] : agents) {
      mix(id);
      mix(a.node);
      mix(a.goal.value_or(0));
      for (AreaId step : a.plan.areas()) mix(step);
      mix(-1);
      if (a.goal && a.node != *a.goal) m.has_work = true;
      m.max_remaining = std::max(m.max_remaining, a.plan.remaining());
      if (auto next = a.plan.next()) m.pending.push_back({id, area, *next});
    }
  }
  if (abort_) {
    m.abort = true;
    m.reason = abort_->first;
    m.detail = abort_->second;
  }
  m.fingerprint = h;
  m.timed_out = std::chrono::steady_clock::now() > ctx_.deadline;
  return m;
}

void Worker::send(const std::string& kind, const std::string& phase, int round, SolverId to, const json& body) {
  transport_.send(Envelope{kind, phase, round, id_, to, body.dump()});
}

Message Worker::take_migrate(const std::string& phase, int round, const std::string& type) {
  return inbox_.take(
      [&](const Message& m) {
        return m.envelope.kind == "migrate" && m.envelope.phase == phase && m.envelope.round == round &&
               m.body.value("type", "") == type;
      },
      phase + " " + type + " of round " + std::to_string(round));
}

std::vector<MigrationCandidate> Worker::candidates(AreaId area, AreaId other, Side side) const {
  std::vector<MigrationCandidate> out;
  for (const auto& [id, a] : areas_.at(area)) {
    auto next = a.plan.next();
    if (!next || *next != other) continue;
    out.push_back({id, a.node, ctx_.problem.coord(a.node), a.plan.remaining(), side, false});
  }
  return out;
}

WorkerOutcome Worker::run() {
  WorkerOutcome out;
  const int n = transport_.solver_count();
  int round = 0, cap = 0;
  // Rounds are a pure function of the agent state, so a repeat is a livelock.
  std::map<std::vector<std::uint64_t>, int> seen;
  try {
    for (;; ++round) {
      transport_.broadcast(Envelope{"track", "", round, id_, 0, wire::track_json(track(round)).dump()});
      std::vector<TrackMessage> all;
      for (int k = 0; k < n; ++k) {
        auto m = inbox_.take(
            [&](const Message& msg) { return msg.envelope.kind == "track" && msg.envelope.round == round; },
            "track barrier of round " + std::to_string(round));
        all.push_back(wire::track_from(m.body));
      }
      std::sort(all.begin(), all.end(), [](const auto& a, const auto& b) { return a.solver < b.solver; });

      auto aborting = std::find_if(all.begin(), all.end(), [](const auto& m) { return m.abort; });
      if (aborting != all.end()) {
        out.status = aborting->reason;
        out.detail = aborting->detail;
        break;
      }
      if (std::any_of(all.begin(), all.end(), [](const auto& m) { return m.timed_out; })) {
        out.status = SolveStatus::Timeout;
        out.detail = "solve timeout reached";
        break;
      }
      if (round == 0) {
        int longest = 1;
        for (const auto& m : all) longest = std::max(longest, m.max_remaining);
        cap = ctx_.cfg.round_cap > 0 ? ctx_.cfg.round_cap
                                     : 4 * static_cast<int>(ctx_.part.areas.size()) * longest;
      }
      Tasks tasks = determine_tasks(all, ctx_.part, id_);
      if (tasks.active.empty()) {
        out.status = SolveStatus::Solved;
        break;
      }
      if (round >= cap) {
        out.status = SolveStatus::RoundLimit;
        out.detail = "round cap " + std::to_string(cap) + " reached";
        break;
      }
      std::vector<std::uint64_t> state;
      for (const auto& m : all) state.push_back(m.fingerprint);
      if (auto [it, fresh] = seen.emplace(std::move(state), round); !fresh) {
        out.status = SolveStatus::RoundLimit;
        out.detail = "round " + std::to_string(round) + " repeats the state of round " + std::to_string(it->second);
        break;
      }
      if (tasks.active.count(id_)) run_round(round, tasks);
    }
    out.rounds = round;
    aggregate(out);
  } catch (const ProtocolError& e) {
    out.status = SolveStatus::ProtocolError;
    out.detail = e.what();
    out.rounds = round;
  }
  return out;
}

void Worker::run_round(int round, const Tasks& tasks) {
  RoundState rs;
  rs.round = round;
  rs.pairs = tasks.pairs;
  negotiate(rs, tasks);
  reject(rs, tasks);
  plan(rs);
  confirm(rs, tasks);
}

void Worker::negotiate(RoundState& rs, const Tasks& tasks) {
  const auto& part = ctx_.part;
  for (const auto& pr : tasks.send) {
    json cands = json::array();
    for (const auto& c : candidates(pr.first, pr.second, Side::Incoming)) cands.push_back(wire::candidate_json(c));
    send("migrate", "negotiate", rs.round, part.owner(pr.second),
         {{"type", "request"}, {"pair", wire::pair_json(pr)}, {"candidates", cands}, {"parked", parked(pr.first)}});
  }
  std::map<AreaPair, std::vector<MigrationCandidate>> remote;
  std::map<AreaPair, AreaBlocks> remote_parked;
  for (std::size_t k = 0; k < tasks.recv.size(); ++k) {
    auto m = take_migrate("negotiate", rs.round, "request");
    AreaPair pr = wire::pair_from(m.body.at("pair"));
    if (!std::binary_search(tasks.recv.begin(), tasks.recv.end(), pr) || remote.count(pr)) {
      throw ProtocolError("unexpected negotiation request for pair " + std::to_string(pr.first) + "-" +
                          std::to_string(pr.second));
    }
    auto& list = remote[pr];
    for (const auto& c : m.body.at("candidates")) list.push_back(wire::candidate_from(c, Side::Incoming));
    for (const auto& n : m.body.at("parked")) {
      remote_parked[pr].out.insert(n.get<NodeId>());
      remote_parked[pr].in.insert(n.get<NodeId>());
    }
  }

  std::vector<AreaPair> mine = tasks.recv;
  mine.insert(mine.end(), tasks.local.begin(), tasks.local.end());
  std::sort(mine.begin(), mine.end());
  // A finished agent rests on its goal, so that node cannot be a border.
  std::map<AreaId, AreaBlocks> blocks;
  for (const auto& [area, agents] : areas_) {
    for (NodeId n : parked(area)) {
      blocks[area].out.insert(n);
      blocks[area].in.insert(n);
    }
  }
  for (const auto& pr : mine) {
    const bool local = owns(pr.first);
    auto cands = candidates(pr.second, pr.first, Side::Outgoing);
    auto others = local ? candidates(pr.first, pr.second, Side::Incoming) : remote[pr];
    cands.insert(cands.end(), others.begin(), others.end());
    auto outcome = negotiate_pair(part.links, part.area(pr.second), part.area(pr.first), std::move(cands),
                                  blocks[pr.second], local ? &blocks[pr.first] : &remote_parked[pr]);
    rs.assigned[pr] = outcome.assignments;
    rs.computed_here.insert(pr);
    if (outcome.failed) {
      std::ostringstream os;
      os << "negotiate-failed round=" << rs.round << " pair=" << pr.first << "-" << pr.second;
      events_.push_back({rs.round, id_, os.str()});
    }
    if (!local) {
      json list = json::array();
      for (const auto& a : outcome.assignments) list.push_back(wire::assignment_json(a));
      send("migrate", "negotiate", rs.round, part.owner(pr.first),
           {{"type", "response"}, {"pair", wire::pair_json(pr)}, {"assignments", list}, {"failed", outcome.failed}});
    }
  }
  for (std::size_t k = 0; k < tasks.send.size(); ++k) {
    auto m = take_migrate("negotiate", rs.round, "response");
    AreaPair pr = wire::pair_from(m.body.at("pair"));
    auto& list = rs.assigned[pr];
    for (const auto& a : m.body.at("assignments")) list.push_back(wire::assignment_from(a));
  }
}

void Worker::reject(RoundState& rs, const Tasks& tasks) {
  const auto& part = ctx_.part;
  std::vector<LedgerEntry> entries;
  for (const auto& [pr, list] : rs.assigned) {
    for (const auto& a : list) {
      entries.push_back({pr, part.area_of_node.at(a.from_border), part.area_of_node.at(a.to_border), a,
                         rs.computed_here.count(pr) != 0});
    }
  }
  std::set<AreaId> hosted;
  for (const auto& [a, agents] : areas_) hosted.insert(a);
  const std::set<AgentId> found = detect_rejections(entries, hosted);
  rs.rejected = found;

  auto of_pair = [&](const AreaPair& pr) {
    json out = json::array();
    for (const auto& a : rs.assigned[pr]) {
      if (found.count(a.agent)) out.push_back(a.agent);
    }
    return out;
  };
  for (const auto& pr : tasks.send) {
    send("migrate", "reject", rs.round, part.owner(pr.second),
         {{"type", "request"}, {"pair", wire::pair_json(pr)}, {"rejected", of_pair(pr)}});
  }
  for (std::size_t k = 0; k < tasks.recv.size(); ++k) {
    auto m = take_migrate("reject", rs.round, "request");
    AreaPair pr = wire::pair_from(m.body.at("pair"));
    for (const auto& a : m.body.at("rejected")) rs.rejected.insert(a.get<int>());
    send("migrate", "reject", rs.round, part.owner(pr.first),
         {{"type", "response"}, {"pair", wire::pair_json(pr)}, {"rejected", of_pair(pr)}});
  }
  for (std::size_t k = 0; k < tasks.send.size(); ++k) {
    auto m = take_migrate("reject", rs.round, "response");
    for (const auto& a : m.body.at("rejected")) rs.rejected.insert(a.get<int>());
  }

  for (auto& [pr, list] : rs.assigned) {
    for (const auto& a : list) {
      AreaId origin = part.area_of_node.at(a.from_border);
      bool rejected = rs.rejected.count(a.agent) != 0;
      if (rejected && found.count(a.agent)) {
        std::ostringstream os;
        os << "reject round=" << rs.round << " pair=" << pr.first << "-" << pr.second << " agent=" << a.agent
           << " node=" << (owns(part.area_of_node.at(a.to_border)) ? a.to_border : a.from_border);
        events_.push_back({rs.round, id_, os.str()});
      }
      if (!owns(origin)) continue;
      ledger_.push_back({rs.round, pr, origin, part.area_of_node.at(a.to_border), a, part.owner(pr.second),
                         rejected, false});
    }
    list.erase(std::remove_if(list.begin(), list.end(), [&](const auto& a) { return rs.rejected.count(a.agent); }),
               list.end());
  }
}

void Worker::plan(RoundState& rs) {
  const auto& part = ctx_.part;
  std::map<AgentId, const BorderAssignment*> outgoing;
  std::map<AreaId, std::vector<const BorderAssignment*>> incoming;
  for (const auto& [pr, list] : rs.assigned) {
    for (const auto& a : list) {
      if (owns(part.area_of_node.at(a.from_border))) outgoing[a.agent] = &a;
      AreaId dest = part.area_of_node.at(a.to_border);
      if (owns(dest)) incoming[dest].push_back(&a);
    }
  }
  std::set<AreaId> paired;
  for (const auto& pr : rs.pairs) {
    paired.insert(pr.first);
    paired.insert(pr.second);
  }
  const auto interrupt = [this] { return std::chrono::steady_clock::now() > ctx_.deadline; };

  for (auto& [area_id, agents] : areas_) {
    bool needed = paired.count(area_id) != 0;
    for (const auto& [id, a] : agents) needed = needed || (a.goal && a.node != *a.goal);
    if (!needed) continue;

    const Area& area = part.area(area_id);
    MotionInstance inst;
    inst.graph = LocalGraph::from_area(area);
    for (const auto& [id, a] : agents) {
      MotionAgent m;
      m.id = id;
      m.start = a.node;
      if (a.plan.remaining() == 0) {
        m.goal = a.goal;
      } else if (auto it = outgoing.find(id); it != outgoing.end()) {
        m.goal = it->second->from_border;
        m.migrating = true;
        m.border_distance = manhattan(ctx_.problem.coord(a.node), ctx_.problem.coord(*m.goal));
      }
      inst.agents.push_back(m);
    }
    for (const auto* a : incoming[area_id]) inst.reserved.insert(a->to_border);
    inst.crowding = crowding_guard(static_cast<int>(area.size()), static_cast<int>(agents.size()),
                                   static_cast<int>(incoming[area_id].size()), ctx_.cfg.n_f);

    std::optional<RelaxedPlan> result;
    try {
      result = relax_and_retry(inst, horizon(static_cast<int>(area.size()), ctx_.cfg.F), interrupt);
    } catch (const PlanningInterrupted&) {
      abort(SolveStatus::Timeout, "solve timeout reached while planning area " + std::to_string(area_id));
      rs.failed_areas.insert(area_id);
      continue;
    }
    if (!result) {
      abort(SolveStatus::PlanFailed,
            "no movement plan for area " + std::to_string(area_id) + " in round " + std::to_string(rs.round));
      rs.failed_areas.insert(area_id);
      continue;
    }
    for (AgentId stripped : result->stripped) {
      rs.stripped.insert(stripped);
      const auto& m = *std::find_if(inst.agents.begin(), inst.agents.end(), [&](const auto& x) { return x.id == stripped; });
      std::ostringstream os;
      os << "relax round=" << rs.round << " area=" << area_id << " agent=" << stripped
         << " distance=" << m.border_distance;
      events_.push_back({rs.round, id_, os.str()});
    }
    for (AgentId stripped : result->stripped) {
      for (auto& m : inst.agents) {
        if (m.id == stripped) {
          m.goal.reset();
          m.migrating = false;
        }
      }
    }
    if (auto errors = check_plan(inst, result->plan); !errors.empty()) {
      throw std::logic_error("movement plan for area " + std::to_string(area_id) + " invalid: " + errors.front());
    }
    for (auto& [id, a] : agents) a.node = result->plan.steps.at(id).back();
    round_plans_.push_back({rs.round, area_id, std::move(result->plan)});
  }

  for (const auto& [pr, list] : rs.assigned) {
    for (const auto& a : list) {
      AreaId origin = part.area_of_node.at(a.from_border);
      if (!owns(origin) || rs.failed_areas.count(origin) || rs.stripped.count(a.agent)) continue;
      const auto& st = areas_.at(origin).at(a.agent);
      MigrantRecord rec{a.agent, a.from_border, a.to_border, st.goal, st.plan};
      rec.plan.advance();
      rs.outgoing[pr].push_back(std::move(rec));
    }
  }
}

void Worker::confirm(RoundState& rs, const Tasks& tasks) {
  const auto& part = ctx_.part;
  auto migrants_json = [&](const AreaPair& pr) {
    json out = json::array();
    for (const auto& m : rs.outgoing[pr]) out.push_back(wire::migrant_json(m));
    return out;
  };
  for (const auto& pr : tasks.send) {
    send("migrate", "confirm", rs.round, part.owner(pr.second),
         {{"type", "request"}, {"pair", wire::pair_json(pr)}, {"migrants", migrants_json(pr)}});
  }
  for (std::size_t k = 0; k < tasks.recv.size(); ++k) {
    auto m = take_migrate("confirm", rs.round, "request");
    AreaPair pr = wire::pair_from(m.body.at("pair"));
    for (const auto& r : m.body.at("migrants")) rs.incoming[pr].push_back(wire::migrant_from(r));
    send("migrate", "confirm", rs.round, part.owner(pr.first),
         {{"type", "response"}, {"pair", wire::pair_json(pr)}, {"migrants", migrants_json(pr)}});
  }
  for (std::size_t k = 0; k < tasks.send.size(); ++k) {
    auto m = take_migrate("confirm", rs.round, "response");
    AreaPair pr = wire::pair_from(m.body.at("pair"));
    for (const auto& r : m.body.at("migrants")) rs.incoming[pr].push_back(wire::migrant_from(r));
  }
  for (const auto& pr : tasks.local) rs.incoming[pr] = rs.outgoing[pr];

  // Departures first so intra-solver hand-offs see a consistent state.
  std::set<AgentId> confirmed;
  for (const auto& [pr, list] : rs.outgoing) {
    for (const auto& m : list) {
      areas_.at(part.area_of_node.at(m.node)).erase(m.agent);
      confirmed.insert(m.agent);
    }
  }
  for (auto& rec : ledger_) {
    if (rec.round == rs.round && confirmed.count(rec.assignment.agent)) rec.confirmed = true;
  }
  for (const auto& [pr, list] : rs.incoming) {
    std::map<AreaId, std::vector<MigrantRecord>> by_dest;
    for (const auto& m : list) {
      AreaId dest = part.area_of_node.at(m.to);
      if (!owns(dest)) continue;
      const auto& assigned = rs.assigned[pr];
      bool known = std::any_of(assigned.begin(), assigned.end(), [&](const auto& a) {
        return a.agent == m.agent && a.from_border == m.node && a.to_border == m.to;
      });
      if (!known && !rs.rejected.count(m.agent)) {
        throw ProtocolError("confirmation for unassigned agent " + std::to_string(m.agent));
      }
      by_dest[dest].push_back(m);
    }
    for (const auto& [dest, records] : by_dest) confirm_apply(areas_.at(dest), records, rs.rejected);
  }
}

void Worker::aggregate(WorkerOutcome& out) {
  const int n = transport_.solver_count();
  if (id_ != 1) {
    json plans = json::array(), events = json::array(), ledger = json::array();
    for (const auto& r : round_plans_) plans.push_back(wire::round_plan_json(r));
    for (const auto& e : events_) events.push_back({e.round, e.text});
    for (const auto& l : ledger_) ledger.push_back(wire::ledger_json(l));
    send("aggregate", "", out.rounds, 1, {{"plans", plans}, {"events", events}, {"ledger", ledger}});
    out.plans = round_plans_;
    out.events = events_;
    out.ledger = ledger_;
    return;
  }
  std::vector<RoundPlan> plans = round_plans_;
  std::vector<WorkerEvent> events = events_;
  std::vector<LedgerRecord> ledger = ledger_;
  for (int k = 1; k < n; ++k) {
    auto m = inbox_.take([](const Message& msg) { return msg.envelope.kind == "aggregate"; }, "aggregate");
    for (const auto& r : m.body.at("plans")) plans.push_back(wire::round_plan_from(r));
    for (const auto& e : m.body.at("events")) {
      events.push_back({e.at(0).get<int>(), m.envelope.from, e.at(1).get<std::string>()});
    }
    for (const auto& l : m.body.at("ledger")) ledger.push_back(wire::ledger_from(l));
  }
  std::stable_sort(events.begin(), events.end(), [](const auto& a, const auto& b) {
    return std::tie(a.round, a.solver) < std::tie(b.round, b.solver);
  });
  std::sort(ledger.begin(), ledger.end(), [](const auto& a, const auto& b) {
    return std::tie(a.round, a.pair, a.assignment.agent) < std::tie(b.round, b.pair, b.assignment.agent);
  });
  std::sort(plans.begin(), plans.end(),
            [](const auto& a, const auto& b) { return std::tie(a.round, a.area) < std::tie(b.round, b.area); });
  if (out.status == SolveStatus::Solved) out.solution = stitch(ctx_.problem, plans);
  out.plans = std::move(plans);
  out.events = std::move(events);
  out.ledger = std::move(ledger);
}

}  // namespace dmapf
