#include "wire.hpp"

namespace dmapf::wire {

json pair_json(const AreaPair& p) { return json::array({p.first, p.second}); }

AreaPair pair_from(const json& j) { return {j.at(0).get<int>(), j.at(1).get<int>()}; }

json track_json(const TrackMessage& m) {
  json pending = json::array();
  for (const auto& p : m.pending) pending.push_back({p.agent, p.current, p.next});
  json j{{"solver", m.solver},       {"has_work", m.has_work},         {"abort", m.abort},
         {"timed_out", m.timed_out}, {"max_remaining", m.max_remaining}, {"fingerprint", m.fingerprint},
         {"pending", pending}};
  if (m.abort) {
    j["reason"] = to_string(m.reason);
    j["detail"] = m.detail;
  }
  return j;
}

TrackMessage track_from(const json& j) {
  TrackMessage m;
  m.solver = j.at("solver").get<int>();
  m.has_work = j.at("has_work").get<bool>();
  m.abort = j.at("abort").get<bool>();
  m.timed_out = j.at("timed_out").get<bool>();
  m.max_remaining = j.at("max_remaining").get<int>();
  m.fingerprint = j.at("fingerprint").get<std::uint64_t>();
  if (m.abort) {
    m.reason = status_from(j.at("reason").get<std::string>());
    m.detail = j.value("detail", "");
  }
  for (const auto& p : j.at("pending")) m.pending.push_back({p.at(0).get<int>(), p.at(1).get<int>(), p.at(2).get<int>()});
  return m;
}

json candidate_json(const MigrationCandidate& c) {
  return {{"agent", c.agent}, {"node", c.node}, {"x", c.coord.x}, {"y", c.coord.y}, {"tier", c.tier}};
}

MigrationCandidate candidate_from(const json& j, Side side) {
  MigrationCandidate c;
  c.agent = j.at("agent").get<int>();
  c.node = j.at("node").get<int>();
  c.coord = {j.at("x").get<int>(), j.at("y").get<int>()};
  c.tier = j.at("tier").get<int>();
  c.side = side;
  return c;
}

json assignment_json(const BorderAssignment& a) {
  return {{"agent", a.agent}, {"from", a.from_border}, {"to", a.to_border}, {"distance", a.distance}};
}

BorderAssignment assignment_from(const json& j) {
  return {j.at("agent").get<int>(), j.at("from").get<int>(), j.at("to").get<int>(), j.at("distance").get<int>()};
}

json migrant_json(const MigrantRecord& m) {
  return {{"agent", m.agent},
          {"node", m.node},
          {"to", m.to},
          {"goal", m.goal ? json(*m.goal) : json(nullptr)},
          {"plan", m.plan.areas()}};
}

MigrantRecord migrant_from(const json& j) {
  MigrantRecord m;
  m.agent = j.at("agent").get<int>();
  m.node = j.at("node").get<int>();
  m.to = j.at("to").get<int>();
  if (!j.at("goal").is_null()) m.goal = j.at("goal").get<int>();
  m.plan = AbstractPlan(j.at("plan").get<std::vector<AreaId>>());
  return m;
}

json round_plan_json(const RoundPlan& r) {
  json steps = json::array();
  for (const auto& [agent, path] : r.plan.steps) steps.push_back({{"agent", agent}, {"path", path}});
  return {{"round", r.round}, {"area", r.area}, {"length", r.plan.length}, {"steps", steps}};
}

RoundPlan round_plan_from(const json& j) {
  RoundPlan r;
  r.round = j.at("round").get<int>();
  r.area = j.at("area").get<int>();
  r.plan.length = j.at("length").get<int>();
  for (const auto& s : j.at("steps")) r.plan.steps[s.at("agent").get<int>()] = s.at("path").get<std::vector<NodeId>>();
  return r;
}

json ledger_json(const LedgerRecord& r) {
  return {{"round", r.round},
          {"pair", pair_json(r.pair)},
          {"origin", r.origin},
          {"destination", r.destination},
          {"assignment", assignment_json(r.assignment)},
          {"computed_by", r.computed_by},
          {"rejected", r.rejected},
          {"confirmed", r.confirmed}};
}

LedgerRecord ledger_from(const json& j) {
  LedgerRecord r;
  r.round = j.at("round").get<int>();
  r.pair = pair_from(j.at("pair"));
  r.origin = j.at("origin").get<int>();
  r.destination = j.at("destination").get<int>();
  r.assignment = assignment_from(j.at("assignment"));
  r.computed_by = j.at("computed_by").get<int>();
  r.rejected = j.at("rejected").get<bool>();
  r.confirmed = j.at("confirmed").get<bool>();
  return r;
}

SolveStatus status_from(const std::string& name) {
  for (auto s : {SolveStatus::Solved, SolveStatus::Unsolvable, SolveStatus::PlanFailed, SolveStatus::RoundLimit,
                 SolveStatus::Timeout, SolveStatus::ProtocolError}) {
    if (to_string(s) == name) return s;
  }
  throw ProtocolError("unknown status " + name);
}

}  // namespace dmapf::wire
