// JSON bodies of the protocol envelopes.
#pragma once

#include "dmapf/runtime.hpp"
#include "json.hpp"

namespace dmapf::wire {

using nlohmann::json;

json pair_json(const AreaPair& p);
AreaPair pair_from(const json& j);

json track_json(const TrackMessage& m);
TrackMessage track_from(const json& j);

json candidate_json(const MigrationCandidate& c);
MigrationCandidate candidate_from(const json& j, Side side);

json assignment_json(const BorderAssignment& a);
BorderAssignment assignment_from(const json& j);

json migrant_json(const MigrantRecord& m);
MigrantRecord migrant_from(const json& j);

json round_plan_json(const RoundPlan& r);
RoundPlan round_plan_from(const json& j);

json ledger_json(const LedgerRecord& r);
LedgerRecord ledger_from(const json& j);

SolveStatus status_from(const std::string& name);

}  // namespace dmapf::wire
