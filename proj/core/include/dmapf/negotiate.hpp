// Border assignment between two linked areas, corner blocking and the
// rejection check that follows a round of negotiations.
//
// Terminology: the "host" area belongs to the solver doing the computation;
// candidates leaving the host are Outgoing, candidates entering it Incoming.
#pragma once

#include <optional>
#include <set>
#include <vector>

#include "dmapf/partition.hpp"

namespace dmapf {

enum class Side { Outgoing, Incoming };

struct MigrationCandidate {
  AgentId agent = 0;
  NodeId node = 0;
  Coord coord;
  int tier = 0;  // hops left in the agent's abstract plan, >= 1
  Side side = Side::Outgoing;
  bool mandatory = false;
};

using Tier = std::vector<MigrationCandidate>;

// Groups candidates by tier, highest first. Within a tier outgoing candidates
// precede incoming ones, then ascending agent id.
std::vector<Tier> build_tiers(std::vector<MigrationCandidate> candidates);

struct NegotiationState {
  int n_l = 0;
  int n_bi = 0;
  int n_bo = 0;
  int n_ai = 0;
  int n_ao = 0;
  int n_i = 0;
  int n_o = 0;
  int limit = 0;
};

NegotiationState make_state(int n_l, int n_bi, int n_bo);
// min(min(n_i, n_ai) + min(n_o, n_ao), max(n_ai, n_ao))
int assignment_limit(const NegotiationState& s);

struct Admission {
  std::vector<MigrationCandidate> admitted;  // tier order, mandatory flag set
  NegotiationState state;
};

// Walks tiers from high to low. A side of a tier is mandatory when it fits in
// that side's remaining capacity and the mandatory total stays within
// max(n_ai, n_ao); otherwise it is optional. Stops once both sides are
// saturated.
Admission admit(const std::vector<Tier>& tiers, NegotiationState state);

// A linked border pair seen from the host, with per-direction availability.
struct BorderOption {
  NodeRef host;
  NodeRef remote;
  bool usable_out = true;  // host -> remote
  bool usable_in = true;   // remote -> host
};

struct BorderAssignment {
  AgentId agent = 0;
  NodeId from_border = 0;  // in the agent's current area
  NodeId to_border = 0;    // in the destination area
  int distance = 0;        // Manhattan distance from the agent to from_border
  auto operator<=>(const BorderAssignment&) const = default;
};

// Exactly `limit` admitted candidates onto distinct usable borders, every
// mandatory candidate included, no two in opposite directions over one pair,
// minimising total distance. Ties go to the lexicographically smallest
// (agent, from_border) list. nullopt when infeasible.
std::optional<std::vector<BorderAssignment>> assign_borders(
    const std::vector<MigrationCandidate>& admitted, const std::vector<BorderOption>& borders, int limit);

// Nodes used this round by earlier negotiations, per area and direction.
struct AreaBlocks {
  std::set<NodeId> out;  // used as a from_border by an agent leaving the area
  std::set<NodeId> in;   // used as a to_border by an agent entering the area
};

// Border options between host and remote. A remote's blocks are known only
// when the same solver owns it (intra-solver pair).
std::vector<BorderOption> border_options(const LinkGraph& links, const Area& host, const Area& remote,
                                         const AreaBlocks& host_blocks, const AreaBlocks* remote_blocks);

// Blocks host-side corners used by the assignments (and remote-side corners
// when the remote area is also local), bumping n_bo / n_bi in `state`.
void block_corners(const std::vector<BorderAssignment>& assignments, const Area& host, AreaBlocks& host_blocks,
                   const Area* remote, AreaBlocks* remote_blocks, NegotiationState& state);

struct PairOutcome {
  NegotiationState state;
  std::vector<MigrationCandidate> admitted;
  std::vector<BorderAssignment> assignments;
  bool failed = false;
};

// Full negotiation for one pair: tiers, admission, assignment, corner blocking.
PairOutcome negotiate_pair(const LinkGraph& links, const Area& host, const Area& remote,
                           std::vector<MigrationCandidate> candidates, AreaBlocks& host_blocks,
                           AreaBlocks* remote_blocks);

// One assignment as recorded by a solver for the rejection check.
struct LedgerEntry {
  AreaPair pair;
  AreaId origin = 0;
  AreaId destination = 0;
  BorderAssignment assignment;
  bool computed_locally = false;
};

// For every node of the host areas targeted by two or more incoming
// assignments (or used by two or more outgoing ones), keeps one and returns
// the agents of the others. The locally computed assignment wins; remaining
// ties go to the smallest (pair, agent).
std::set<AgentId> detect_rejections(const std::vector<LedgerEntry>& entries, const std::set<AreaId>& host_areas);

}  // namespace dmapf
