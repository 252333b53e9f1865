#pragma once

#include <map>
#include <optional>
#include <set>
#include <vector>

#include <nlohmann/json.hpp>

#include "htrcf/net_model.hpp"
#include "htrcf/rng.hpp"

namespace htrcf::election {

// Symmetric pairwise link costs; a pair with no entry is unreachable and the
// diagonal is implicitly zero.
class LinkCosts {
public:
    void set(NodeId a, NodeId b, double cost);
    std::optional<double> get(NodeId a, NodeId b) const;
    bool linked(NodeId a, NodeId b) const { return get(a, b).has_value(); }

private:
    std::map<std::pair<NodeId, NodeId>, double> costs_;
};

struct ElectionParams {
    double p_min = 0.05;        // floor for the candidacy probability
    unsigned max_rounds = 0;    // 0: derived from p_min
    LinkCosts link_costs;
};

// GM_p = clamp(g_p * p_res / p_ext, p_min, 1).
double gm_probability(double g_p, const PowerState& power, double p_min);

// Tentative below 1, Final at exactly 1.
NodeStatus node_status(double g_p);

// Join cost between two nodes; unknown pairs are an error.
double intra_cost(NodeId a, NodeId b, const ElectionParams& params);

// Rounds needed for a probability floored at p_min to double past 1, plus the
// closing round: ceil(log2(1/p_min)) + 1. Computed by the same doubling the
// round loop performs, so no float-log edge cases.
unsigned round_bound(double p_min);

struct ClusterAssignment {
    std::vector<Group> groups;        // ordered by manager id
    std::set<NodeId> unassigned;      // always empty on return, kept for inspection
    unsigned rounds_used = 0;
    // Status walk per node across the election, for invariant checks.
    std::map<NodeId, std::vector<NodeStatus>> status_history;
};

// One synchronous election over the given nodes.
//
// Per round, in ascending node id order: every unresolved node whose working
// probability has reached 1 announces Final and becomes a GM; every
// unresolved non-candidate that heard no candidate announcement before this
// round draws candidacy with its current probability (announcing Tentative);
// then unresolved non-candidates join the cheapest Final GM in range unless a
// strictly cheaper Tentative candidate is still pending; finally all
// unresolved working probabilities double, capped at 1. Nodes left uncovered
// when the loop ends vote themselves GM. Group ids count up from
// first_group_id in manager id order. Draw order is part of the contract:
// one unit draw per eligible node per round, ascending id.
ClusterAssignment run_election(const std::vector<NodeRecord>& nodes,
                               const ElectionParams& params, Rng& rng,
                               GroupId first_group_id = 1);

nlohmann::ordered_json to_json(const ClusterAssignment& assignment);

}  // namespace htrcf::election
