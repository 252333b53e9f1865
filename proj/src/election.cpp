#include "htrcf/election.hpp"

#include <algorithm>
#include <limits>
#include <stdexcept>

namespace htrcf::election {

void LinkCosts::set(NodeId a, NodeId b, double cost) {
    if (cost < 0) throw std::invalid_argument("LinkCosts: negative cost");
    if (a == b) return;
    costs_[std::minmax(a, b)] = cost;
}

std::optional<double> LinkCosts::get(NodeId a, NodeId b) const {
    if (a == b) return 0.0;
    auto it = costs_.find(std::minmax(a, b));
    if (it == costs_.end()) return std::nullopt;
    return it->second;
}

double gm_probability(double g_p, const PowerState& power, double p_min) {
    if (!(g_p > 0) || g_p > 1) throw std::invalid_argument("gm_probability: g_p outside (0, 1]");
    if (!(p_min > 0) || p_min > 1) throw std::invalid_argument("gm_probability: p_min outside (0, 1]");
    if (!(power.p_ext > 0)) throw std::invalid_argument("gm_probability: p_ext must be positive");
    double p = g_p * power.p_res() / power.p_ext;
    if (p < p_min) p = p_min;
    if (p > 1) p = 1;
    return p;
}

NodeStatus node_status(double g_p) {
    if (!(g_p > 0) || g_p > 1) throw std::invalid_argument("node_status: g_p outside (0, 1]");
    return g_p == 1.0 ? NodeStatus::Final : NodeStatus::Tentative;
}

double intra_cost(NodeId a, NodeId b, const ElectionParams& params) {
    auto c = params.link_costs.get(a, b);
    if (!c) throw std::invalid_argument("intra_cost: no link between nodes");
    return *c;
}

unsigned round_bound(double p_min) {
    if (!(p_min > 0) || p_min > 1) throw std::invalid_argument("round_bound: p_min outside (0, 1]");
    unsigned doublings = 0;
    double w = p_min;
    while (w < 1.0) { w *= 2; ++doublings; }
    return doublings + 1;
}

namespace {

struct Slot {
    const NodeRecord* node;
    double w;                 // working probability, doubles per round
    bool candidate = false;   // announced Tentative
    bool finalized = false;   // GM or joined a Final GM
    bool is_gm = false;
    std::optional<NodeId> joined;       // GM joined (final membership)
    std::optional<NodeId> provisional;  // cheapest Tentative heard, bookkeeping only
};

}  // namespace

ClusterAssignment run_election(const std::vector<NodeRecord>& nodes,
                               const ElectionParams& params, Rng& rng,
                               GroupId first_group_id) {
    ClusterAssignment out;
    if (nodes.empty()) return out;

    unsigned bound = round_bound(params.p_min);
    unsigned rounds = params.max_rounds > 0 ? std::min(params.max_rounds, bound) : bound;

    std::map<NodeId, Slot> slots;
    for (const auto& n : nodes) {
        if (slots.count(n.id)) throw std::invalid_argument("run_election: duplicate node id");
        Slot s;
        s.node = &n;
        s.w = gm_probability(n.group_prob, n.power, params.p_min);
        slots.emplace(n.id, s);
        out.status_history[n.id].push_back(NodeStatus::Unclustered);
    }

    auto note = [&](NodeId id, NodeStatus st) {
        auto& h = out.status_history[id];
        if (h.back() != st) h.push_back(st);
    };

    // Announcements broadcast at a round's end are heard from the next round
    // on; id-ordered iteration inside a round never sees same-round draws.
    std::set<NodeId> heard_tentative;
    std::set<NodeId> heard_final;

    auto in_range = [&](NodeId listener, NodeId speaker) {
        return params.link_costs.get(listener, speaker).has_value();
    };

    for (unsigned round = 1; round <= rounds; ++round) {
        out.rounds_used = round;
        std::vector<NodeId> new_tentative, new_final;

        // Announcement phase. Only candidates and nodes that hear no
        // candidate march to Final at w = 1; a node already waiting on a
        // heard candidate joins it instead of self-promoting.
        for (auto& [id, s] : slots) {
            if (s.finalized) continue;
            auto promote = [&] {
                s.w = 1.0;
                s.candidate = true;
                s.finalized = true;
                s.is_gm = true;
                new_final.push_back(id);
                note(id, NodeStatus::GroupManager);
            };
            if (s.candidate) {
                if (s.w >= 1.0) promote();
                continue;
            }
            bool heard_any = false;
            for (NodeId c : heard_tentative)
                if (c != id && in_range(id, c)) { heard_any = true; break; }
            if (!heard_any)
                for (NodeId c : heard_final)
                    if (c != id && in_range(id, c)) { heard_any = true; break; }
            if (heard_any) continue;  // wait on the heard candidate instead
            if (s.w >= 1.0) {
                promote();
                continue;
            }
            if (rng.unit_double() < s.w) {
                s.candidate = true;
                new_tentative.push_back(id);
                note(id, NodeStatus::Tentative);
            }
        }
        for (NodeId id : new_tentative) heard_tentative.insert(id);
        for (NodeId id : new_final) { heard_final.insert(id); heard_tentative.erase(id); }

        // Join phase: full visibility of everything announced so far.
        for (auto& [id, s] : slots) {
            if (s.finalized || s.candidate) continue;

            std::optional<NodeId> best_final;
            double best_final_cost = std::numeric_limits<double>::infinity();
            for (NodeId g : heard_final) {
                auto c = params.link_costs.get(id, g);
                if (!c) continue;
                if (*c < best_final_cost || (*c == best_final_cost && best_final && g < *best_final)) {
                    best_final = g;
                    best_final_cost = *c;
                }
            }
            std::optional<NodeId> best_tent;
            double best_tent_cost = std::numeric_limits<double>::infinity();
            for (NodeId t : heard_tentative) {
                if (slots.at(t).finalized) continue;
                auto c = params.link_costs.get(id, t);
                if (!c) continue;
                if (*c < best_tent_cost || (*c == best_tent_cost && best_tent && t < *best_tent)) {
                    best_tent = t;
                    best_tent_cost = *c;
                }
            }

            if (best_final && (!best_tent || best_final_cost <= best_tent_cost)) {
                s.finalized = true;
                s.joined = best_final;
                note(id, NodeStatus::Final);
            } else if (best_tent) {
                s.provisional = best_tent;
                note(id, NodeStatus::Tentative);
            }
        }

        bool all_done = std::all_of(slots.begin(), slots.end(),
                                    [](const auto& kv) { return kv.second.finalized; });
        if (all_done) break;

        // Doubling phase.
        for (auto& [id, s] : slots) {
            if (!s.finalized) s.w = std::min(s.w * 2, 1.0);
        }
    }

    // Closing sweep (only reachable when max_rounds caps the loop early):
    // join any Final GM in range, otherwise vote self GM.
    for (auto& [id, s] : slots) {
        if (s.finalized) continue;
        std::optional<NodeId> best;
        double best_cost = std::numeric_limits<double>::infinity();
        for (NodeId g : heard_final) {
            auto c = params.link_costs.get(id, g);
            if (c && *c < best_cost) { best = g; best_cost = *c; }
        }
        s.finalized = true;
        if (best) {
            s.joined = best;
            note(id, NodeStatus::Final);
        } else {
            s.is_gm = true;
            note(id, NodeStatus::GroupManager);
        }
    }

    GroupId next_id = first_group_id;
    std::map<NodeId, GroupId> gm_to_group;
    for (auto& [id, s] : slots) {
        if (!s.is_gm) continue;
        Group g;
        g.id = next_id++;
        g.manager = id;
        gm_to_group[id] = g.id;
        out.groups.push_back(std::move(g));
    }
    for (auto& [id, s] : slots) {
        if (s.is_gm || !s.joined) continue;
        out.groups[gm_to_group.at(*s.joined) - first_group_id].members.insert(id);
    }
    for (auto& [id, s] : slots) {
        if (!s.is_gm && !s.joined) out.unassigned.insert(id);
    }
    return out;
}

nlohmann::ordered_json to_json(const ClusterAssignment& assignment) {
    nlohmann::ordered_json groups = nlohmann::ordered_json::array();
    for (const auto& g : assignment.groups) {
        nlohmann::ordered_json jg;
        jg["id"] = g.id;
        jg["manager"] = g.manager;
        jg["members"] = g.members;
        groups.push_back(std::move(jg));
    }
    nlohmann::ordered_json j;
    j["groups"] = std::move(groups);
    j["rounds_used"] = assignment.rounds_used;
    return j;
}

}  // namespace htrcf::election
