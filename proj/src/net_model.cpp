#include "htrcf/net_model.hpp"

#include <nlohmann/json.hpp>
#include <stdexcept>

namespace htrcf {

std::string_view to_string(NodeStatus s) {
    switch (s) {
        case NodeStatus::Unclustered: return "Unclustered";
        case NodeStatus::Tentative: return "Tentative";
        case NodeStatus::Final: return "Final";
        case NodeStatus::GroupManager: return "GroupManager";
        case NodeStatus::Blacklisted: return "Blacklisted";
    }
    return "?";
}

bool status_transition_ok(NodeStatus from, NodeStatus to) {
    switch (from) {
        case NodeStatus::Unclustered:
            return to == NodeStatus::Tentative || to == NodeStatus::Final ||
                   to == NodeStatus::GroupManager;
        case NodeStatus::Tentative:
            return to == NodeStatus::Tentative || to == NodeStatus::Final ||
                   to == NodeStatus::GroupManager;
        case NodeStatus::Final:
        case NodeStatus::GroupManager:
            return to == NodeStatus::Blacklisted;
        case NodeStatus::Blacklisted:
            return false;
    }
    return false;
}

void NodeRecord::set_status(NodeStatus next) {
    if (!status_transition_ok(status, next)) {
        throw std::logic_error("NodeRecord: illegal status transition " +
                               std::string(to_string(status)) + " -> " +
                               std::string(to_string(next)));
    }
    status = next;
}

NodeRecord create_node(NodeId id, double p_ext, double initial_prob) {
    if (id == 0) throw std::invalid_argument("create_node: node ids are positive");
    if (!(p_ext > 0)) throw std::invalid_argument("create_node: p_ext must be positive");
    if (!(initial_prob > 0) || initial_prob > 1)
        throw std::invalid_argument("create_node: initial_prob must be in (0, 1]");
    NodeRecord node;
    node.id = id;
    node.power = PowerState{p_ext, 0};
    node.group_prob = initial_prob;
    node.status = NodeStatus::Unclustered;
    return node;
}

std::string_view to_string(TraceEventKind k) {
    switch (k) {
        case TraceEventKind::Send: return "Send";
        case TraceEventKind::Receive: return "Receive";
        case TraceEventKind::Beacon: return "Beacon";
        case TraceEventKind::Rekey: return "Rekey";
        case TraceEventKind::Join: return "Join";
        case TraceEventKind::Leave: return "Leave";
        case TraceEventKind::Blacklist: return "Blacklist";
        case TraceEventKind::Elect: return "Elect";
    }
    return "?";
}

std::optional<TraceEventKind> trace_kind_from(std::string_view name) {
    for (auto k : {TraceEventKind::Send, TraceEventKind::Receive, TraceEventKind::Beacon,
                   TraceEventKind::Rekey, TraceEventKind::Join, TraceEventKind::Leave,
                   TraceEventKind::Blacklist, TraceEventKind::Elect}) {
        if (to_string(k) == name) return k;
    }
    return std::nullopt;
}

std::string trace_line(const TraceEvent& ev) {
    nlohmann::ordered_json j;
    j["time"] = ev.time_ms;
    j["kind"] = to_string(ev.kind);
    j["node"] = ev.node;
    j["bytes"] = ev.bytes;
    j["energy"] = ev.energy_j;
    return j.dump();
}

std::optional<TraceEvent> parse_trace_line(const std::string& line) {
    auto j = nlohmann::json::parse(line, nullptr, false);
    if (j.is_discarded() || !j.is_object()) return std::nullopt;
    auto kind = trace_kind_from(j.value("kind", ""));
    if (!kind) return std::nullopt;
    TraceEvent ev;
    ev.time_ms = j.value("time", std::uint64_t{0});
    ev.kind = *kind;
    ev.node = j.value("node", std::uint64_t{0});
    ev.bytes = j.value("bytes", std::uint64_t{0});
    ev.energy_j = j.value("energy", 0.0);
    return ev;
}

TraceEvent consume_power(NodeRecord& node, double amount, PowerDirection dir,
                         std::uint64_t now_ms, std::uint64_t bytes,
                         std::optional<TraceEventKind> kind_override) {
    if (amount < 0) throw std::invalid_argument("consume_power: negative amount");
    double available = node.power.p_res();
    double drained = amount < available ? amount : available;
    node.power.spent += drained;

    TraceEvent ev;
    ev.time_ms = now_ms;
    ev.kind = kind_override.value_or(dir == PowerDirection::Send ? TraceEventKind::Send
                                                                 : TraceEventKind::Receive);
    ev.node = node.id;
    ev.bytes = bytes;
    ev.energy_j = drained;
    return ev;
}

}  // namespace htrcf
