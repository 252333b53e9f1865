#pragma once

#include <cstdint>
#include <optional>
#include <set>
#include <string>
#include <string_view>

#include "htrcf/crypto.hpp"

namespace htrcf {

using NodeId = std::uint64_t;
using GroupId = std::uint64_t;

// Residual power is derived (p_ext - spent) rather than stored, so the sum of
// emitted energies reproduces it bit for bit.
struct PowerState {
    double p_ext = 0;
    double spent = 0;
    double p_res() const { return p_ext - spent; }
    bool dead() const { return spent >= p_ext; }
};

enum class NodeStatus { Unclustered, Tentative, Final, GroupManager, Blacklisted };

std::string_view to_string(NodeStatus s);

// Legal moves of the status machine:
// Unclustered (Tentative)* (Final | GroupManager) (Blacklisted)?
bool status_transition_ok(NodeStatus from, NodeStatus to);

struct NodeKeyMaterial {
    crypto::SecretKey secret{};
    std::optional<crypto::RsaKeyPair> rsa;
};

struct NodeRecord {
    NodeId id = 0;
    PowerState power;
    double group_prob = 0;  // G_p, doubles per election round up to 1
    NodeStatus status = NodeStatus::Unclustered;
    NodeKeyMaterial keys;

    void set_status(NodeStatus next);  // throws on an illegal transition
};

NodeRecord create_node(NodeId id, double p_ext, double initial_prob);

struct Group {
    GroupId id = 0;
    NodeId manager = 0;
    std::set<NodeId> members;  // excludes the manager
    std::uint64_t key_epoch = 0;
    crypto::GroupKey group_key{};
};

enum class TraceEventKind { Send, Receive, Beacon, Rekey, Join, Leave, Blacklist, Elect };

std::string_view to_string(TraceEventKind k);
std::optional<TraceEventKind> trace_kind_from(std::string_view name);

struct TraceEvent {
    std::uint64_t time_ms = 0;
    TraceEventKind kind = TraceEventKind::Send;
    NodeId node = 0;
    std::uint64_t bytes = 0;
    double energy_j = 0;
};

// One JSON object per line, keys time/kind/node/bytes/energy.
std::string trace_line(const TraceEvent& ev);
std::optional<TraceEvent> parse_trace_line(const std::string& line);

enum class PowerDirection { Send, Receive };

// Drains up to `amount` joules (saturating at zero charge; the event carries
// what was actually drained) and returns the trace record for it.
TraceEvent consume_power(NodeRecord& node, double amount, PowerDirection dir,
                         std::uint64_t now_ms, std::uint64_t bytes,
                         std::optional<TraceEventKind> kind_override = std::nullopt);

}  // namespace htrcf
