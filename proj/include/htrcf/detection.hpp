#pragma once

#include <cstdint>
#include <map>
#include <set>
#include <vector>

#include "htrcf/net_model.hpp"

namespace htrcf::detection {

// Per-GM liveness ledger over member beacons. A node joins the blacklist when
// its silence strictly exceeds k_missed beacon intervals, or immediately on a
// dangerous-behavior report. The blacklist only grows.
class BeaconMonitor {
public:
    BeaconMonitor(std::uint64_t beacon_interval_ms, unsigned k_missed);

    // Start watching a node; its silence clock starts at `now`.
    void track(NodeId node, std::uint64_t now);
    // Stop watching (voluntary departure). Blacklist entries stay.
    void untrack(NodeId node);

    // Beacon heard. Time must not run backwards. Beacons from blacklisted
    // nodes are ignored; a beacon from an untracked node starts tracking it.
    void record_beacon(NodeId node, std::uint64_t now);

    // Blacklists every tracked node with now - last_seen > k_missed * interval
    // and returns the newly blacklisted ids in ascending order.
    std::vector<NodeId> sweep(std::uint64_t now);

    // Immediate, idempotent blacklist (failed handshake, observed misuse).
    void report_dangerous(NodeId node);

    bool blacklisted(NodeId node) const { return blacklist_.count(node) > 0; }
    bool tracked(NodeId node) const { return last_seen_.count(node) > 0; }
    const std::set<NodeId>& blacklist() const { return blacklist_; }
    std::uint64_t interval_ms() const { return interval_ms_; }
    unsigned k_missed() const { return k_missed_; }

private:
    std::uint64_t interval_ms_;
    unsigned k_missed_;
    std::uint64_t latest_ms_ = 0;
    std::map<NodeId, std::uint64_t> last_seen_;
    std::set<NodeId> blacklist_;
};

}  // namespace htrcf::detection
