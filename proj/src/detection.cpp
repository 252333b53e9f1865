#include "htrcf/detection.hpp"

#include <stdexcept>

namespace htrcf::detection {

BeaconMonitor::BeaconMonitor(std::uint64_t beacon_interval_ms, unsigned k_missed)
    : interval_ms_(beacon_interval_ms), k_missed_(k_missed) {
    if (beacon_interval_ms == 0) throw std::invalid_argument("BeaconMonitor: zero interval");
    if (k_missed == 0) throw std::invalid_argument("BeaconMonitor: zero k_missed");
}

void BeaconMonitor::track(NodeId node, std::uint64_t now) {
    if (now < latest_ms_) throw std::invalid_argument("BeaconMonitor: time ran backwards");
    latest_ms_ = now;
    if (blacklist_.count(node)) return;
    last_seen_.emplace(node, now);
}

void BeaconMonitor::untrack(NodeId node) {
    last_seen_.erase(node);
}

void BeaconMonitor::record_beacon(NodeId node, std::uint64_t now) {
    if (now < latest_ms_) throw std::invalid_argument("BeaconMonitor: time ran backwards");
    latest_ms_ = now;
    if (blacklist_.count(node)) return;
    last_seen_[node] = now;
}

std::vector<NodeId> BeaconMonitor::sweep(std::uint64_t now) {
    if (now < latest_ms_) throw std::invalid_argument("BeaconMonitor: time ran backwards");
    latest_ms_ = now;
    std::uint64_t allowance = std::uint64_t{k_missed_} * interval_ms_;
    std::vector<NodeId> fresh;
    for (auto it = last_seen_.begin(); it != last_seen_.end();) {
        if (now - it->second > allowance) {
            blacklist_.insert(it->first);
            fresh.push_back(it->first);
            it = last_seen_.erase(it);
        } else {
            ++it;
        }
    }
    return fresh;
}

void BeaconMonitor::report_dangerous(NodeId node) {
    blacklist_.insert(node);
    last_seen_.erase(node);
}

}  // namespace htrcf::detection
