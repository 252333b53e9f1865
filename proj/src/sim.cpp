#include "htrcf/sim.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <limits>
#include <regex>
#include <sstream>

#include "htrcf/detection.hpp"
#include "htrcf/election.hpp"
#include "htrcf/rng.hpp"

namespace htrcf::sim {

namespace {

// Wire-size constants. KDC links carry a small fixed frame around RSA
// envelopes; the GM's secret-fetch exchange is two short infrastructure
// messages. Symmetric messages carry their 16-byte nonce in the clear.
constexpr std::uint64_t kEnvelopeHeaderBytes = 16;
constexpr std::uint64_t kFetchRequestBytes = 16;
constexpr std::uint64_t kFetchResponseBytes = 48;
constexpr std::uint64_t kNonceWireBytes = 16;
constexpr GroupId kFlatGroupId = 1;

bool radio_kind(TraceEventKind k) {
    return k == TraceEventKind::Send || k == TraceEventKind::Receive ||
           k == TraceEventKind::Beacon;
}

int churn_priority(ChurnOp::Kind k) {
    switch (k) {
        case ChurnOp::Kind::Leave: return 0;
        case ChurnOp::Kind::Join: return 1;
        case ChurnOp::Kind::Silence: return 2;
    }
    return 2;
}

std::size_t line_of(const std::string& raw, std::size_t byte_off) {
    std::size_t end = std::min(byte_off > 0 ? byte_off - 1 : 0, raw.size());
    return 1 + static_cast<std::size_t>(std::count(raw.begin(), raw.begin() + end, '\n'));
}

// Byte offset of the index-th object inside the "churn" array, skipping
// string contents; nullopt when the raw text does not have that shape.
std::optional<std::size_t> churn_entry_offset(const std::string& raw, std::size_t index) {
    std::size_t key = raw.find("\"churn\"");
    if (key == std::string::npos) return std::nullopt;
    std::size_t open = raw.find('[', key);
    if (open == std::string::npos) return std::nullopt;
    int depth = 0;
    bool in_str = false, esc = false;
    std::size_t count = 0;
    for (std::size_t i = open + 1; i < raw.size(); ++i) {
        char ch = raw[i];
        if (in_str) {
            if (esc) esc = false;
            else if (ch == '\\') esc = true;
            else if (ch == '"') in_str = false;
            continue;
        }
        if (ch == '"') { in_str = true; continue; }
        if (ch == '{') {
            if (depth == 0 && count == index) return i;
            if (depth == 0) ++count;
            ++depth;
        } else if (ch == '}') {
            --depth;
        } else if (ch == ']' && depth == 0) {
            break;
        }
    }
    return std::nullopt;
}

std::string fmt_double(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

}  // namespace

std::string_view to_string(ChurnOp::Kind k) {
    switch (k) {
        case ChurnOp::Kind::Join: return "join";
        case ChurnOp::Kind::Leave: return "leave";
        case ChurnOp::Kind::Silence: return "silence";
    }
    return "?";
}

ScenarioConfig::ScenarioConfig() : dh(crypto::default_dh_params()) {}

// ---------------------------------------------------------------------------
// Config parsing and validation

namespace {

void reject_unknown_keys(const nlohmann::json& j, std::initializer_list<const char*> allowed,
                         const char* where) {
    for (auto it = j.begin(); it != j.end(); ++it) {
        bool ok = false;
        for (const char* k : allowed)
            if (it.key() == k) { ok = true; break; }
        if (!ok) throw ConfigError(std::string(where) + ": unknown key \"" + it.key() + "\"");
    }
}

}  // namespace

ScenarioConfig config_from_json(const nlohmann::json& j) {
    if (!j.is_object()) throw ConfigError("config must be a JSON object");
    reject_unknown_keys(j,
                        {"seed", "node_count", "deferred", "p_ext", "initial_prob", "election",
                         "crypto", "beacon", "power", "link", "area", "radio_range",
                         "periodic_rekey_ms", "duration_ms", "churn", "baseline"},
                        "config");
    ScenarioConfig cfg;
    try {
        cfg.seed = j.value("seed", cfg.seed);
        cfg.node_count = j.value("node_count", cfg.node_count);
        if (j.contains("deferred"))
            cfg.deferred = j.at("deferred").get<std::vector<NodeId>>();
        if (j.contains("p_ext")) {
            const auto& p = j.at("p_ext");
            if (p.is_number()) {
                cfg.p_ext.kind = PextSpec::Kind::Fixed;
                cfg.p_ext.value = p.get<double>();
            } else {
                reject_unknown_keys(p, {"type", "value", "min", "max"}, "p_ext");
                std::string type = p.at("type").get<std::string>();
                if (type == "fixed") {
                    cfg.p_ext.kind = PextSpec::Kind::Fixed;
                    cfg.p_ext.value = p.at("value").get<double>();
                } else if (type == "uniform") {
                    cfg.p_ext.kind = PextSpec::Kind::Uniform;
                    cfg.p_ext.min = p.at("min").get<double>();
                    cfg.p_ext.max = p.at("max").get<double>();
                } else {
                    throw ConfigError("p_ext.type must be \"fixed\" or \"uniform\"");
                }
            }
        }
        cfg.initial_prob = j.value("initial_prob", cfg.initial_prob);
        if (j.contains("election")) {
            const auto& e = j.at("election");
            reject_unknown_keys(e, {"p_min", "max_rounds"}, "election");
            cfg.p_min = e.value("p_min", cfg.p_min);
            cfg.max_rounds = e.value("max_rounds", cfg.max_rounds);
        }
        if (j.contains("crypto")) {
            const auto& c = j.at("crypto");
            reject_unknown_keys(c, {"rsa_bits", "dh"}, "crypto");
            cfg.rsa_bits = c.value("rsa_bits", cfg.rsa_bits);
            if (c.contains("dh")) {
                const auto& d = c.at("dh");
                if (d.is_string()) {
                    std::string name = d.get<std::string>();
                    if (name == "default") {
                        cfg.dh = crypto::default_dh_params();
                    } else if (name == "toy") {
                        cfg.dh = crypto::DhParams{BigUint{23}, BigUint{5}};
                    } else {
                        throw ConfigError("crypto.dh: unknown preset \"" + name + "\"");
                    }
                } else {
                    reject_unknown_keys(d, {"modulus_hex", "generator"}, "crypto.dh");
                    cfg.dh.modulus = BigUint::from_hex(d.at("modulus_hex").get<std::string>());
                    cfg.dh.generator = BigUint{d.at("generator").get<std::uint64_t>()};
                }
            }
        }
        if (j.contains("beacon")) {
            const auto& b = j.at("beacon");
            reject_unknown_keys(b, {"interval_ms", "k_missed", "bytes"}, "beacon");
            cfg.beacon_interval_ms = b.value("interval_ms", cfg.beacon_interval_ms);
            cfg.k_missed = b.value("k_missed", cfg.k_missed);
            cfg.beacon_bytes = b.value("bytes", cfg.beacon_bytes);
        }
        if (j.contains("power")) {
            const auto& p = j.at("power");
            reject_unknown_keys(p, {"c_send", "c_recv"}, "power");
            cfg.c_send = p.value("c_send", cfg.c_send);
            cfg.c_recv = p.value("c_recv", cfg.c_recv);
        }
        if (j.contains("link")) {
            const auto& l = j.at("link");
            reject_unknown_keys(l, {"rate_bytes_per_ms", "hop_latency_ms"}, "link");
            cfg.link_rate = l.value("rate_bytes_per_ms", cfg.link_rate);
            cfg.hop_latency_ms = l.value("hop_latency_ms", cfg.hop_latency_ms);
        }
        cfg.area = j.value("area", cfg.area);
        cfg.radio_range = j.value("radio_range", cfg.radio_range);
        cfg.periodic_rekey_ms = j.value("periodic_rekey_ms", cfg.periodic_rekey_ms);
        cfg.duration_ms = j.value("duration_ms", cfg.duration_ms);
        if (j.contains("churn")) {
            const auto& arr = j.at("churn");
            if (!arr.is_array()) throw ConfigError("churn must be an array");
            for (std::size_t i = 0; i < arr.size(); ++i) {
                const auto& e = arr[i];
                std::string at = "churn[" + std::to_string(i) + "]";
                if (!e.is_object()) throw ConfigError(at + ": entry must be an object");
                reject_unknown_keys(e, {"time_ms", "op", "node"}, at.c_str());
                ChurnOp op;
                op.time_ms = e.at("time_ms").get<std::uint64_t>();
                op.node = e.at("node").get<NodeId>();
                std::string kind = e.at("op").get<std::string>();
                if (kind == "join") op.op = ChurnOp::Kind::Join;
                else if (kind == "leave") op.op = ChurnOp::Kind::Leave;
                else if (kind == "silence") op.op = ChurnOp::Kind::Silence;
                else throw ConfigError(at + ": op must be join, leave, or silence");
                cfg.churn.push_back(op);
            }
        }
        cfg.baseline = j.value("baseline", cfg.baseline);
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("config: ") + e.what());
    }
    validate_config(cfg);
    return cfg;
}

void validate_config(const ScenarioConfig& cfg) {
    if (cfg.node_count == 0) throw ConfigError("node_count must be at least 1");
    if (cfg.p_ext.kind == PextSpec::Kind::Fixed) {
        if (!(cfg.p_ext.value > 0)) throw ConfigError("p_ext must be positive");
    } else {
        if (!(cfg.p_ext.min > 0) || !(cfg.p_ext.max >= cfg.p_ext.min))
            throw ConfigError("p_ext uniform range needs 0 < min <= max");
    }
    if (!(cfg.initial_prob > 0) || cfg.initial_prob > 1)
        throw ConfigError("initial_prob must be in (0, 1]");
    if (!(cfg.p_min > 0) || cfg.p_min > 1) throw ConfigError("election.p_min must be in (0, 1]");
    if (cfg.rsa_bits < 16) throw ConfigError("crypto.rsa_bits must be at least 16");
    if (cfg.dh.modulus.bit_length() < 3 || cfg.dh.generator < BigUint{2} ||
        !(cfg.dh.generator < cfg.dh.modulus))
        throw ConfigError("crypto.dh parameters are degenerate");
    if (cfg.beacon_interval_ms == 0) throw ConfigError("beacon.interval_ms must be positive");
    if (cfg.k_missed == 0) throw ConfigError("beacon.k_missed must be at least 1");
    if (cfg.beacon_bytes == 0) throw ConfigError("beacon.bytes must be positive");
    if (cfg.c_send < 0 || cfg.c_recv < 0) throw ConfigError("power costs must be non-negative");
    if (!(cfg.link_rate > 0)) throw ConfigError("link.rate_bytes_per_ms must be positive");
    if (cfg.hop_latency_ms < 0) throw ConfigError("link.hop_latency_ms must be non-negative");
    if (!(cfg.area > 0)) throw ConfigError("area must be positive");
    if (!(cfg.radio_range > 0)) throw ConfigError("radio_range must be positive");
    if (cfg.duration_ms / cfg.beacon_interval_ms > 2'000'000)
        throw ConfigError("duration_ms / beacon.interval_ms exceeds the tick budget");
    if (cfg.periodic_rekey_ms > 0 && cfg.duration_ms / cfg.periodic_rekey_ms > 2'000'000)
        throw ConfigError("duration_ms / periodic_rekey_ms exceeds the tick budget");

    std::set<NodeId> known;
    for (NodeId id = 1; id <= cfg.node_count; ++id) known.insert(id);
    std::set<NodeId> deferred_seen;
    for (NodeId d : cfg.deferred) {
        if (d == 0) throw ConfigError("deferred: node ids are positive");
        if (d <= cfg.node_count)
            throw ConfigError("deferred: node " + std::to_string(d) + " is already initial");
        if (!deferred_seen.insert(d).second)
            throw ConfigError("deferred: duplicate node " + std::to_string(d));
        known.insert(d);
    }

    // Replay the script in execution order; report errors against the
    // original entry index so the text scan can attach a line number.
    std::vector<std::size_t> order(cfg.churn.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        const auto& x = cfg.churn[a];
        const auto& y = cfg.churn[b];
        return std::tuple(x.time_ms, churn_priority(x.op), x.node) <
               std::tuple(y.time_ms, churn_priority(y.op), y.node);
    });
    std::set<NodeId> present;
    for (NodeId id = 1; id <= cfg.node_count; ++id) present.insert(id);
    std::set<NodeId> silenced_ever;
    for (std::size_t idx : order) {
        const auto& op = cfg.churn[idx];
        std::string at = "churn[" + std::to_string(idx) + "]: ";
        std::string who = std::to_string(op.node);
        if (op.node == 0) throw ConfigError(at + "node ids are positive");
        if (op.time_ms > cfg.duration_ms)
            throw ConfigError(at + "time " + std::to_string(op.time_ms) + " past duration " +
                              std::to_string(cfg.duration_ms));
        if (!known.count(op.node)) throw ConfigError(at + "unknown node " + who);
        switch (op.op) {
            case ChurnOp::Kind::Join:
                if (present.count(op.node))
                    throw ConfigError(at + "join of node " + who + " already present");
                if (silenced_ever.count(op.node))
                    throw ConfigError(at + "join of silenced node " + who);
                present.insert(op.node);
                break;
            case ChurnOp::Kind::Leave:
                if (!present.count(op.node))
                    throw ConfigError(at + "leave of absent node " + who);
                present.erase(op.node);
                break;
            case ChurnOp::Kind::Silence:
                if (!present.count(op.node))
                    throw ConfigError(at + "silence of absent node " + who);
                silenced_ever.insert(op.node);
                break;
        }
    }
}

ScenarioConfig parse_config_text(const std::string& raw) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(raw);
    } catch (const nlohmann::json::parse_error& e) {
        throw ConfigError("line " + std::to_string(line_of(raw, e.byte)) + ": " + e.what());
    }
    try {
        return config_from_json(j);
    } catch (const ConfigError& e) {
        std::string msg = e.what();
        static const std::regex idx_re(R"(^churn\[(\d+)\])");
        std::smatch m;
        if (std::regex_search(msg, m, idx_re)) {
            if (auto off = churn_entry_offset(raw, std::stoul(m[1].str())))
                throw ConfigError("line " + std::to_string(line_of(raw, *off + 1)) + ": " + msg);
        }
        throw;
    }
}

nlohmann::ordered_json to_json(const ScenarioConfig& cfg) {
    nlohmann::ordered_json j;
    j["seed"] = cfg.seed;
    j["node_count"] = cfg.node_count;
    if (!cfg.deferred.empty()) j["deferred"] = cfg.deferred;
    if (cfg.p_ext.kind == PextSpec::Kind::Fixed) {
        j["p_ext"] = {{"type", "fixed"}, {"value", cfg.p_ext.value}};
    } else {
        j["p_ext"] = {{"type", "uniform"}, {"min", cfg.p_ext.min}, {"max", cfg.p_ext.max}};
    }
    j["initial_prob"] = cfg.initial_prob;
    j["election"] = {{"p_min", cfg.p_min}, {"max_rounds", cfg.max_rounds}};
    j["crypto"] = {{"rsa_bits", cfg.rsa_bits},
                   {"dh", {{"modulus_hex", cfg.dh.modulus.to_hex()},
                           {"generator", cfg.dh.generator.to_u64()}}}};
    j["beacon"] = {{"interval_ms", cfg.beacon_interval_ms},
                   {"k_missed", cfg.k_missed},
                   {"bytes", cfg.beacon_bytes}};
    j["power"] = {{"c_send", cfg.c_send}, {"c_recv", cfg.c_recv}};
    j["link"] = {{"rate_bytes_per_ms", cfg.link_rate}, {"hop_latency_ms", cfg.hop_latency_ms}};
    j["area"] = cfg.area;
    j["radio_range"] = cfg.radio_range;
    j["periodic_rekey_ms"] = cfg.periodic_rekey_ms;
    j["duration_ms"] = cfg.duration_ms;
    nlohmann::ordered_json churn = nlohmann::ordered_json::array();
    for (const auto& op : cfg.churn) {
        churn.push_back({{"time_ms", op.time_ms},
                         {"op", std::string(to_string(op.op))},
                         {"node", op.node}});
    }
    j["churn"] = std::move(churn);
    j["baseline"] = cfg.baseline;
    return j;
}

// ---------------------------------------------------------------------------
// Metric totals and report serialization

double total_power(std::span<const TraceEvent> trace) {
    double sum = 0;
    for (const auto& ev : trace)
        if (radio_kind(ev.kind)) sum += ev.energy_j;
    return sum;
}

double total_time(std::span<const TraceEvent> trace, double link_rate, double hop_latency_ms) {
    double sum = 0;
    for (const auto& ev : trace)
        if (radio_kind(ev.kind))
            sum += static_cast<double>(ev.bytes) / link_rate + hop_latency_ms;
    return sum;
}

std::string trace_to_text(std::span<const TraceEvent> trace) {
    std::string out;
    for (const auto& ev : trace) {
        out += trace_line(ev);
        out += '\n';
    }
    return out;
}

nlohmann::ordered_json to_json(const MetricsReport& r) {
    nlohmann::ordered_json j;
    j["scheme"] = r.scheme;
    j["seed"] = r.seed;
    j["node_count"] = r.node_count;
    j["duration_ms"] = r.duration_ms;
    j["t_pow_j"] = r.t_pow;
    nlohmann::ordered_json per;
    for (const auto& [gid, v] : r.t_pow_per_group) per[std::to_string(gid)] = v;
    per["ungrouped"] = r.t_pow_ungrouped;
    j["t_pow_per_group_j"] = std::move(per);
    j["t_time_ms"] = r.t_time;
    j["rekey_count"] = r.rekey_count;
    j["rekey_messages"] = r.rekey_messages;
    j["rekey_bytes"] = r.rekey_bytes;
    j["messages_sent"] = r.messages_sent;
    j["bytes_sent"] = r.bytes_sent;
    j["blacklist_count"] = r.blacklist_count;
    j["groups_formed"] = r.groups_formed;
    j["election_rounds"] = r.election_rounds;
    j["memory_peak_bytes"] = r.memory_peak_bytes;
    return j;
}

std::string report_csv(const MetricsReport& r) {
    std::string out =
        "scheme,seed,node_count,duration_ms,t_pow_j,t_time_ms,rekey_count,rekey_messages,"
        "rekey_bytes,messages_sent,bytes_sent,blacklist_count,groups_formed,election_rounds,"
        "memory_peak_bytes\n";
    out += r.scheme + ',' + std::to_string(r.seed) + ',' + std::to_string(r.node_count) + ',' +
           std::to_string(r.duration_ms) + ',' + fmt_double(r.t_pow) + ',' +
           fmt_double(r.t_time) + ',' + std::to_string(r.rekey_count) + ',' +
           std::to_string(r.rekey_messages) + ',' + std::to_string(r.rekey_bytes) + ',' +
           std::to_string(r.messages_sent) + ',' + std::to_string(r.bytes_sent) + ',' +
           std::to_string(r.blacklist_count) + ',' + std::to_string(r.groups_formed) + ',' +
           std::to_string(r.election_rounds) + ',' + std::to_string(r.memory_peak_bytes) + '\n';
    return out;
}

// ---------------------------------------------------------------------------
// The engine

namespace {

struct QueuedEvent {
    std::uint64_t time = 0;
    int prio = 0;  // Leave 0, Join 1, Silence 2, beacons 3, sweeps 4, periodic 5
    NodeId node = 0;
    int churn = -1;  // index into cfg.churn, -1 for ticks
};

class Engine {
public:
    Engine(const ScenarioConfig& cfg, bool flat)
        : cfg_(cfg), flat_(flat), kdc_(cfg.seed, cfg.rsa_bits) {}

    SimulationResult run();

private:
    struct LiveGroup {
        keymgmt::GroupSession session;
        detection::BeaconMonitor monitor;
    };

    ScenarioConfig cfg_;
    bool flat_;
    keymgmt::Kdc kdc_;
    std::uint64_t now_ = 0;

    std::vector<NodeId> known_;
    std::map<NodeId, std::pair<double, double>> pos_;
    election::LinkCosts costs_;

    std::map<NodeId, NodeRecord> nodes_;
    std::set<NodeId> present_, silenced_;
    std::map<NodeId, GroupId> member_of_;  // managers included
    std::map<GroupId, LiveGroup> live_;
    GroupId next_gid_ = 1;
    unsigned election_count_ = 0;
    std::uint64_t handshake_count_ = 0;

    NodeId flat_coord_ = 0;
    std::set<NodeId> flat_members_;
    crypto::GroupKey flat_key_{};
    std::optional<detection::BeaconMonitor> flat_monitor_;

    std::vector<TraceEvent> trace_;
    World world_;
    std::map<GroupId, double> pow_group_;
    double pow_ungrouped_ = 0;
    std::uint64_t rekey_messages_ = 0, rekey_bytes_ = 0;
    std::uint64_t groups_formed_ = 0, mem_peak_ = 0;

    double dist(NodeId a, NodeId b) const {
        const auto& pa = pos_.at(a);
        const auto& pb = pos_.at(b);
        return std::hypot(pa.first - pb.first, pa.second - pb.second);
    }

    void emit(const TraceEvent& ev) {
        if (radio_kind(ev.kind)) {
            auto it = member_of_.find(ev.node);
            if (it != member_of_.end()) pow_group_[it->second] += ev.energy_j;
            else pow_ungrouped_ += ev.energy_j;
        }
        trace_.push_back(ev);
    }

    void marker(TraceEventKind kind, NodeId node) { emit({now_, kind, node, 0, 0.0}); }

    void radio_send(NodeId from, std::uint64_t bytes,
                    TraceEventKind kind = TraceEventKind::Send) {
        emit(consume_power(nodes_.at(from), cfg_.c_send * static_cast<double>(bytes),
                           PowerDirection::Send, now_, bytes, kind));
    }

    void radio_receive(NodeId to, std::uint64_t bytes) {
        emit(consume_power(nodes_.at(to), cfg_.c_recv * static_cast<double>(bytes),
                           PowerDirection::Receive, now_, bytes));
    }

    void count_rekey_wire(std::uint64_t bytes) {
        ++rekey_messages_;
        rekey_bytes_ += bytes;
    }

    void record_key(NodeId id, const crypto::KeyBytes& key) {
        world_.keys_held[id].push_back({now_, key});
    }

    void log_membership(NodeId id, bool joined) {
        world_.membership_log.push_back({now_, id, joined});
    }

    // Era boundary: the node re-enters the status machine from scratch.
    void new_segment(NodeId id) {
        world_.status_segments[id].push_back({NodeStatus::Unclustered});
        nodes_.at(id).status = NodeStatus::Unclustered;
        nodes_.at(id).group_prob = cfg_.initial_prob;
    }

    void advance_status(NodeId id, NodeStatus s) {
        nodes_.at(id).set_status(s);
        auto& segs = world_.status_segments[id];
        if (segs.empty()) segs.push_back({});
        segs.back().push_back(s);
    }

    void set_segment(NodeId id, const std::vector<NodeStatus>& hist) {
        world_.status_segments[id].push_back(hist);
        nodes_.at(id).status = hist.back();
    }

    void setup();
    void initial_formation();
    void do_issuance(GroupId gid, NodeId gm, const std::set<NodeId>& members);
    void emit_transcript(GroupId gid, NodeId manager, const keymgmt::RekeyTranscript& t,
                         const std::set<NodeId>& broadcast_to, const crypto::KeyBytes& new_key,
                         const std::set<NodeId>& recipients, std::uint64_t old_epoch);
    void handle_leave(NodeId x, keymgmt::RekeyTrigger::Kind kind);
    void manager_departure(GroupId gid, NodeId gm);
    void handle_join(NodeId x);
    void handle_silence(NodeId x);
    void beacon_tick();
    void sweep_tick();
    void periodic_tick();

    void flat_formation();
    void flat_distribute(keymgmt::RekeyTrigger trig, bool as_transcript);
    void flat_leave(NodeId x, keymgmt::RekeyTrigger::Kind kind);
    void flat_join(NodeId x);

    void run_election_over(const std::set<NodeId>& ids);
    std::vector<QueuedEvent> build_queue() const;
    void snapshot_memory();
    MetricsReport build_report() const;
};

void Engine::setup() {
    for (NodeId id = 1; id <= cfg_.node_count; ++id) known_.push_back(id);
    known_.insert(known_.end(), cfg_.deferred.begin(), cfg_.deferred.end());
    std::sort(known_.begin(), known_.end());

    Rng pos_rng = Rng::derive(cfg_.seed, "pos");
    for (NodeId id : known_) {
        double x = pos_rng.unit_double() * cfg_.area;
        double y = pos_rng.unit_double() * cfg_.area;
        pos_.emplace(id, std::make_pair(x, y));
    }
    Rng pext_rng = Rng::derive(cfg_.seed, "pext");
    for (NodeId id : known_) {
        double pe = cfg_.p_ext.kind == PextSpec::Kind::Fixed
                        ? cfg_.p_ext.value
                        : cfg_.p_ext.min +
                              pext_rng.unit_double() * (cfg_.p_ext.max - cfg_.p_ext.min);
        nodes_.emplace(id, create_node(id, pe, cfg_.initial_prob));
    }
    for (std::size_t i = 0; i < known_.size(); ++i) {
        for (std::size_t k = i + 1; k < known_.size(); ++k) {
            double d = dist(known_[i], known_[k]);
            if (d <= cfg_.radio_range) costs_.set(known_[i], known_[k], d);
        }
    }
    for (NodeId id = 1; id <= cfg_.node_count; ++id) {
        present_.insert(id);
        kdc_.register_node(id);
        record_key(id, kdc_.secret_of(id).bytes);
        log_membership(id, true);
    }
}

void Engine::run_election_over(const std::set<NodeId>& ids) {
    std::vector<NodeRecord> recs;
    for (NodeId id : ids) recs.push_back(nodes_.at(id));
    election::ElectionParams params;
    params.p_min = cfg_.p_min;
    params.max_rounds = cfg_.max_rounds;
    params.link_costs = costs_;
    Rng er = Rng::derive(cfg_.seed, "elect:" + std::to_string(election_count_++));
    auto asg = election::run_election(recs, params, er, next_gid_);
    next_gid_ += asg.groups.size();
    world_.election_rounds.push_back(asg.rounds_used);
    for (const auto& [id, hist] : asg.status_history) set_segment(id, hist);
    for (const auto& g : asg.groups) {
        marker(TraceEventKind::Elect, g.manager);
        do_issuance(g.id, g.manager, g.members);
    }
}

void Engine::initial_formation() {
    std::set<NodeId> initial;
    for (NodeId id = 1; id <= cfg_.node_count; ++id) initial.insert(id);
    run_election_over(initial);
}

void Engine::do_issuance(GroupId gid, NodeId gm, const std::set<NodeId>& members) {
    auto iss = kdc_.issue_group_key(gid, gm, members);
    member_of_[gm] = gid;
    for (NodeId m : members) member_of_[m] = gid;

    marker(TraceEventKind::Rekey, gm);
    std::uint64_t env_bytes = kEnvelopeHeaderBytes + iss.envelope.rsa_ciphertext.size();
    radio_receive(gm, env_bytes);
    count_rekey_wire(env_bytes);
    world_.envelopes.push_back({now_, gm, env_bytes});
    record_key(gm, iss.key.bytes);
    for (const auto& [m, sec] : iss.member_secrets) record_key(gm, sec.bytes);

    // Formation-time distribution: the fresh key goes to each member under
    // its K_i (there is no previous group key and no DH session yet).
    for (const auto& [m, sec] : iss.member_secrets) {
        auto nonce =
            keymgmt::rekey_nonce(gid, iss.key.epoch, m, keymgmt::WrapKind::MemberSecretKey);
        Bytes ct = crypto::sym_encrypt(sec.bytes, nonce, keymgmt::encode_group_key(iss.key));
        std::uint64_t wire = kNonceWireBytes + ct.size();
        radio_send(gm, wire);
        radio_receive(m, wire);
        count_rekey_wire(wire);
        world_.ciphertexts.push_back(
            {now_, gid, iss.key.epoch, keymgmt::WrapKind::MemberSecretKey, m, nonce, ct});
        record_key(m, iss.key.bytes);
    }

    Group g{gid, gm, members, iss.key.epoch, iss.key};
    std::uint64_t nonce_seed = Rng::derive(cfg_.seed, "gm:" + std::to_string(gid)).next_u64();
    keymgmt::GroupSession session(std::move(g), iss.key, iss.member_secrets, nonce_seed);
    detection::BeaconMonitor mon(cfg_.beacon_interval_ms, cfg_.k_missed);
    for (NodeId m : members) mon.track(m, now_);
    live_.emplace(gid, LiveGroup{std::move(session), std::move(mon)});
    ++groups_formed_;
}

void Engine::emit_transcript(GroupId gid, NodeId manager, const keymgmt::RekeyTranscript& t,
                             const std::set<NodeId>& broadcast_to,
                             const crypto::KeyBytes& new_key,
                             const std::set<NodeId>& recipients, std::uint64_t old_epoch) {
    world_.transcripts.push_back(t);
    if (t.new_epoch == old_epoch) return;  // dissolved to empty: nothing was rekeyed
    marker(TraceEventKind::Rekey, manager);
    for (const auto& msg : t.messages) {
        std::uint64_t wire = kNonceWireBytes + msg.ciphertext.size();
        radio_send(manager, wire);
        if (msg.to) {
            radio_receive(*msg.to, wire);
        } else {
            for (NodeId r : broadcast_to) radio_receive(r, wire);
        }
        count_rekey_wire(wire);
        world_.ciphertexts.push_back(
            {now_, gid, t.new_epoch, msg.wrap, msg.to, msg.nonce, msg.ciphertext});
    }
    for (NodeId r : recipients) record_key(r, new_key);
}

void Engine::handle_leave(NodeId x, keymgmt::RekeyTrigger::Kind kind) {
    if (!present_.count(x)) return;  // already excluded; script op is a no-op
    marker(kind == keymgmt::RekeyTrigger::Kind::Blacklist ? TraceEventKind::Blacklist
                                                          : TraceEventKind::Leave,
           x);
    auto mo = member_of_.find(x);
    if (mo == member_of_.end()) {
        present_.erase(x);
        silenced_.erase(x);
        log_membership(x, false);
        return;
    }
    GroupId gid = mo->second;
    if (live_.at(gid).session.group().manager == x) {
        manager_departure(gid, x);
        return;
    }
    auto& lg = live_.at(gid);
    std::uint64_t old_epoch = lg.session.current_key().epoch;
    auto t = lg.session.handle_leave(x, kind);
    lg.monitor.untrack(x);
    member_of_.erase(x);
    present_.erase(x);
    silenced_.erase(x);
    log_membership(x, false);
    std::set<NodeId> recips = lg.session.group().members;
    recips.insert(lg.session.group().manager);
    emit_transcript(gid, lg.session.group().manager, t, {}, lg.session.current_key().bytes,
                    recips, old_epoch);
}

void Engine::manager_departure(GroupId gid, NodeId gm) {
    std::set<NodeId> survivors = live_.at(gid).session.group().members;
    present_.erase(gm);
    member_of_.erase(gm);
    silenced_.erase(gm);
    log_membership(gm, false);
    live_.erase(gid);
    for (NodeId s : survivors) member_of_.erase(s);

    // The manager held every member's K_i, so all survivors get fresh ones
    // from the KDC before any new key is issued.
    for (NodeId s : survivors) {
        auto sec = kdc_.rotate_secret(s);
        Bytes env = keymgmt::rsa_wrap(kdc_.rsa_of(s).public_key(),
                                      std::span<const std::uint8_t>(sec.bytes));
        std::uint64_t wire = kEnvelopeHeaderBytes + env.size();
        radio_receive(s, wire);
        count_rekey_wire(wire);
        world_.envelopes.push_back({now_, s, wire});
        record_key(s, sec.bytes);
    }
    if (survivors.empty()) return;
    for (NodeId s : survivors) {
        nodes_.at(s).status = NodeStatus::Unclustered;  // era reset before re-election
        nodes_.at(s).group_prob = cfg_.initial_prob;
    }
    run_election_over(survivors);
}

void Engine::handle_join(NodeId x) {
    if (world_.blacklist.count(x) || present_.count(x)) return;
    present_.insert(x);
    log_membership(x, true);
    bool fresh = !kdc_.registered(x);
    kdc_.register_node(x);
    if (fresh) record_key(x, kdc_.secret_of(x).bytes);
    new_segment(x);
    marker(TraceEventKind::Join, x);

    if (live_.empty()) {
        // Nobody to join: the newcomer votes itself manager of a fresh group.
        GroupId gid = next_gid_++;
        marker(TraceEventKind::Elect, x);
        advance_status(x, NodeStatus::GroupManager);
        do_issuance(gid, x, {});
        return;
    }

    // Cheapest manager by link distance; lowest manager id breaks ties.
    NodeId mgr = 0;
    GroupId gid = 0;
    double best = std::numeric_limits<double>::infinity();
    for (const auto& [g, lg] : live_) {
        NodeId m = lg.session.group().manager;
        double d = dist(x, m);
        if (d < best || (d == best && m < mgr)) {
            best = d;
            mgr = m;
            gid = g;
        }
    }
    member_of_[x] = gid;

    Rng hs = Rng::derive(cfg_.seed, "hs:" + std::to_string(handshake_count_++));
    auto rep = crypto::run_handshake(cfg_.dh, hs);
    std::uint64_t mod = cfg_.dh.modulus.byte_length();
    const std::uint64_t sizes[4] = {mod, mod, 64, 64};
    for (std::size_t i = 0; i < rep.messages && i < 4; ++i) {
        NodeId from = (i % 2 == 0) ? x : mgr;
        NodeId to = (i % 2 == 0) ? mgr : x;
        radio_send(from, sizes[i]);
        radio_receive(to, sizes[i]);
        count_rekey_wire(sizes[i]);
    }
    if (rep.outcome != crypto::HandshakeOutcome::Verified) {
        // Failed pairwise verification: the peer is reported dangerous.
        member_of_.erase(x);
        present_.erase(x);
        world_.blacklist.insert(x);
        marker(TraceEventKind::Blacklist, x);
        log_membership(x, false);
        return;
    }
    record_key(x, rep.session_key);
    record_key(mgr, rep.session_key);

    // The manager fetches the joiner's K_i over the KDC link.
    radio_send(mgr, kFetchRequestBytes);
    count_rekey_wire(kFetchRequestBytes);
    radio_receive(mgr, kFetchResponseBytes);
    count_rekey_wire(kFetchResponseBytes);

    auto& lg = live_.at(gid);
    std::uint64_t old_epoch = lg.session.current_key().epoch;
    auto t = lg.session.handle_join(x, kdc_.secret_of(x), rep.session_key, true, false);
    record_key(mgr, kdc_.secret_of(x).bytes);
    std::set<NodeId> old_members = lg.session.group().members;
    old_members.erase(x);
    std::set<NodeId> recips = lg.session.group().members;
    recips.insert(mgr);
    emit_transcript(gid, mgr, t, old_members, lg.session.current_key().bytes, recips, old_epoch);
    lg.monitor.track(x, now_);
    advance_status(x, NodeStatus::Final);
}

void Engine::handle_silence(NodeId x) {
    if (!present_.count(x)) return;
    auto it = member_of_.find(x);
    if (it != member_of_.end()) {
        NodeId mgr = flat_ ? flat_coord_ : live_.at(it->second).session.group().manager;
        if (mgr == x) return;  // managers do not beacon; silencing one is a no-op
    }
    silenced_.insert(x);
}

void Engine::beacon_tick() {
    for (NodeId x : present_) {
        if (silenced_.count(x)) continue;
        auto it = member_of_.find(x);
        if (it == member_of_.end()) continue;
        NodeId mgr = flat_ ? flat_coord_ : live_.at(it->second).session.group().manager;
        if (mgr == x) continue;
        if (nodes_.at(x).power.dead()) continue;  // drained nodes stop beaconing
        radio_send(x, cfg_.beacon_bytes, TraceEventKind::Beacon);
        radio_receive(mgr, cfg_.beacon_bytes);
        if (flat_) flat_monitor_->record_beacon(x, now_);
        else live_.at(it->second).monitor.record_beacon(x, now_);
    }
}

void Engine::sweep_tick() {
    if (flat_) {
        if (!flat_monitor_) return;
        for (NodeId b : flat_monitor_->sweep(now_)) {
            world_.blacklist.insert(b);
            advance_status(b, NodeStatus::Blacklisted);
            flat_leave(b, keymgmt::RekeyTrigger::Kind::Blacklist);
        }
        return;
    }
    std::vector<GroupId> gids;
    for (const auto& [g, lg] : live_) gids.push_back(g);
    for (GroupId gid : gids) {
        auto it = live_.find(gid);
        if (it == live_.end()) continue;
        for (NodeId b : it->second.monitor.sweep(now_)) {
            world_.blacklist.insert(b);
            advance_status(b, NodeStatus::Blacklisted);
            handle_leave(b, keymgmt::RekeyTrigger::Kind::Blacklist);
        }
    }
}

void Engine::periodic_tick() {
    if (flat_) {
        if (flat_coord_ != 0)
            flat_distribute({keymgmt::RekeyTrigger::Kind::Periodic, std::nullopt}, true);
        return;
    }
    std::vector<GroupId> gids;
    for (const auto& [g, lg] : live_) gids.push_back(g);
    for (GroupId gid : gids) {
        auto& lg = live_.at(gid);
        std::uint64_t old_epoch = lg.session.current_key().epoch;
        auto t = lg.session.periodic_rekey();
        std::set<NodeId> recips = lg.session.group().members;
        NodeId mgr = lg.session.group().manager;
        recips.insert(mgr);
        emit_transcript(gid, mgr, t, lg.session.group().members,
                        lg.session.current_key().bytes, recips, old_epoch);
    }
}

// --- flat baseline -----------------------------------------------------

void Engine::flat_formation() {
    flat_coord_ = 1;
    for (NodeId id = 2; id <= cfg_.node_count; ++id) flat_members_.insert(id);
    for (NodeId id = 1; id <= cfg_.node_count; ++id) member_of_[id] = kFlatGroupId;
    set_segment(flat_coord_, {NodeStatus::Unclustered, NodeStatus::GroupManager});
    for (NodeId m : flat_members_) set_segment(m, {NodeStatus::Unclustered, NodeStatus::Final});
    flat_monitor_.emplace(cfg_.beacon_interval_ms, cfg_.k_missed);
    for (NodeId m : flat_members_) flat_monitor_->track(m, now_);
    next_gid_ = kFlatGroupId + 1;
    ++groups_formed_;
    flat_distribute({keymgmt::RekeyTrigger::Kind::Periodic, std::nullopt}, false);
}

void Engine::flat_distribute(keymgmt::RekeyTrigger trig, bool as_transcript) {
    auto iss = kdc_.issue_group_key(kFlatGroupId, flat_coord_, flat_members_);
    flat_key_ = iss.key;
    marker(TraceEventKind::Rekey, flat_coord_);
    std::uint64_t env_bytes = kEnvelopeHeaderBytes + iss.envelope.rsa_ciphertext.size();
    radio_receive(flat_coord_, env_bytes);
    count_rekey_wire(env_bytes);
    world_.envelopes.push_back({now_, flat_coord_, env_bytes});
    record_key(flat_coord_, iss.key.bytes);
    for (const auto& [m, sec] : iss.member_secrets) record_key(flat_coord_, sec.bytes);

    keymgmt::RekeyTranscript t;
    t.group = kFlatGroupId;
    t.trigger = trig;
    t.new_epoch = iss.key.epoch;
    for (const auto& [m, sec] : iss.member_secrets) {
        auto nonce = keymgmt::rekey_nonce(kFlatGroupId, iss.key.epoch, m,
                                          keymgmt::WrapKind::MemberSecretKey);
        Bytes ct = crypto::sym_encrypt(sec.bytes, nonce, keymgmt::encode_group_key(iss.key));
        std::uint64_t wire = kNonceWireBytes + ct.size();
        radio_send(flat_coord_, wire);
        radio_receive(m, wire);
        count_rekey_wire(wire);
        world_.ciphertexts.push_back(
            {now_, kFlatGroupId, iss.key.epoch, keymgmt::WrapKind::MemberSecretKey, m, nonce, ct});
        record_key(m, iss.key.bytes);
        t.messages.push_back({m, keymgmt::WrapKind::MemberSecretKey, nonce, ct});
    }
    if (as_transcript) world_.transcripts.push_back(std::move(t));
}

void Engine::flat_leave(NodeId x, keymgmt::RekeyTrigger::Kind kind) {
    if (!present_.count(x)) return;
    marker(kind == keymgmt::RekeyTrigger::Kind::Blacklist ? TraceEventKind::Blacklist
                                                          : TraceEventKind::Leave,
           x);
    present_.erase(x);
    silenced_.erase(x);
    member_of_.erase(x);
    log_membership(x, false);
    if (x == flat_coord_) {
        // The coordinator held every K_i: rotate them all, then promote the
        // lowest surviving id and push a fresh key.
        for (NodeId s : flat_members_) {
            auto sec = kdc_.rotate_secret(s);
            Bytes env = keymgmt::rsa_wrap(kdc_.rsa_of(s).public_key(),
                                          std::span<const std::uint8_t>(sec.bytes));
            std::uint64_t wire = kEnvelopeHeaderBytes + env.size();
            radio_receive(s, wire);
            count_rekey_wire(wire);
            world_.envelopes.push_back({now_, s, wire});
            record_key(s, sec.bytes);
        }
        if (flat_members_.empty()) {
            flat_coord_ = 0;
            flat_monitor_.reset();
            return;
        }
        flat_coord_ = *flat_members_.begin();
        flat_members_.erase(flat_coord_);
        set_segment(flat_coord_, {NodeStatus::Unclustered, NodeStatus::GroupManager});
        for (NodeId m : flat_members_)
            set_segment(m, {NodeStatus::Unclustered, NodeStatus::Final});
        flat_monitor_.emplace(cfg_.beacon_interval_ms, cfg_.k_missed);
        for (NodeId m : flat_members_) flat_monitor_->track(m, now_);
        flat_distribute({kind, x}, true);
        return;
    }
    flat_members_.erase(x);
    flat_monitor_->untrack(x);
    flat_distribute({kind, x}, true);
}

void Engine::flat_join(NodeId x) {
    if (world_.blacklist.count(x) || present_.count(x)) return;
    present_.insert(x);
    log_membership(x, true);
    bool fresh = !kdc_.registered(x);
    kdc_.register_node(x);
    if (fresh) record_key(x, kdc_.secret_of(x).bytes);
    new_segment(x);
    marker(TraceEventKind::Join, x);
    member_of_[x] = kFlatGroupId;
    if (flat_coord_ == 0) {  // the flat group died out entirely; x revives it
        flat_coord_ = x;
        advance_status(x, NodeStatus::GroupManager);
        flat_monitor_.emplace(cfg_.beacon_interval_ms, cfg_.k_missed);
        flat_distribute({keymgmt::RekeyTrigger::Kind::Join, x}, false);
        return;
    }
    flat_members_.insert(x);
    advance_status(x, NodeStatus::Final);
    flat_monitor_->track(x, now_);
    flat_distribute({keymgmt::RekeyTrigger::Kind::Join, x}, true);
}

// --- queue and finishing -------------------------------------------------

std::vector<QueuedEvent> Engine::build_queue() const {
    std::vector<QueuedEvent> q;
    for (std::size_t i = 0; i < cfg_.churn.size(); ++i) {
        const auto& op = cfg_.churn[i];
        q.push_back({op.time_ms, churn_priority(op.op), op.node, static_cast<int>(i)});
    }
    for (std::uint64_t k = 1; k <= cfg_.duration_ms / cfg_.beacon_interval_ms; ++k) {
        q.push_back({k * cfg_.beacon_interval_ms, 3, 0, -1});
        q.push_back({k * cfg_.beacon_interval_ms, 4, 0, -1});
    }
    if (cfg_.periodic_rekey_ms > 0) {
        for (std::uint64_t k = 1; k <= cfg_.duration_ms / cfg_.periodic_rekey_ms; ++k)
            q.push_back({k * cfg_.periodic_rekey_ms, 5, 0, -1});
    }
    std::stable_sort(q.begin(), q.end(), [](const QueuedEvent& a, const QueuedEvent& b) {
        return std::tuple(a.time, a.prio, a.node) < std::tuple(b.time, b.prio, b.node);
    });
    return q;
}

void Engine::snapshot_memory() {
    for (NodeId x : present_) {
        if (!kdc_.registered(x)) continue;
        std::uint64_t sz = 32;  // own K_i
        sz += 2 * kdc_.rsa_of(x).n.byte_length();  // own modulus + private exponent
        auto it = member_of_.find(x);
        if (it != member_of_.end()) {
            sz += 32;  // current group key
            if (flat_) {
                if (x == flat_coord_) sz += 32 * flat_members_.size();
            } else {
                const auto& g = live_.at(it->second).session.group();
                if (g.manager == x) sz += 32 * g.members.size();
            }
        }
        mem_peak_ = std::max(mem_peak_, sz);
    }
}

MetricsReport Engine::build_report() const {
    MetricsReport r;
    r.scheme = flat_ ? "baseline" : "htrcf";
    r.seed = cfg_.seed;
    r.node_count = cfg_.node_count;
    r.duration_ms = cfg_.duration_ms;
    r.t_pow = total_power(trace_);
    r.t_pow_per_group = pow_group_;
    r.t_pow_ungrouped = pow_ungrouped_;
    r.t_time = total_time(trace_, cfg_.link_rate, cfg_.hop_latency_ms);
    for (const auto& ev : trace_) {
        if (ev.kind == TraceEventKind::Send || ev.kind == TraceEventKind::Beacon) {
            ++r.messages_sent;
            r.bytes_sent += ev.bytes;
        } else if (ev.kind == TraceEventKind::Rekey) {
            ++r.rekey_count;
        } else if (ev.kind == TraceEventKind::Blacklist) {
            ++r.blacklist_count;
        }
    }
    r.rekey_messages = rekey_messages_;
    r.rekey_bytes = rekey_bytes_;
    r.groups_formed = groups_formed_;
    r.election_rounds = world_.election_rounds.empty() ? 0 : world_.election_rounds.front();
    r.memory_peak_bytes = mem_peak_;
    return r;
}

SimulationResult Engine::run() {
    setup();
    if (flat_) flat_formation();
    else initial_formation();
    snapshot_memory();

    for (const auto& ev : build_queue()) {
        now_ = ev.time;
        if (ev.churn >= 0) {
            const auto& op = cfg_.churn[static_cast<std::size_t>(ev.churn)];
            switch (op.op) {
                case ChurnOp::Kind::Leave:
                    if (flat_) flat_leave(op.node, keymgmt::RekeyTrigger::Kind::Leave);
                    else handle_leave(op.node, keymgmt::RekeyTrigger::Kind::Leave);
                    break;
                case ChurnOp::Kind::Join:
                    if (flat_) flat_join(op.node);
                    else handle_join(op.node);
                    break;
                case ChurnOp::Kind::Silence:
                    handle_silence(op.node);
                    break;
            }
        } else if (ev.prio == 3) {
            beacon_tick();
        } else if (ev.prio == 4) {
            sweep_tick();
        } else {
            periodic_tick();
        }
        snapshot_memory();
    }

    SimulationResult result;
    world_.nodes = nodes_;
    world_.present = present_;
    if (flat_) {
        if (flat_coord_ != 0)
            world_.groups.push_back(
                Group{kFlatGroupId, flat_coord_, flat_members_, flat_key_.epoch, flat_key_});
    } else {
        for (const auto& [gid, lg] : live_) world_.groups.push_back(lg.session.group());
    }
    result.report = build_report();
    result.world = std::move(world_);
    result.trace = std::move(trace_);
    return result;
}

}  // namespace

SimulationResult run_scenario(const ScenarioConfig& cfg) {
    validate_config(cfg);
    Engine eng(cfg, cfg.baseline);
    return eng.run();
}

SimulationResult run_baseline(ScenarioConfig cfg) {
    cfg.baseline = true;
    return run_scenario(cfg);
}

// ---------------------------------------------------------------------------
// Comparison and fixtures

Comparison compare(const MetricsReport& a, const MetricsReport& b) {
    if (a.seed != b.seed || a.node_count != b.node_count || a.duration_ms != b.duration_ms)
        throw std::invalid_argument("compare: reports come from different scenarios");
    auto row = [](const char* name, double va, double vb) {
        double d = 0;
        if (va != vb)
            d = va == 0 ? std::numeric_limits<double>::infinity() : (vb - va) / va * 100.0;
        return MetricDelta{name, va, vb, d};
    };
    Comparison c;
    c.rows.push_back(row("t_pow_j", a.t_pow, b.t_pow));
    c.rows.push_back(row("t_time_ms", a.t_time, b.t_time));
    c.rows.push_back(row("rekey_count", static_cast<double>(a.rekey_count),
                         static_cast<double>(b.rekey_count)));
    c.rows.push_back(row("rekey_messages", static_cast<double>(a.rekey_messages),
                         static_cast<double>(b.rekey_messages)));
    c.rows.push_back(row("rekey_bytes", static_cast<double>(a.rekey_bytes),
                         static_cast<double>(b.rekey_bytes)));
    c.rows.push_back(row("messages_sent", static_cast<double>(a.messages_sent),
                         static_cast<double>(b.messages_sent)));
    c.rows.push_back(row("bytes_sent", static_cast<double>(a.bytes_sent),
                         static_cast<double>(b.bytes_sent)));
    c.rows.push_back(row("blacklist_count", static_cast<double>(a.blacklist_count),
                         static_cast<double>(b.blacklist_count)));
    c.rows.push_back(row("groups_formed", static_cast<double>(a.groups_formed),
                         static_cast<double>(b.groups_formed)));
    c.rows.push_back(row("memory_peak_bytes", static_cast<double>(a.memory_peak_bytes),
                         static_cast<double>(b.memory_peak_bytes)));
    return c;
}

std::vector<FixtureRow> load_fixtures(const std::string& csv_path) {
    std::ifstream in(csv_path);
    if (!in) throw ConfigError("cannot open fixture file: " + csv_path);
    std::vector<FixtureRow> rows;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        std::vector<std::string> parts;
        std::stringstream ss(line);
        std::string field;
        while (std::getline(ss, field, ',')) parts.push_back(field);
        if (parts.size() != 7)
            throw ConfigError("fixture line " + std::to_string(lineno) +
                              ": expected 7 columns, got " + std::to_string(parts.size()));
        if (lineno == 1 && parts[0] == "table") continue;  // header
        FixtureRow r;
        r.table = parts[0];
        r.row_label = parts[1];
        r.metric = parts[2];
        r.unit = parts[3];
        try {
            r.proposed = std::stod(parts[4]);
            r.existing = std::stod(parts[5]);
        } catch (const std::exception&) {
            throw ConfigError("fixture line " + std::to_string(lineno) + ": bad number");
        }
        r.source = parts[6];
        rows.push_back(std::move(r));
    }
    return rows;
}

std::string comparison_text(const Comparison& cmp, const std::vector<FixtureRow>& fixtures,
                            const std::string& label_a, const std::string& label_b) {
    std::ostringstream out;
    out << std::left << std::setw(20) << "metric" << std::right << std::setw(18) << label_a
        << std::setw(18) << label_b << std::setw(12) << "delta" << '\n';
    for (const auto& row : cmp.rows) {
        out << std::left << std::setw(20) << row.metric << std::right << std::setw(18)
            << std::setprecision(6) << row.a << std::setw(18) << row.b;
        if (std::isfinite(row.delta_pct)) {
            char buf[32];
            std::snprintf(buf, sizeof buf, "%+.1f%%", row.delta_pct);
            out << std::setw(12) << buf;
        } else {
            out << std::setw(12) << "n/a";
        }
        out << '\n';
    }
    if (!fixtures.empty()) {
        out << "\nreference values, paper-reported:\n";
        for (const auto& f : fixtures) {
            out << "  [" << f.table << "] " << f.row_label << ' ' << f.metric << " (" << f.unit
                << "): proposed " << f.proposed << ", existing " << f.existing << '\n';
        }
    }
    return out.str();
}

nlohmann::ordered_json to_json(const Comparison& cmp, const std::vector<FixtureRow>& fixtures) {
    nlohmann::ordered_json j;
    nlohmann::ordered_json rows = nlohmann::ordered_json::array();
    for (const auto& r : cmp.rows) {
        nlohmann::ordered_json row;
        row["metric"] = r.metric;
        row["a"] = r.a;
        row["b"] = r.b;
        if (std::isfinite(r.delta_pct)) row["delta_pct"] = r.delta_pct;
        else row["delta_pct"] = nullptr;
        rows.push_back(std::move(row));
    }
    j["rows"] = std::move(rows);
    nlohmann::ordered_json fx = nlohmann::ordered_json::array();
    for (const auto& f : fixtures) {
        fx.push_back({{"table", f.table},
                      {"row_label", f.row_label},
                      {"metric", f.metric},
                      {"unit", f.unit},
                      {"proposed", f.proposed},
                      {"existing", f.existing},
                      {"source", f.source},
                      {"label", "paper-reported"}});
    }
    j["paper_reported"] = std::move(fx);
    return j;
}

}  // namespace htrcf::sim
