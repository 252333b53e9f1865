#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "htrcf/keymgmt.hpp"
#include "htrcf/net_model.hpp"

namespace htrcf::sim {

struct PextSpec {
    enum class Kind { Fixed, Uniform } kind = Kind::Fixed;
    double value = 100.0;  // Fixed
    double min = 50.0;     // Uniform
    double max = 100.0;
};

struct ChurnOp {
    enum class Kind { Join, Leave, Silence } op = Kind::Leave;
    std::uint64_t time_ms = 0;
    NodeId node = 0;
};

std::string_view to_string(ChurnOp::Kind k);

struct ScenarioConfig {
    std::uint64_t seed = 1;
    std::size_t node_count = 10;
    std::vector<NodeId> deferred;  // known ids that arrive via Join, not at start
    PextSpec p_ext;
    double initial_prob = 0.1;  // starting G_p for every node
    double p_min = 0.05;
    unsigned max_rounds = 0;  // 0: derived from p_min
    unsigned rsa_bits = 512;
    crypto::DhParams dh;  // defaults to default_dh_params()
    std::uint64_t beacon_interval_ms = 5000;
    unsigned k_missed = 3;
    std::uint32_t beacon_bytes = 32;
    double c_send = 0.002;  // J per byte
    double c_recv = 0.001;
    double link_rate = 250.0;  // bytes per ms
    double hop_latency_ms = 1.0;
    double area = 100.0;         // square region side; coordinates feed link costs
    double radio_range = 25.0;   // pairs farther apart have no election link
    std::uint64_t periodic_rekey_ms = 0;  // 0: disabled
    std::uint64_t duration_ms = 60000;
    std::vector<ChurnOp> churn;
    bool baseline = false;  // run the flat scheme instead of HT-RCF

    ScenarioConfig();
};

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Field extraction with defaults plus full semantic validation; throws
// ConfigError. Unknown top-level keys are rejected to catch typos.
ScenarioConfig config_from_json(const nlohmann::json& j);

// Parses raw JSON text. Syntax errors and churn-entry errors carry real line
// numbers ("line 12: ...").
ScenarioConfig parse_config_text(const std::string& raw);

// Semantic checks alone (ranges, churn replay); throws ConfigError.
void validate_config(const ScenarioConfig& cfg);

nlohmann::ordered_json to_json(const ScenarioConfig& cfg);

struct MetricsReport {
    std::string scheme;  // "htrcf" | "baseline"
    std::uint64_t seed = 0;
    std::size_t node_count = 0;
    std::uint64_t duration_ms = 0;
    double t_pow = 0;  // equals total_power(trace) exactly
    std::map<GroupId, double> t_pow_per_group;
    double t_pow_ungrouped = 0;
    double t_time = 0;  // equals total_time(trace, ...) exactly
    std::uint64_t rekey_count = 0;     // issuances + churn/periodic rekeys
    std::uint64_t rekey_messages = 0;  // all key-distribution wire messages
    std::uint64_t rekey_bytes = 0;
    std::uint64_t messages_sent = 0;  // Send + Beacon trace events
    std::uint64_t bytes_sent = 0;
    std::uint64_t blacklist_count = 0;
    std::uint64_t groups_formed = 0;  // groups ever created
    unsigned election_rounds = 0;     // rounds of the initial election
    std::uint64_t memory_peak_bytes = 0;  // peak key bytes held by any node
};

nlohmann::ordered_json to_json(const MetricsReport& r);
std::string report_csv(const MetricsReport& r);  // header line + one data row

// T_pow: sum of energies over Send, Receive, and Beacon events.
double total_power(std::span<const TraceEvent> trace);

// T_time: per radio event, bytes / rate + fixed hop latency, summed.
double total_time(std::span<const TraceEvent> trace, double link_rate,
                  double hop_latency_ms);

// One sym-wrapped key-distribution message, kept for secrecy sweeps.
struct ArchivedCiphertext {
    std::uint64_t time_ms = 0;
    GroupId group = 0;
    std::uint64_t epoch = 0;
    keymgmt::WrapKind wrap = keymgmt::WrapKind::OldGroupKey;
    std::optional<NodeId> to;  // nullopt = broadcast
    crypto::Nonce nonce{};
    Bytes body;
};

// One RSA-wrapped KDC envelope (issuance or K_i rotation).
struct ArchivedEnvelope {
    std::uint64_t time_ms = 0;
    NodeId to = 0;
    std::size_t bytes = 0;
};

struct KeyAcquisition {
    std::uint64_t time_ms = 0;
    crypto::KeyBytes key{};
};

struct MembershipChange {
    std::uint64_t time_ms = 0;
    NodeId node = 0;
    bool joined = false;  // false: left, was blacklisted, or died out of the group
};

// Full end-of-run state for assertions: who held which keys when, every
// wrapped message, every membership edge.
struct World {
    std::map<NodeId, NodeRecord> nodes;  // every id ever seen
    std::set<NodeId> present;            // present (and not blacklisted) at end
    std::vector<Group> groups;           // live groups at end, ascending id
    std::set<NodeId> blacklist;
    std::map<NodeId, std::vector<KeyAcquisition>> keys_held;
    std::vector<ArchivedCiphertext> ciphertexts;
    std::vector<ArchivedEnvelope> envelopes;
    std::vector<keymgmt::RekeyTranscript> transcripts;  // excludes initial issuance
    std::vector<MembershipChange> membership_log;
    // Status walks per node; a new segment starts when a dissolved group's
    // survivors re-enter election (or a node re-joins).
    std::map<NodeId, std::vector<std::vector<NodeStatus>>> status_segments;
    std::vector<unsigned> election_rounds;  // one entry per election run
};

struct SimulationResult {
    std::vector<TraceEvent> trace;
    MetricsReport report;
    World world;
};

// Executes the config end to end; honors cfg.baseline.
SimulationResult run_scenario(const ScenarioConfig& cfg);

// Same scenario under the flat scheme regardless of cfg.baseline.
SimulationResult run_baseline(ScenarioConfig cfg);

// Trace file body: one JSON object per line.
std::string trace_to_text(std::span<const TraceEvent> trace);

struct MetricDelta {
    std::string metric;
    double a = 0;
    double b = 0;
    double delta_pct = 0;  // (b - a) / a * 100; 0 when both are 0
};

struct Comparison {
    std::vector<MetricDelta> rows;
};

// Per-metric table; throws std::invalid_argument when the reports do not come
// from the same scenario (seed/node_count/duration mismatch).
Comparison compare(const MetricsReport& a, const MetricsReport& b);

struct FixtureRow {
    std::string table;
    std::string row_label;
    std::string metric;
    std::string unit;
    double proposed = 0;
    double existing = 0;
    std::string source;
};

// Reads the reference table CSV (header: table,row_label,metric,unit,
// proposed_htrcf,existing_danni,source). Throws ConfigError on I/O or shape.
std::vector<FixtureRow> load_fixtures(const std::string& csv_path);

// Human-readable table; fixture rows are labeled "paper-reported".
std::string comparison_text(const Comparison& cmp,
                            const std::vector<FixtureRow>& fixtures,
                            const std::string& label_a, const std::string& label_b);

nlohmann::ordered_json to_json(const Comparison& cmp, const std::vector<FixtureRow>& fixtures);

}  // namespace htrcf::sim
