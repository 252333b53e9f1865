#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <set>

#include "htrcf/election.hpp"
#include "htrcf/sim.hpp"

using namespace htrcf;
using namespace htrcf::sim;

namespace {

TraceEvent ev(TraceEventKind kind, double energy, std::uint64_t bytes = 0,
              std::uint64_t t = 0, NodeId node = 1) {
    return TraceEvent{t, kind, node, bytes, energy};
}

// Small, fast scenario body shared by the integration cases.
ScenarioConfig quick_cfg(std::size_t n, std::uint64_t seed, std::uint64_t duration) {
    ScenarioConfig cfg;
    cfg.seed = seed;
    cfg.node_count = n;
    cfg.p_ext = {PextSpec::Kind::Fixed, 500.0, 0, 0};
    cfg.rsa_bits = 64;
    cfg.beacon_interval_ms = 1000;
    cfg.area = 50;
    cfg.radio_range = 30;
    cfg.duration_ms = duration;
    return cfg;
}

std::uint64_t count_kind(std::span<const TraceEvent> trace, TraceEventKind k) {
    return static_cast<std::uint64_t>(
        std::count_if(trace.begin(), trace.end(),
                      [&](const TraceEvent& e) { return e.kind == k; }));
}

// Every metric the report claims must be recomputable from the artifacts.
void check_closure(const SimulationResult& r, const ScenarioConfig& cfg) {
    CHECK(r.report.t_pow == total_power(r.trace));  // bitwise, same fold order
    CHECK(r.report.t_time == total_time(r.trace, cfg.link_rate, cfg.hop_latency_ms));

    std::uint64_t msgs = 0, bytes = 0;
    for (const auto& e : r.trace)
        if (e.kind == TraceEventKind::Send || e.kind == TraceEventKind::Beacon) {
            ++msgs;
            bytes += e.bytes;
        }
    CHECK(r.report.messages_sent == msgs);
    CHECK(r.report.bytes_sent == bytes);
    CHECK(r.report.rekey_count == count_kind(r.trace, TraceEventKind::Rekey));
    CHECK(r.report.blacklist_count == count_kind(r.trace, TraceEventKind::Blacklist));

    double per_group = r.report.t_pow_ungrouped;
    for (const auto& [gid, p] : r.report.t_pow_per_group) per_group += p;
    CHECK(per_group == doctest::Approx(r.report.t_pow).epsilon(1e-12));
}

}  // namespace

TEST_CASE("total_power sums radio events and ignores markers") {
    std::vector<TraceEvent> trace{
        ev(TraceEventKind::Send, 2.0),   ev(TraceEventKind::Send, 3.0),
        ev(TraceEventKind::Receive, 1.0), ev(TraceEventKind::Beacon, 0.5),
        ev(TraceEventKind::Rekey, 0.0),  ev(TraceEventKind::Elect, 0.0),
        ev(TraceEventKind::Join, 0.0),
    };
    CHECK(total_power(trace) == doctest::Approx(6.5));
    CHECK(total_power({}) == 0.0);
}

TEST_CASE("total_time charges bytes over rate plus hop latency per leg") {
    std::vector<TraceEvent> trace{
        ev(TraceEventKind::Send, 0.2, 100),
        ev(TraceEventKind::Receive, 0.1, 100),
    };
    // each leg: 100 / 100 + 1 = 2 ms
    CHECK(total_time(trace, 100.0, 1.0) == doctest::Approx(4.0));
    CHECK(total_time({}, 100.0, 1.0) == 0.0);

    // linear in the event list
    std::vector<TraceEvent> twice = trace;
    twice.insert(twice.end(), trace.begin(), trace.end());
    CHECK(total_time(twice, 100.0, 1.0) == doctest::Approx(8.0));

    // markers add nothing
    trace.push_back(ev(TraceEventKind::Rekey, 0.0, 999));
    CHECK(total_time(trace, 100.0, 1.0) == doctest::Approx(4.0));
}

TEST_CASE("single-node scenario produces the exact minimal trace") {
    ScenarioConfig cfg;
    cfg.seed = 1;
    cfg.node_count = 1;
    cfg.p_ext = {PextSpec::Kind::Fixed, 100.0, 0, 0};
    cfg.rsa_bits = 512;
    cfg.duration_ms = 0;
    auto r = run_scenario(cfg);

    // formation only: election marker, issuance marker, one KDC envelope leg
    REQUIRE(r.trace.size() == 3);
    CHECK(r.trace[0].kind == TraceEventKind::Elect);
    CHECK(r.trace[1].kind == TraceEventKind::Rekey);
    CHECK(r.trace[2].kind == TraceEventKind::Receive);
    // envelope: 16-byte header + one 64-byte RSA chunk (40-byte payload)
    CHECK(r.trace[2].bytes == 80);
    CHECK(r.trace[2].energy_j == doctest::Approx(80 * cfg.c_recv));

    CHECK(r.report.scheme == "htrcf");
    CHECK(r.report.rekey_count == 1);
    CHECK(r.report.groups_formed == 1);
    CHECK(r.report.messages_sent == 0);  // the envelope is a receive leg
    CHECK(r.report.bytes_sent == 0);
    CHECK(r.report.rekey_messages == 1);
    CHECK(r.report.rekey_bytes == 80);
    CHECK(r.report.election_rounds <= election::round_bound(cfg.p_min));
    // manager holds: its K_i (32) + RSA pair (2*64) + group key (32)
    CHECK(r.report.memory_peak_bytes == 192);
    check_closure(r, cfg);

    REQUIRE(r.world.groups.size() == 1);
    CHECK(r.world.groups[0].manager == 1);
    CHECK(r.world.groups[0].members.empty());
    CHECK(r.world.transcripts.empty());  // initial issuance is not a transcript
}

TEST_CASE("same seed reproduces byte-identical runs") {
    ScenarioConfig cfg = quick_cfg(10, 5, 6000);
    cfg.deferred = {11};
    cfg.churn = {{ChurnOp::Kind::Leave, 2000, 3}, {ChurnOp::Kind::Join, 3000, 11}};
    auto a = run_scenario(cfg);
    auto b = run_scenario(cfg);
    CHECK(trace_to_text(a.trace) == trace_to_text(b.trace));
    CHECK(to_json(a.report).dump() == to_json(b.report).dump());

    ScenarioConfig other = cfg;
    other.seed = 6;
    auto c = run_scenario(other);
    CHECK(trace_to_text(a.trace) != trace_to_text(c.trace));
}

TEST_CASE("reports close over their traces across scheme and churn") {
    ScenarioConfig cfg = quick_cfg(12, 3, 10000);
    cfg.deferred = {13, 14};
    cfg.periodic_rekey_ms = 4000;
    cfg.churn = {{ChurnOp::Kind::Leave, 1500, 2},
                 {ChurnOp::Kind::Join, 2500, 13},
                 {ChurnOp::Kind::Silence, 3500, 4},
                 {ChurnOp::Kind::Join, 6500, 14},
                 {ChurnOp::Kind::Leave, 7500, 5}};
    auto ht = run_scenario(cfg);
    check_closure(ht, cfg);
    CHECK(ht.report.scheme == "htrcf");

    auto base = run_baseline(cfg);
    check_closure(base, cfg);
    CHECK(base.report.scheme == "baseline");
    CHECK(base.report.groups_formed == 1);
}

TEST_CASE("status walks never break the machine") {
    ScenarioConfig cfg = quick_cfg(12, 3, 10000);
    cfg.deferred = {13};
    cfg.periodic_rekey_ms = 4000;
    cfg.churn = {{ChurnOp::Kind::Leave, 1500, 2},
                 {ChurnOp::Kind::Join, 2500, 13},
                 {ChurnOp::Kind::Silence, 3500, 4}};
    auto r = run_scenario(cfg);
    for (const auto& [id, segments] : r.world.status_segments) {
        CHECK(!segments.empty());
        for (const auto& seg : segments) {
            REQUIRE(!seg.empty());
            CHECK(seg.front() == NodeStatus::Unclustered);
            for (std::size_t i = 1; i < seg.size(); ++i)
                CHECK(status_transition_ok(seg[i - 1], seg[i]));
        }
    }
}

TEST_CASE("present nodes partition into the live groups") {
    ScenarioConfig cfg = quick_cfg(15, 9, 8000);
    cfg.deferred = {16};
    cfg.churn = {{ChurnOp::Kind::Leave, 2000, 7}, {ChurnOp::Kind::Join, 4000, 16}};
    auto r = run_scenario(cfg);
    std::set<NodeId> covered;
    for (const auto& g : r.world.groups) {
        CHECK(covered.insert(g.manager).second);
        for (NodeId m : g.members) CHECK(covered.insert(m).second);
    }
    CHECK(covered == r.world.present);
    CHECK(r.world.present.count(7) == 0);
    CHECK(r.world.present.count(16) == 1);
    CHECK(r.report.election_rounds <= election::round_bound(cfg.p_min));
    REQUIRE(!r.world.election_rounds.empty());
    CHECK(r.report.election_rounds == r.world.election_rounds[0]);
}

TEST_CASE("baseline member leave fans out one unicast per survivor") {
    ScenarioConfig cfg = quick_cfg(10, 2, 3000);
    cfg.churn = {{ChurnOp::Kind::Leave, 1000, 5}};
    auto r = run_baseline(cfg);

    // formation: envelope + 9 member unicasts; leave: envelope + 8
    CHECK(r.report.rekey_count == 2);
    CHECK(r.report.rekey_messages == 19);
    REQUIRE(r.world.transcripts.size() == 1);
    const auto& t = r.world.transcripts[0];
    CHECK(t.trigger.kind == keymgmt::RekeyTrigger::Kind::Leave);
    CHECK(t.trigger.node == NodeId{5});
    REQUIRE(t.messages.size() == 8);
    for (const auto& m : t.messages) {
        CHECK(m.to.has_value());
        CHECK(*m.to != 5);
        CHECK(m.wrap == keymgmt::WrapKind::MemberSecretKey);
    }

    REQUIRE(r.world.groups.size() == 1);
    CHECK(r.world.groups[0].manager == 1);
    CHECK(r.world.groups[0].members.size() == 8);
}

TEST_CASE("baseline coordinator leave promotes the lowest survivor") {
    ScenarioConfig cfg = quick_cfg(4, 2, 3000);
    cfg.churn = {{ChurnOp::Kind::Leave, 1000, 1}};
    auto r = run_baseline(cfg);
    REQUIRE(r.world.groups.size() == 1);
    CHECK(r.world.groups[0].manager == 2);
    CHECK(r.world.groups[0].members == std::set<NodeId>{3, 4});
    // rotation envelopes for all three survivors
    std::uint64_t rotations = 0;
    for (const auto& e : r.world.envelopes)
        if (e.time_ms == 1000 && e.to != 2) ++rotations;
    CHECK(rotations >= 2);  // members 3 and 4 at least; coordinator 2 also rotates
    check_closure(r, cfg);
}

TEST_CASE("departed members cannot read anything sent after they leave") {
    ScenarioConfig cfg = quick_cfg(6, 4, 8000);
    cfg.deferred = {7};
    cfg.periodic_rekey_ms = 3000;
    cfg.churn = {{ChurnOp::Kind::Leave, 2000, 3},
                 {ChurnOp::Kind::Leave, 4000, 5},
                 {ChurnOp::Kind::Join, 6000, 7}};
    auto r = run_scenario(cfg);

    std::map<NodeId, std::uint64_t> left{{3, 2000}, {5, 4000}};
    for (const auto& [x, t_leave] : left) {
        const auto& acq = r.world.keys_held.at(x);
        REQUIRE(!acq.empty());
        std::size_t attempts = 0;
        for (const auto& ct : r.world.ciphertexts) {
            if (ct.time_ms < t_leave) continue;
            for (const auto& k : acq) {
                ++attempts;
                CHECK(!crypto::sym_decrypt(k.key, ct.nonce, ct.body).has_value());
            }
        }
        CHECK(attempts > 0);
    }
}

TEST_CASE("joiners cannot read anything sent before they join") {
    ScenarioConfig cfg = quick_cfg(6, 4, 8000);
    cfg.deferred = {7};
    cfg.periodic_rekey_ms = 3000;
    cfg.churn = {{ChurnOp::Kind::Leave, 2000, 3}, {ChurnOp::Kind::Join, 5000, 7}};
    auto r = run_scenario(cfg);

    const auto& acq = r.world.keys_held.at(7);
    REQUIRE(!acq.empty());
    std::size_t attempts = 0;
    for (const auto& ct : r.world.ciphertexts) {
        if (ct.time_ms >= 5000) continue;
        for (const auto& k : acq) {
            ++attempts;
            CHECK(!crypto::sym_decrypt(k.key, ct.nonce, ct.body).has_value());
        }
    }
    CHECK(attempts > 0);
}

TEST_CASE("a silenced member is blacklisted within k intervals plus one sweep") {
    ScenarioConfig cfg = quick_cfg(5, 8, 9000);
    cfg.radio_range = 100;  // everyone links; groups are small and stable

    // dry run to find a non-manager: silencing a manager is a no-op
    auto dry = run_scenario(cfg);
    REQUIRE(!dry.world.groups.empty());
    NodeId victim = 0;
    for (const auto& g : dry.world.groups)
        if (!g.members.empty()) {
            victim = *g.members.begin();
            break;
        }
    REQUIRE(victim != 0);

    const std::uint64_t t_s = 1500;
    cfg.churn = {{ChurnOp::Kind::Silence, t_s, victim}};
    auto r = run_scenario(cfg);

    CHECK(r.world.blacklist == std::set<NodeId>{victim});
    CHECK(r.world.present.count(victim) == 0);
    CHECK(r.report.blacklist_count == 1);
    auto it = std::find_if(r.trace.begin(), r.trace.end(), [&](const TraceEvent& e) {
        return e.kind == TraceEventKind::Blacklist && e.node == victim;
    });
    REQUIRE(it != r.trace.end());
    std::uint64_t bound = t_s + (cfg.k_missed + 1) * cfg.beacon_interval_ms;
    CHECK(it->time_ms <= bound);
    check_closure(r, cfg);
}

TEST_CASE("silencing a manager does nothing") {
    ScenarioConfig cfg = quick_cfg(5, 8, 9000);
    cfg.radio_range = 100;
    auto dry = run_scenario(cfg);
    REQUIRE(!dry.world.groups.empty());
    NodeId mgr = dry.world.groups[0].manager;

    cfg.churn = {{ChurnOp::Kind::Silence, 1500, mgr}};
    auto r = run_scenario(cfg);
    CHECK(r.world.blacklist.empty());
    CHECK(r.report.blacklist_count == 0);
    CHECK(r.world.present.count(mgr) == 1);
}

TEST_CASE("compare is reflexive and guards scenario identity") {
    ScenarioConfig cfg = quick_cfg(8, 6, 4000);
    auto ht = run_scenario(cfg);
    auto base = run_baseline(cfg);

    auto self = compare(ht.report, ht.report);
    REQUIRE(self.rows.size() == 10);
    for (const auto& row : self.rows) {
        CHECK(row.delta_pct == 0.0);
        CHECK(row.a == row.b);
    }
    CHECK(self.rows[0].metric == "t_pow_j");

    auto cmp = compare(ht.report, base.report);
    CHECK(cmp.rows.size() == 10);

    auto tampered = base.report;
    tampered.seed = 999;
    CHECK_THROWS_AS((void)compare(ht.report, tampered), std::invalid_argument);
    tampered = base.report;
    tampered.node_count = 3;
    CHECK_THROWS_AS((void)compare(ht.report, tampered), std::invalid_argument);
    tampered = base.report;
    tampered.duration_ms = 1;
    CHECK_THROWS_AS((void)compare(ht.report, tampered), std::invalid_argument);
}

TEST_CASE("comparison text and json carry the fixture rows") {
    ScenarioConfig cfg = quick_cfg(6, 1, 2000);
    auto ht = run_scenario(cfg);
    auto base = run_baseline(cfg);
    auto cmp = compare(ht.report, base.report);

    std::vector<FixtureRow> fx{{"table2", "Group 1", "power_utilization", "J", 8, 11, "paper"}};
    auto text = comparison_text(cmp, fx, "htrcf", "baseline");
    CHECK(text.find("paper-reported") != std::string::npos);
    CHECK(text.find("power_utilization") != std::string::npos);

    auto noref = comparison_text(cmp, {}, "htrcf", "baseline");
    CHECK(noref.find("paper-reported") == std::string::npos);

    auto j = to_json(cmp, fx);
    REQUIRE(j["paper_reported"].size() == 1);
    CHECK(j["paper_reported"][0]["label"] == "paper-reported");
    CHECK(j["rows"].size() == cmp.rows.size());
}

TEST_CASE("fixture csv loads and rejects garbage") {
    const char* path = "test_fixtures_tmp.csv";
    {
        std::ofstream out(path);
        out << "table,row_label,metric,unit,proposed_htrcf,existing_danni,source\n";
        out << "table2,Group 1,power_utilization,J,8,11,paper\n";
        out << "table6,Round 2,time_consumption,ms,26,57,paper\n";
    }
    auto rows = load_fixtures(path);
    REQUIRE(rows.size() == 2);
    CHECK(rows[0].table == "table2");
    CHECK(rows[0].proposed == 8);
    CHECK(rows[1].existing == 57);
    CHECK(rows[1].source == "paper");
    std::remove(path);

    CHECK_THROWS_AS((void)load_fixtures("no_such_file.csv"), ConfigError);

    {
        std::ofstream out(path);
        out << "table,row_label,metric,unit,proposed_htrcf,existing_danni,source\n";
        out << "table2,Group 1,power_utilization,J,not_a_number,11,paper\n";
    }
    CHECK_THROWS_AS((void)load_fixtures(path), ConfigError);
    std::remove(path);
}

TEST_CASE("config json round-trips through to_json") {
    ScenarioConfig cfg = quick_cfg(9, 12, 5000);
    cfg.deferred = {10, 11};
    cfg.p_ext = {PextSpec::Kind::Uniform, 0, 100, 300};
    cfg.periodic_rekey_ms = 2500;
    cfg.churn = {{ChurnOp::Kind::Leave, 1000, 2},
                 {ChurnOp::Kind::Join, 2000, 10},
                 {ChurnOp::Kind::Silence, 3000, 4}};
    auto j = to_json(cfg);
    auto back = config_from_json(j);
    CHECK(to_json(back).dump() == j.dump());
}

TEST_CASE("config validation rejects semantic nonsense") {
    auto bad = [](auto mutate) {
        ScenarioConfig cfg;
        cfg.node_count = 5;
        cfg.duration_ms = 5000;
        mutate(cfg);
        return cfg;
    };
    CHECK_THROWS_AS(validate_config(bad([](auto& c) { c.node_count = 0; })), ConfigError);
    CHECK_THROWS_AS(validate_config(bad([](auto& c) { c.p_min = 0; })), ConfigError);
    CHECK_THROWS_AS(validate_config(bad([](auto& c) { c.p_min = 1.5; })), ConfigError);
    CHECK_THROWS_AS(validate_config(bad([](auto& c) { c.initial_prob = 0; })), ConfigError);
    CHECK_THROWS_AS(validate_config(bad([](auto& c) { c.rsa_bits = 8; })), ConfigError);
    CHECK_THROWS_AS(validate_config(bad([](auto& c) { c.beacon_interval_ms = 0; })),
                    ConfigError);
    CHECK_THROWS_AS(validate_config(bad([](auto& c) { c.link_rate = 0; })), ConfigError);
    CHECK_THROWS_AS(validate_config(bad([](auto& c) { c.area = -1; })), ConfigError);
    CHECK_THROWS_AS(validate_config(bad([](auto& c) { c.deferred = {3}; })), ConfigError);
    CHECK_THROWS_AS(validate_config(bad([](auto& c) { c.deferred = {9, 9}; })), ConfigError);

    // churn replay: leave of a node that already left
    CHECK_THROWS_AS(validate_config(bad([](auto& c) {
                        c.churn = {{ChurnOp::Kind::Leave, 100, 2},
                                   {ChurnOp::Kind::Leave, 200, 2}};
                    })),
                    ConfigError);
    // join of a node already present
    CHECK_THROWS_AS(validate_config(bad([](auto& c) {
                        c.churn = {{ChurnOp::Kind::Join, 100, 2}};
                    })),
                    ConfigError);
    // unknown node
    CHECK_THROWS_AS(validate_config(bad([](auto& c) {
                        c.churn = {{ChurnOp::Kind::Leave, 100, 42}};
                    })),
                    ConfigError);
    // past the end of the run
    CHECK_THROWS_AS(validate_config(bad([](auto& c) {
                        c.churn = {{ChurnOp::Kind::Leave, 9999, 2}};
                    })),
                    ConfigError);
    // silence of an absent node
    CHECK_THROWS_AS(validate_config(bad([](auto& c) {
                        c.churn = {{ChurnOp::Kind::Leave, 100, 2},
                                   {ChurnOp::Kind::Silence, 200, 2}};
                    })),
                    ConfigError);
    // valid: leave then re-join of an initial node
    ScenarioConfig ok;
    ok.node_count = 5;
    ok.duration_ms = 5000;
    ok.churn = {{ChurnOp::Kind::Leave, 100, 2}, {ChurnOp::Kind::Join, 200, 2}};
    validate_config(ok);
}

TEST_CASE("parse_config_text reports real line numbers") {
    SUBCASE("syntax error") {
        std::string raw = "{\n  \"seed\": 1,\n  \"node_count\": \n}\n";
        try {
            (void)parse_config_text(raw);
            FAIL("expected ConfigError");
        } catch (const ConfigError& e) {
            CHECK(std::string(e.what()).find("line") != std::string::npos);
        }
    }
    SUBCASE("unknown key names the offender") {
        try {
            (void)parse_config_text(R"({"seed": 1, "node_cuont": 5})");
            FAIL("expected ConfigError");
        } catch (const ConfigError& e) {
            CHECK(std::string(e.what()).find("node_cuont") != std::string::npos);
        }
    }
    SUBCASE("churn entry errors point at the entry's line") {
        std::string raw =
            "{\n"
            "  \"seed\": 1,\n"
            "  \"node_count\": 5,\n"
            "  \"duration_ms\": 5000,\n"
            "  \"churn\": [\n"
            "    {\"time_ms\": 100, \"op\": \"leave\", \"node\": 2},\n"
            "    {\"time_ms\": 200, \"op\": \"leave\", \"node\": 42}\n"
            "  ]\n"
            "}\n";
        try {
            (void)parse_config_text(raw);
            FAIL("expected ConfigError");
        } catch (const ConfigError& e) {
            std::string msg = e.what();
            CHECK(msg.find("line 7") != std::string::npos);
            CHECK(msg.find("42") != std::string::npos);
        }
    }
}

TEST_CASE("report json and csv share the metric set") {
    ScenarioConfig cfg = quick_cfg(6, 2, 3000);
    auto r = run_scenario(cfg);
    auto j = to_json(r.report);
    CHECK(j["scheme"] == "htrcf");
    CHECK(j["seed"] == 2);
    CHECK(j["node_count"] == 6);
    CHECK(j["t_pow_j"] == r.report.t_pow);
    CHECK(j["memory_peak_bytes"] == r.report.memory_peak_bytes);
    // serialization preserves declaration order, scheme first
    CHECK(j.dump().rfind("{\"scheme\"", 0) == 0);

    auto csv = report_csv(r.report);
    auto nl = csv.find('\n');
    REQUIRE(nl != std::string::npos);
    CHECK(csv.substr(0, nl) ==
          "scheme,seed,node_count,duration_ms,t_pow_j,t_time_ms,rekey_count,"
          "rekey_messages,rekey_bytes,messages_sent,bytes_sent,blacklist_count,"
          "groups_formed,election_rounds,memory_peak_bytes");
    CHECK(csv.substr(nl + 1, 6) == "htrcf,");
    CHECK(std::count(csv.begin(), csv.end(), '\n') == 2);
}

TEST_CASE("trace text round-trips through the line parser") {
    ScenarioConfig cfg = quick_cfg(6, 2, 3000);
    auto r = run_scenario(cfg);
    auto text = trace_to_text(r.trace);
    std::size_t lines = 0, pos = 0;
    while (pos < text.size()) {
        auto nl = text.find('\n', pos);
        REQUIRE(nl != std::string::npos);
        auto parsed = parse_trace_line(text.substr(pos, nl - pos));
        REQUIRE(parsed.has_value());
        const auto& orig = r.trace[lines];
        CHECK(parsed->time_ms == orig.time_ms);
        CHECK(parsed->kind == orig.kind);
        CHECK(parsed->node == orig.node);
        CHECK(parsed->bytes == orig.bytes);
        CHECK(parsed->energy_j == orig.energy_j);
        ++lines;
        pos = nl + 1;
    }
    CHECK(lines == r.trace.size());
}
