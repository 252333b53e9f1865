// htrcf: scenario runner and protocol demos for the HT-RCF group key
// management simulator. Exit codes: 0 ok, 1 usage/validation, 2 I/O.
#include <CLI11.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <random>
#include <sstream>
#include <string>

#include "htrcf/crypto.hpp"
#include "htrcf/keymgmt.hpp"
#include "htrcf/rng.hpp"
#include "htrcf/sim.hpp"

namespace fs = std::filesystem;
using namespace htrcf;

namespace {

enum class LogLevel { Error = 0, Info = 1, Debug = 2 };

LogLevel log_level() {
    const char* v = std::getenv("HTRCF_LOG");
    if (!v) return LogLevel::Error;
    std::string s(v);
    if (s == "debug") return LogLevel::Debug;
    if (s == "info") return LogLevel::Info;
    if (s != "error")
        std::cerr << "htrcf: unknown HTRCF_LOG level \"" << s << "\", using error\n";
    return LogLevel::Error;
}

void log_info(const std::string& msg) {
    if (log_level() >= LogLevel::Info) std::cerr << "htrcf: " << msg << '\n';
}

void log_debug(const std::string& msg) {
    if (log_level() >= LogLevel::Debug) std::cerr << "htrcf: " << msg << '\n';
}

// Reads a whole file; nullopt when it cannot be opened.
std::optional<std::string> slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) return std::nullopt;
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

bool spill(const fs::path& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) return false;
    out << content;
    out.flush();
    return static_cast<bool>(out);
}

// Parse + validate a config file. Throws sim::ConfigError (exit 1); returns
// nullopt when the file cannot be read (exit 2).
std::optional<sim::ScenarioConfig> load_config(const std::string& path) {
    auto raw = slurp(path);
    if (!raw) return std::nullopt;
    return sim::parse_config_text(*raw);
}

std::string key_hex(const crypto::KeyBytes& k) {
    return to_hex(std::span<const std::uint8_t>(k.data(), k.size()));
}

int cmd_run(const std::string& config_path, const std::string& out_dir,
            std::optional<std::uint64_t> seed, bool json, bool full_trace) {
    auto maybe_cfg = load_config(config_path);
    if (!maybe_cfg) {
        std::cerr << "error: cannot read config file: " << config_path << '\n';
        return 2;
    }
    sim::ScenarioConfig cfg = *maybe_cfg;
    if (seed) cfg.seed = *seed;
    log_info("running scenario: seed=" + std::to_string(cfg.seed) +
             " nodes=" + std::to_string(cfg.node_count) +
             " scheme=" + (cfg.baseline ? std::string("baseline") : std::string("htrcf")));
    auto result = sim::run_scenario(cfg);

    std::error_code ec;
    fs::create_directories(out_dir, ec);
    if (ec) {
        std::cerr << "error: cannot create output directory " << out_dir << ": " << ec.message()
                  << '\n';
        return 2;
    }
    std::string transcripts;
    for (const auto& t : result.world.transcripts) {
        transcripts += keymgmt::to_json(t, full_trace).dump();
        transcripts += '\n';
    }
    const fs::path out(out_dir);
    struct { const char* name; std::string content; } files[] = {
        {"trace.jsonl", sim::trace_to_text(result.trace)},
        {"report.json", sim::to_json(result.report).dump(2) + "\n"},
        {"report.csv", sim::report_csv(result.report)},
        {"transcripts.jsonl", std::move(transcripts)},
    };
    for (const auto& f : files) {
        if (!spill(out / f.name, f.content)) {
            std::cerr << "error: cannot write " << (out / f.name).string() << '\n';
            return 2;
        }
        log_debug(std::string("wrote ") + (out / f.name).string());
    }

    const auto& r = result.report;
    if (json) {
        std::cout << sim::to_json(r).dump(2) << '\n';
    } else {
        std::cout << "scheme           " << r.scheme << '\n'
                  << "seed             " << r.seed << '\n'
                  << "nodes            " << r.node_count << '\n'
                  << "duration_ms      " << r.duration_ms << '\n'
                  << "groups_formed    " << r.groups_formed << '\n'
                  << "election_rounds  " << r.election_rounds << '\n'
                  << "t_pow_j          " << r.t_pow << '\n'
                  << "t_time_ms        " << r.t_time << '\n'
                  << "rekey_count      " << r.rekey_count << '\n'
                  << "rekey_messages   " << r.rekey_messages << '\n'
                  << "rekey_bytes      " << r.rekey_bytes << '\n'
                  << "messages_sent    " << r.messages_sent << '\n'
                  << "bytes_sent       " << r.bytes_sent << '\n'
                  << "blacklist_count  " << r.blacklist_count << '\n'
                  << "memory_peak_b    " << r.memory_peak_bytes << '\n'
                  << "wrote " << out_dir
                  << "/{trace.jsonl, report.json, report.csv, transcripts.jsonl}\n";
    }
    return 0;
}

int cmd_compare(const std::string& config_path, std::optional<std::uint64_t> seed, bool json,
                const std::string& fixtures_path, bool fixtures_given) {
    auto maybe_cfg = load_config(config_path);
    if (!maybe_cfg) {
        std::cerr << "error: cannot read config file: " << config_path << '\n';
        return 2;
    }
    sim::ScenarioConfig cfg = *maybe_cfg;
    if (seed) cfg.seed = *seed;
    cfg.baseline = false;
    log_info("running htrcf scenario, seed=" + std::to_string(cfg.seed));
    auto a = sim::run_scenario(cfg);
    log_info("running flat baseline, seed=" + std::to_string(cfg.seed));
    auto b = sim::run_baseline(cfg);
    auto cmp = sim::compare(a.report, b.report);

    std::vector<sim::FixtureRow> fixtures;
    if (fs::exists(fixtures_path)) {
        fixtures = sim::load_fixtures(fixtures_path);
    } else if (fixtures_given) {
        std::cerr << "error: cannot open fixture file: " << fixtures_path << '\n';
        return 2;
    } else {
        log_info("fixture file " + fixtures_path + " not found; skipping reference block");
    }
    if (json) std::cout << sim::to_json(cmp, fixtures).dump(2) << '\n';
    else std::cout << sim::comparison_text(cmp, fixtures, "htrcf", "baseline");
    return 0;
}

int cmd_keygen(std::uint64_t id, unsigned bits, bool entropy) {
    if (entropy) {
        std::random_device rd;
        std::uint64_t mix = (static_cast<std::uint64_t>(rd()) << 32) ^ rd();
        id ^= mix;
        std::cout << "entropy-mixed device id: " << id << '\n';
    }
    auto pair = crypto::drsa_keygen(id, bits);  // throws on bits < 16
    std::cout << "device   " << id << '\n'
              << "bits     " << bits << '\n'
              << "public   k = 0x" << pair.k.to_hex() << '\n'
              << "modulus  n = 0x" << pair.n.to_hex() << '\n';
    Rng rng = Rng::derive(id, "keygen-demo");
    BigUint m = rng.big_below(pair.n);
    BigUint c = crypto::rsa_encrypt(m, pair.public_key());
    bool ok = crypto::rsa_decrypt(c, pair) == m;
    std::cout << "round-trip " << (ok ? "ok" : "FAILED") << '\n';
    return ok ? 0 : 1;
}

int cmd_handshake_demo(std::uint64_t seed) {
    Rng rng = Rng::derive(seed, "handshake-demo");
    auto params = crypto::default_dh_params();
    auto rep = crypto::run_handshake(params, rng);
    std::cout << "seed          " << seed << '\n'
              << "modulus       0x" << params.modulus.to_hex() << '\n'
              << "generator     " << params.generator.to_u64() << '\n'
              << "outcome       "
              << (rep.outcome == crypto::HandshakeOutcome::Verified ? "verified" : "rejected")
              << '\n'
              << "messages      " << rep.messages << '\n'
              << "bytes_on_wire " << rep.bytes_on_wire << '\n'
              << "initiator key " << key_hex(rep.initiator_view) << '\n'
              << "responder key " << key_hex(rep.responder_view) << '\n';
    if (rep.outcome == crypto::HandshakeOutcome::Verified)
        std::cout << "session key   " << key_hex(rep.session_key) << '\n';
    return rep.outcome == crypto::HandshakeOutcome::Verified ? 0 : 1;
}

int cmd_trace(const std::string& path, std::optional<std::uint64_t> node,
              const std::string& kind, std::optional<std::uint64_t> from_ms,
              std::optional<std::uint64_t> to_ms) {
    if (!kind.empty() && !trace_kind_from(kind)) {
        std::cerr << "error: unknown event kind: " << kind << '\n';
        return 1;
    }
    std::ifstream in(path);
    if (!in) {
        std::cerr << "error: cannot read trace file: " << path << '\n';
        return 2;
    }
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        auto ev = parse_trace_line(line);
        if (!ev) {
            std::cerr << "error: line " << lineno << ": malformed trace event\n";
            return 1;
        }
        if (node && ev->node != *node) continue;
        if (!kind.empty() && to_string(ev->kind) != kind) continue;
        if (from_ms && ev->time_ms < *from_ms) continue;
        if (to_ms && ev->time_ms > *to_ms) continue;
        std::cout << line << '\n';
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"HT-RCF group key management simulator"};
    app.require_subcommand(1);

    // run
    auto* run = app.add_subcommand("run", "Run a scenario and write trace + reports");
    std::string run_config, run_out = "out";
    std::uint64_t run_seed = 0;
    bool run_json = false, run_full = false;
    run->add_option("--config", run_config, "Scenario config (JSON)")->required();
    run->add_option("--out", run_out, "Output directory");
    auto* run_seed_opt = run->add_option("--seed", run_seed, "Override the config seed");
    run->add_flag("--json", run_json, "Print the report as JSON instead of a summary");
    run->add_flag("--full-trace", run_full, "Include ciphertext hex in transcripts.jsonl");

    // compare
    auto* cmp = app.add_subcommand("compare", "Run HT-RCF and the flat baseline, same seed");
    std::string cmp_config, cmp_fixtures = "data/tables2-6.csv";
    std::uint64_t cmp_seed = 0;
    bool cmp_json = false;
    cmp->add_option("--config", cmp_config, "Scenario config (JSON)")->required();
    auto* cmp_seed_opt = cmp->add_option("--seed", cmp_seed, "Override the config seed");
    cmp->add_flag("--json", cmp_json, "Machine-readable comparison");
    auto* cmp_fx_opt = cmp->add_option("--fixtures", cmp_fixtures, "Reference fixture CSV");

    // keygen
    auto* kg = app.add_subcommand("keygen", "Derive a device RSA key pair and round-trip it");
    std::uint64_t kg_id = 0;
    unsigned kg_bits = 64;
    bool kg_entropy = false;
    kg->add_option("--id", kg_id, "Device id")->required();
    kg->add_option("--bits", kg_bits, "Modulus size in bits (>= 16)");
    kg->add_flag("--entropy", kg_entropy, "Mix system entropy into the device id");

    // handshake-demo
    auto* hs = app.add_subcommand("handshake-demo", "Run one pairwise DH verification");
    std::uint64_t hs_seed = 1;
    hs->add_option("--seed", hs_seed, "Handshake seed");

    // trace
    auto* tr = app.add_subcommand("trace", "Filter a trace.jsonl file");
    std::string tr_path, tr_kind;
    std::uint64_t tr_node = 0, tr_from = 0, tr_to = 0;
    tr->add_option("--in", tr_path, "Trace file (JSON lines)")->required();
    auto* tr_node_opt = tr->add_option("--node", tr_node, "Only events for this node");
    tr->add_option("--kind", tr_kind,
                   "Only events of this kind (Send, Receive, Beacon, Rekey, Join, Leave, "
                   "Blacklist, Elect)");
    auto* tr_from_opt = tr->add_option("--from", tr_from, "Events at or after this time (ms)");
    auto* tr_to_opt = tr->add_option("--to", tr_to, "Events at or before this time (ms)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : 1;  // usage problems are exit 1; --help is 0
    }

    try {
        if (run->parsed()) {
            std::optional<std::uint64_t> seed;
            if (run_seed_opt->count()) seed = run_seed;
            return cmd_run(run_config, run_out, seed, run_json, run_full);
        }
        if (cmp->parsed()) {
            std::optional<std::uint64_t> seed;
            if (cmp_seed_opt->count()) seed = cmp_seed;
            return cmd_compare(cmp_config, seed, cmp_json, cmp_fixtures,
                               cmp_fx_opt->count() > 0);
        }
        if (kg->parsed()) return cmd_keygen(kg_id, kg_bits, kg_entropy);
        if (hs->parsed()) return cmd_handshake_demo(hs_seed);
        if (tr->parsed()) {
            std::optional<std::uint64_t> node, from_ms, to_ms;
            if (tr_node_opt->count()) node = tr_node;
            if (tr_from_opt->count()) from_ms = tr_from;
            if (tr_to_opt->count()) to_ms = tr_to;
            return cmd_trace(tr_path, node, tr_kind, from_ms, to_ms);
        }
    } catch (const sim::ConfigError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    }
    return 1;
}
