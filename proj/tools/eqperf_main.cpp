#include <CLI11.hpp>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <json.hpp>

#include "eqperf/analyze.hpp"
#include "eqperf/catalog.hpp"
#include "eqperf/common.hpp"
#include "eqperf/fuzzer.hpp"
#include "eqperf/generator.hpp"
#include "eqperf/grammar.hpp"
#include "eqperf/mutator.hpp"
#include "eqperf/render.hpp"
#include "eqperf/validator.hpp"

using namespace eqperf;
using nlohmann::json;

namespace {

// Exit codes: 0 success (fuzz: no confirmed divergence), 1 fuzz confirmed at
// least one divergence (replay: did not reproduce), 2 operational error.
constexpr int kExitOk = 0;
constexpr int kExitFound = 1;
constexpr int kExitError = 2;

SchemaMetadata fixture_schema() {
    Fixture fx = build_fixture(0.0, 1);
    SchemaMetadata md;
    for (const auto& t : fx.tables) md.tables.push_back(t.info);
    return md;
}

int cmd_fuzz(const RunConfig& cfg) {
    auto db = open_adapter(cfg);
    if (cfg.load) {
        load_fixture(*db, build_fixture(cfg.scale, cfg.seed));
    }
    std::filesystem::create_directories(cfg.out_dir);
    std::ofstream pairs_log(std::filesystem::path(cfg.out_dir) / "pairs.jsonl",
                            std::ios::app);
    FuzzCallbacks cb;
    cb.on_pair = [&](const PairRecord& rec) {
        json line;
        line["index"] = rec.index;
        line["base_sql"] = rec.base_sql;
        line["mutant_sql"] = rec.mutant_sql;
        line["fired_rule_ids"] = rec.fired_rule_ids;
        line["status"] = pair_status_name(rec.status);
        line["ratio"] = rec.ratio;
        pairs_log << line.dump() << "\n";
        pairs_log.flush();
        std::fprintf(stderr, "pair %lld: %s (ratio %.2f)\n",
                     static_cast<long long>(rec.index), pair_status_name(rec.status), rec.ratio);
    };
    FuzzStats stats = fuzz_loop(*db, cfg, cb);
    std::printf("%s\n", stats_json(stats, cfg).c_str());
    return stats.confirmed > 0 ? kExitFound : kExitOk;
}

int cmd_replay(const std::string& report_path, const RunConfig& cfg) {
    std::ifstream in(report_path, std::ios::binary);
    if (!in) throw Error(ErrorKind::IoError, "cannot read " + report_path);
    json j;
    try {
        j = json::parse(in);
    } catch (const json::exception& e) {
        throw Error(ErrorKind::MalformedReport, std::string("bad report: ") + e.what());
    }
    if (!j.contains("slow") || !j.contains("fast")) {
        throw Error(ErrorKind::MalformedReport, "report lacks slow/fast entries");
    }
    std::string slow_sql = j["slow"].value("sql", "");
    std::string fast_sql = j["fast"].value("sql", "");
    double threshold = j.value("threshold", cfg.threshold);

    auto db = open_adapter(cfg);
    Rng rng(cfg.seed);
    auto run_pair = [&](double& slow_ms, double& fast_ms) {
        bool slow_first = rng.chance(0.5);
        auto once = [&](const std::string& sql) {
            ExecResult r = db->execute(sql, cfg.timeout_ms);
            return r.timed_out ? static_cast<double>(cfg.timeout_ms) : r.duration_ms;
        };
        if (slow_first) {
            slow_ms = once(slow_sql);
            fast_ms = once(fast_sql);
        } else {
            fast_ms = once(fast_sql);
            slow_ms = once(slow_sql);
        }
    };
    double s = 0, f = 0;
    run_pair(s, f);  // warmup
    int held = 0;
    int total = 1 + cfg.validation_attempts;
    double slow_sum = 0, fast_sum = 0;
    for (int i = 0; i < total; ++i) {
        run_pair(s, f);
        slow_sum += s;
        fast_sum += f;
        double ratio = s / std::max(f, 0.01);
        std::printf("run %d: slow %.2f ms, fast %.2f ms, ratio %.2f\n", i + 1, s, f, ratio);
        if (ratio > threshold) ++held;
    }
    std::printf("mean: slow %.2f ms, fast %.2f ms; threshold %.2f held in %d/%d runs\n",
                slow_sum / total, fast_sum / total, threshold, held, total);
    return held == total ? kExitOk : kExitFound;
}

int cmd_render(uint64_t seed, int count, const std::string& dialect_name,
               const std::string& db_path, bool with_mutants, bool show_plan) {
    SchemaMetadata schema;
    SampleSet samples;
    Dialect dialect = dialect_name == "postgres" ? Dialect::postgres() : Dialect::embedded();
    if (!db_path.empty()) {
        auto db = open_embedded(db_path);
        schema = db->retrieve_metadata();
        samples = db->sample_values(schema, 40, seed);
        dialect = db->dialect();
    } else {
        schema = fixture_schema();
    }
    ProbabilityTable prob = init_probability_table();
    Rng rng(seed);
    for (int i = 0; i < count; ++i) {
        LogicalPlan plan = build_specification(schema, samples, prob, rng);
        std::printf("-- query %d\n%s;\n", i, render_sql(plan, dialect).c_str());
        if (show_plan) std::printf("%s\n", plan_pretty(plan.root).c_str());
        if (with_mutants) {
            auto mutants = mutate_query(plan.root, schema, rng);
            for (size_t m = 0; m < mutants.size(); ++m) {
                std::vector<std::string> ids;
                for (int id : mutants[m].fired_rule_ids) ids.push_back(std::to_string(id));
                std::printf("-- mutant %zu (rules [%s])\n%s;\n", m, join(ids, ", ").c_str(),
                            render_sql(LogicalPlan{mutants[m].plan}, dialect).c_str());
                if (show_plan) std::printf("%s\n", plan_pretty(mutants[m].plan).c_str());
            }
        }
        std::printf("\n");
    }
    return kExitOk;
}

int cmd_fixture(double scale, uint64_t seed, const std::string& csv_dir,
                const std::string& db_path, const std::string& pg_conn, bool print_size) {
    Fixture fx = build_fixture(scale, seed);
    if (print_size) {
        size_t bytes = fixture_csv_bytes(fx);
        std::printf("scale %.4g: %zu bytes (%.1f MB)\n", scale, bytes, bytes / 1048576.0);
        for (const auto& t : fx.tables) {
            std::printf("  %s: %zu rows\n", t.info.name.c_str(), t.rows.size());
        }
    }
    if (!csv_dir.empty()) {
        write_fixture_csv(fx, csv_dir);
        std::printf("wrote CSV files to %s\n", csv_dir.c_str());
    }
    if (!db_path.empty()) {
        auto db = open_embedded(db_path);
        load_fixture(*db, fx);
        std::printf("loaded fixture into %s\n", db_path.c_str());
    }
    if (!pg_conn.empty()) {
        auto db = open_postgres_family(parse_pg_conn(pg_conn));
        load_fixture(*db, fx);
        std::printf("loaded fixture into %s\n", db->name().c_str());
    }
    return kExitOk;
}

int cmd_schema(const std::string& db_path, const std::string& pg_conn) {
    std::unique_ptr<DbAdapter> db;
    if (!pg_conn.empty()) {
        db = open_postgres_family(parse_pg_conn(pg_conn));
    } else {
        db = open_embedded(db_path);
    }
    SchemaMetadata md = db->retrieve_metadata();
    json out = json::array();
    for (const auto& t : md.tables) {
        json jt;
        jt["name"] = t.name;
        jt["row_count"] = t.row_count;
        if (t.primary_key) jt["primary_key"] = *t.primary_key;
        json cols = json::array();
        for (const auto& c : t.columns) {
            json jc;
            jc["name"] = c.name;
            jc["type"] = value_type_name(c.type);
            jc["nullable"] = c.nullable;
            jc["unique"] = c.unique;
            if (c.varchar_len) jc["varchar_len"] = *c.varchar_len;
            cols.push_back(jc);
        }
        jt["columns"] = cols;
        json fks = json::array();
        for (const auto& fk : t.foreign_keys) {
            fks.push_back({{"column", fk.column},
                           {"ref_table", fk.ref_table},
                           {"ref_column", fk.ref_column}});
        }
        jt["foreign_keys"] = fks;
        out.push_back(jt);
    }
    std::printf("%s\n", out.dump(2).c_str());
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Finds DBMS performance bugs by timing pairs of equivalent SQL queries"};
    app.require_subcommand(1);

    // fuzz ----------------------------------------------------------------
    auto* fuzz = app.add_subcommand("fuzz", "Generate, mutate and time query pairs");
    std::string config_path;
    RunConfig defaults;
    std::string opt_dbms = defaults.dbms, opt_db = defaults.db_path, opt_pg, opt_out = defaults.out_dir;
    std::string opt_feedback = feedback_mode_name(defaults.feedback);
    uint64_t opt_seed = defaults.seed;
    int opt_pairs = defaults.pairs, opt_duration = defaults.duration_sec;
    int opt_timeout = defaults.timeout_ms, opt_attempts = defaults.attempts;
    int opt_vattempts = defaults.validation_attempts, opt_depth = defaults.max_join_depth;
    int opt_samples = defaults.samples_per_column;
    double opt_threshold = defaults.threshold, opt_scale = defaults.scale;
    bool opt_load = false, opt_ternary = false;

    fuzz->add_option("--config", config_path, "JSON config; command-line flags win");
    auto* o_dbms = fuzz->add_option("--dbms", opt_dbms, "embedded | postgres-family");
    auto* o_db = fuzz->add_option("--db", opt_db, "embedded database path");
    auto* o_pg = fuzz->add_option("--pg", opt_pg, "postgres connection string (key=value ...)");
    auto* o_seed = fuzz->add_option("--seed", opt_seed, "RNG seed");
    auto* o_pairs = fuzz->add_option("--pairs", opt_pairs, "stop after N validated pairs");
    auto* o_dur = fuzz->add_option("--duration", opt_duration, "stop after N seconds");
    auto* o_thr = fuzz->add_option("--threshold", opt_threshold, "slow/fast ratio to flag");
    auto* o_tmo = fuzz->add_option("--timeout-ms", opt_timeout, "per-statement timeout");
    auto* o_att = fuzz->add_option("--attempts", opt_attempts, "mutation passes per base query");
    auto* o_vat = fuzz->add_option("--validation-attempts", opt_vattempts, "confirmation reruns");
    auto* o_scale = fuzz->add_option("--scale", opt_scale, "fixture scale for --load");
    auto* o_load = fuzz->add_flag("--load", opt_load, "load the fixture before fuzzing");
    auto* o_out = fuzz->add_option("--out", opt_out, "findings directory");
    auto* o_fb = fuzz->add_option("--feedback", opt_feedback, "off | mutator | full");
    auto* o_tern = fuzz->add_flag("--ternary", opt_ternary, "partition filters instead of rewriting");
    auto* o_depth = fuzz->add_option("--max-join-depth", opt_depth, "join nodes per FROM clause");
    auto* o_smp = fuzz->add_option("--samples-per-column", opt_samples, "literal pool per column");

    // replay --------------------------------------------------------------
    auto* replay = app.add_subcommand("replay", "Re-run the query pair from a report");
    std::string rp_report, rp_db = ":memory:", rp_pg, rp_dbms = "embedded";
    uint64_t rp_seed = 1;
    int rp_timeout = 15000, rp_vattempts = 3;
    replay->add_option("--report", rp_report, "report JSON path")->required();
    replay->add_option("--dbms", rp_dbms, "embedded | postgres-family");
    replay->add_option("--db", rp_db, "embedded database path");
    replay->add_option("--pg", rp_pg, "postgres connection string");
    replay->add_option("--seed", rp_seed, "order-shuffling seed");
    replay->add_option("--timeout-ms", rp_timeout, "per-statement timeout");
    replay->add_option("--validation-attempts", rp_vattempts, "extra timed runs");

    // analyze -------------------------------------------------------------
    auto* arules = app.add_subcommand("analyze-rules", "Rule activation and bug counts");
    std::string ar_dir = "findings";
    arules->add_option("--findings", ar_dir, "findings directory");

    auto* acoc = app.add_subcommand("analyze-cooccurrence",
                                    "Rule co-occurrence across confirmed reports");
    std::string ac_dir = "findings";
    acoc->add_option("--findings", ac_dir, "findings directory");

    // render --------------------------------------------------------------
    auto* render = app.add_subcommand("render", "Print generated queries without a target");
    uint64_t rd_seed = 1;
    int rd_count = 5;
    std::string rd_dialect = "embedded", rd_db;
    bool rd_mutants = false, rd_plan = false;
    render->add_option("--seed", rd_seed, "RNG seed");
    render->add_option("--count", rd_count, "number of base queries");
    render->add_option("--dialect", rd_dialect, "embedded | postgres");
    render->add_option("--db", rd_db, "embedded database for schema and samples");
    render->add_flag("--mutants", rd_mutants, "also print mutants");
    render->add_flag("--plan", rd_plan, "also print plan trees");

    // fixture -------------------------------------------------------------
    auto* fixture = app.add_subcommand("fixture", "Build the synthetic workload");
    double fx_scale = 1.0;
    uint64_t fx_seed = 1;
    std::string fx_csv, fx_db, fx_pg;
    bool fx_size = false;
    fixture->add_option("--scale", fx_scale, "size multiplier (1.0 is ~30 MB of CSV)");
    fixture->add_option("--seed", fx_seed, "data seed");
    fixture->add_option("--csv-dir", fx_csv, "write CSV files here");
    fixture->add_option("--db", fx_db, "create and load an embedded database");
    fixture->add_option("--pg", fx_pg, "load into a postgres-family server");
    fixture->add_flag("--size", fx_size, "print byte and row counts");

    // schema --------------------------------------------------------------
    auto* schema = app.add_subcommand("schema", "Print database metadata as JSON");
    std::string sc_db = ":memory:", sc_pg;
    schema->add_option("--db", sc_db, "embedded database path");
    schema->add_option("--pg", sc_pg, "postgres connection string");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? kExitOk : kExitError;
    }

    try {
        if (fuzz->parsed()) {
            RunConfig cfg;
            if (!config_path.empty()) cfg = load_config(config_path);
            if (o_dbms->count()) cfg.dbms = opt_dbms;
            if (o_db->count()) cfg.db_path = opt_db;
            if (o_pg->count()) {
                cfg.pg_conn = opt_pg;
                if (!o_dbms->count()) cfg.dbms = "postgres-family";
            }
            if (o_seed->count()) cfg.seed = opt_seed;
            if (o_pairs->count()) cfg.pairs = opt_pairs;
            if (o_dur->count()) cfg.duration_sec = opt_duration;
            if (o_thr->count()) cfg.threshold = opt_threshold;
            if (o_tmo->count()) cfg.timeout_ms = opt_timeout;
            if (o_att->count()) cfg.attempts = opt_attempts;
            if (o_vat->count()) cfg.validation_attempts = opt_vattempts;
            if (o_scale->count()) cfg.scale = opt_scale;
            if (o_load->count()) cfg.load = opt_load;
            if (o_out->count()) cfg.out_dir = opt_out;
            if (o_fb->count()) cfg.feedback = feedback_mode_from(opt_feedback);
            if (o_tern->count()) cfg.ternary = opt_ternary;
            if (o_depth->count()) cfg.max_join_depth = opt_depth;
            if (o_smp->count()) cfg.samples_per_column = opt_samples;
            return cmd_fuzz(cfg);
        }
        if (replay->parsed()) {
            RunConfig cfg;
            cfg.dbms = rp_dbms;
            cfg.db_path = rp_db;
            cfg.pg_conn = rp_pg;
            if (!rp_pg.empty()) cfg.dbms = "postgres-family";
            cfg.seed = rp_seed;
            cfg.timeout_ms = rp_timeout;
            cfg.validation_attempts = rp_vattempts;
            return cmd_replay(rp_report, cfg);
        }
        if (arules->parsed()) {
            std::printf("%s", rule_stats_table(rule_stats(ar_dir)).c_str());
            return kExitOk;
        }
        if (acoc->parsed()) {
            std::printf("%s", cooccurrence_table(rule_cooccurrence(ac_dir)).c_str());
            return kExitOk;
        }
        if (render->parsed()) {
            return cmd_render(rd_seed, rd_count, rd_dialect, rd_db, rd_mutants, rd_plan);
        }
        if (fixture->parsed()) {
            return cmd_fixture(fx_scale, fx_seed, fx_csv, fx_db, fx_pg, fx_size);
        }
        if (schema->parsed()) {
            return cmd_schema(sc_db, sc_pg);
        }
    } catch (const Error& e) {
        std::fprintf(stderr, "error (%s): %s\n", error_kind_name(e.kind()), e.what());
        return kExitError;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitError;
    }
    return kExitError;
}
