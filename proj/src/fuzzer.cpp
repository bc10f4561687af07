#include "eqperf/fuzzer.hpp"

#include <chrono>
#include <fstream>
#include <json.hpp>

#include "eqperf/catalog.hpp"
#include "eqperf/common.hpp"
#include "eqperf/generator.hpp"
#include "eqperf/grammar.hpp"
#include "eqperf/mutator.hpp"
#include "eqperf/render.hpp"

namespace eqperf {

using nlohmann::json;

namespace {

// Validation timing must never perturb the generation stream, so the
// validator draws from an independently salted engine.
constexpr uint64_t kValidatorSalt = 0x9e3779b97f4a7c15ull;

void write_text_atomic(const std::filesystem::path& target, const std::string& content) {
    std::filesystem::path tmp = target;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw Error(ErrorKind::IoError, "cannot write " + tmp.string());
        out << content;
    }
    std::filesystem::rename(tmp, target);
}

}  // namespace

FeedbackMode feedback_mode_from(const std::string& name) {
    if (name == "off") return FeedbackMode::Off;
    if (name == "mutator") return FeedbackMode::Mutator;
    if (name == "full") return FeedbackMode::Full;
    throw Error(ErrorKind::ConfigError, "unknown feedback mode: " + name);
}

const char* feedback_mode_name(FeedbackMode m) {
    switch (m) {
        case FeedbackMode::Off: return "off";
        case FeedbackMode::Mutator: return "mutator";
        case FeedbackMode::Full: return "full";
    }
    return "off";
}

void apply_config_json(RunConfig& cfg, const std::string& json_text) {
    json j;
    try {
        j = json::parse(json_text);
    } catch (const json::exception& e) {
        throw Error(ErrorKind::ConfigError, std::string("config is not valid JSON: ") + e.what());
    }
    if (!j.is_object()) throw Error(ErrorKind::ConfigError, "config root must be an object");
    try {
        for (const auto& [key, value] : j.items()) {
            if (key == "dbms") {
                cfg.dbms = value.get<std::string>();
            } else if (key == "db_path") {
                cfg.db_path = value.get<std::string>();
            } else if (key == "pg_conn") {
                cfg.pg_conn = value.get<std::string>();
            } else if (key == "seed") {
                cfg.seed = value.get<uint64_t>();
            } else if (key == "pairs") {
                cfg.pairs = value.get<int>();
            } else if (key == "duration_sec") {
                cfg.duration_sec = value.get<int>();
            } else if (key == "threshold") {
                cfg.threshold = value.get<double>();
            } else if (key == "timeout_ms") {
                cfg.timeout_ms = value.get<int>();
            } else if (key == "attempts") {
                cfg.attempts = value.get<int>();
            } else if (key == "validation_attempts") {
                cfg.validation_attempts = value.get<int>();
            } else if (key == "scale") {
                cfg.scale = value.get<double>();
            } else if (key == "load") {
                cfg.load = value.get<bool>();
            } else if (key == "out_dir") {
                cfg.out_dir = value.get<std::string>();
            } else if (key == "feedback") {
                cfg.feedback = feedback_mode_from(value.get<std::string>());
            } else if (key == "ternary") {
                cfg.ternary = value.get<bool>();
            } else if (key == "max_join_depth") {
                cfg.max_join_depth = value.get<int>();
            } else if (key == "samples_per_column") {
                cfg.samples_per_column = value.get<int>();
            } else {
                throw Error(ErrorKind::ConfigError, "unknown config key: " + key);
            }
        }
    } catch (const json::exception& e) {
        throw Error(ErrorKind::ConfigError, std::string("bad config value: ") + e.what());
    }
}

RunConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorKind::IoError, "cannot read config " + path.string());
    std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    RunConfig cfg;
    apply_config_json(cfg, text);
    return cfg;
}

std::string config_json(const RunConfig& cfg) {
    json j;
    j["dbms"] = cfg.dbms;
    j["db_path"] = cfg.db_path;
    j["pg_conn"] = cfg.pg_conn;
    j["seed"] = cfg.seed;
    j["pairs"] = cfg.pairs;
    j["duration_sec"] = cfg.duration_sec;
    j["threshold"] = cfg.threshold;
    j["timeout_ms"] = cfg.timeout_ms;
    j["attempts"] = cfg.attempts;
    j["validation_attempts"] = cfg.validation_attempts;
    j["scale"] = cfg.scale;
    j["load"] = cfg.load;
    j["out_dir"] = cfg.out_dir;
    j["feedback"] = feedback_mode_name(cfg.feedback);
    j["ternary"] = cfg.ternary;
    j["max_join_depth"] = cfg.max_join_depth;
    j["samples_per_column"] = cfg.samples_per_column;
    return j.dump(2);
}

std::string stats_json(const FuzzStats& s, const RunConfig& cfg) {
    json j;
    j["pairs_total"] = s.pairs_total;
    j["skipped_same_plan"] = s.skipped_same_plan;
    j["no_divergence"] = s.no_divergence;
    j["confirmed"] = s.confirmed;
    j["rejected"] = s.rejected;
    j["errors"] = s.errors;
    j["base_queries"] = s.base_queries;
    j["mutants_generated"] = s.mutants_generated;
    j["generation_failures"] = s.generation_failures;
    j["not_partitionable"] = s.not_partitionable;
    j["elapsed_sec"] = s.elapsed_sec;
    json acts = json::object();
    for (const auto& [id, n] : s.rule_activations) acts[std::to_string(id)] = n;
    j["rule_activations"] = acts;
    j["config"] = json::parse(config_json(cfg));
    return j.dump(2);
}

std::unique_ptr<DbAdapter> open_adapter(const RunConfig& cfg) {
    if (cfg.dbms == "embedded") return open_embedded(cfg.db_path);
    if (cfg.dbms == "postgres-family") {
        return open_postgres_family(parse_pg_conn(cfg.pg_conn));
    }
    throw Error(ErrorKind::ConfigError, "unknown dbms: " + cfg.dbms);
}

FuzzStats fuzz_loop(DbAdapter& db, const RunConfig& cfg, const FuzzCallbacks& cb) {
    if (cfg.pairs <= 0 && cfg.duration_sec <= 0) {
        throw Error(ErrorKind::ConfigError, "set a pair budget or a duration");
    }

    SchemaMetadata schema = db.retrieve_metadata();
    if (schema.tables.empty()) {
        throw Error(ErrorKind::ConfigError,
                    "target database has no tables; load a fixture first");
    }
    SampleSet samples = db.sample_values(schema, cfg.samples_per_column, cfg.seed);

    ProbabilityTable prob = init_probability_table();
    RuleFrequencyTable freq;
    FeedbackParams fb;

    Rng gen_rng(cfg.seed);
    Rng val_rng(cfg.seed ^ kValidatorSalt);

    ValidatorParams vp;
    vp.threshold = cfg.threshold;
    vp.timeout_ms = cfg.timeout_ms;
    vp.validation_attempts = cfg.validation_attempts;
    Validator validator(db, vp);

    GenParams gp;
    gp.max_join_depth = cfg.max_join_depth;

    std::filesystem::path out_dir(cfg.out_dir);
    std::filesystem::create_directories(out_dir);
    std::filesystem::path report_dir = out_dir / "reports";
    std::ofstream corpus(out_dir / "base-queries.jsonl", std::ios::app);

    FuzzStats stats;
    auto started = std::chrono::steady_clock::now();
    auto elapsed = [&] {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    };
    auto budget_left = [&] {
        if (cfg.pairs > 0 && stats.pairs_total >= cfg.pairs) return false;
        if (cfg.duration_sec > 0 && elapsed() >= cfg.duration_sec) return false;
        return true;
    };
    auto flush_stats = [&] {
        stats.elapsed_sec = elapsed();
        write_text_atomic(out_dir / "stats.json", stats_json(stats, cfg));
    };

    while (budget_left()) {
        LogicalPlan base;
        try {
            base = build_specification(schema, samples, prob, gen_rng, gp);
        } catch (const Error&) {
            ++stats.generation_failures;
            continue;
        }
        ++stats.base_queries;
        EntitySet entities = extract_entities(base);

        std::vector<Mutant> mutants;
        if (cfg.ternary) {
            try {
                mutants.push_back(ternary_partition(base.root, schema));
            } catch (const Error& e) {
                if (e.kind() != ErrorKind::NotPartitionable) throw;
                ++stats.not_partitionable;
            }
        } else {
            mutants = mutate_query(base.root, schema, gen_rng, MutatorParams{cfg.attempts});
        }
        stats.mutants_generated += static_cast<int64_t>(mutants.size());

        std::vector<int> fired_union;
        for (const auto& m : mutants) {
            for (int id : m.fired_rule_ids) {
                fired_union.push_back(id);
                ++stats.rule_activations[id];
            }
        }
        if (cfg.feedback != FeedbackMode::Off && !cfg.ternary) {
            update_from_mutator(prob, freq, entities, fired_union, !mutants.empty(), fb);
        }

        if (corpus) {
            json line;
            line["index"] = stats.base_queries - 1;
            line["sql"] = render_sql(base, db.dialect());
            line["mutants"] = mutants.size();
            corpus << line.dump() << "\n";
            corpus.flush();
        }

        for (const auto& m : mutants) {
            if (!budget_left()) break;
            PairOutcome outcome = validator.validate_pair(base.root, m, cfg.seed, val_rng);
            ++stats.pairs_total;
            switch (outcome.status) {
                case PairStatus::SkippedSamePlan: ++stats.skipped_same_plan; break;
                case PairStatus::NoDivergence: ++stats.no_divergence; break;
                case PairStatus::Rejected: ++stats.rejected; break;
                case PairStatus::Confirmed: ++stats.confirmed; break;
                case PairStatus::Error: ++stats.errors; break;
            }
            if (outcome.report) write_report(*outcome.report, report_dir);
            if (cfg.feedback == FeedbackMode::Full) {
                update_from_validator(prob, entities,
                                      outcome.status == PairStatus::Confirmed, fb);
            }
            if (cb.on_pair) {
                PairRecord rec;
                rec.index = stats.pairs_total - 1;
                rec.base_sql = render_sql(base, db.dialect());
                rec.mutant_sql = render_sql(LogicalPlan{m.plan}, db.dialect());
                rec.fired_rule_ids = m.fired_rule_ids;
                rec.status = outcome.status;
                rec.ratio = outcome.ratio;
                cb.on_pair(rec);
            }
        }
        flush_stats();
    }
    flush_stats();
    return stats;
}

}  // namespace eqperf
