#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "eqperf/adapter.hpp"
#include "eqperf/validator.hpp"

namespace eqperf {

enum class FeedbackMode {
    Off,      // static probability table
    Mutator,  // mutation success/failure steers generation
    Full,     // mutation feedback plus confirmed-bug rewards
};

FeedbackMode feedback_mode_from(const std::string& name);
const char* feedback_mode_name(FeedbackMode m);

struct RunConfig {
    std::string dbms = "embedded";     // embedded | postgres-family
    std::string db_path = ":memory:";  // embedded database location
    std::string pg_conn;               // "host=... port=... user=... dbname=..."
    uint64_t seed = 1;
    int pairs = 0;         // stop after this many validated pairs (0: no cap)
    int duration_sec = 0;  // stop after this long (0: no cap)
    double threshold = 2.0;
    int timeout_ms = 15000;
    int attempts = 20;  // mutation passes per base query
    int validation_attempts = 3;
    double scale = 0.01;  // fixture scale for --load
    bool load = false;    // build and load the fixture before fuzzing
    std::string out_dir = "findings";
    FeedbackMode feedback = FeedbackMode::Mutator;
    bool ternary = false;  // partition the filter instead of applying rewrites
    int max_join_depth = 3;
    int samples_per_column = 40;
};

// Overlays keys from a JSON object onto `cfg`; unknown keys are errors.
void apply_config_json(RunConfig& cfg, const std::string& json_text);
RunConfig load_config(const std::filesystem::path& path);
std::string config_json(const RunConfig& cfg);

struct FuzzStats {
    int64_t pairs_total = 0;
    int64_t skipped_same_plan = 0;
    int64_t no_divergence = 0;
    int64_t confirmed = 0;
    int64_t rejected = 0;
    int64_t errors = 0;
    int64_t base_queries = 0;
    int64_t mutants_generated = 0;
    int64_t generation_failures = 0;
    int64_t not_partitionable = 0;
    double elapsed_sec = 0;
    std::map<int, int64_t> rule_activations;

    bool conserved() const {
        return pairs_total ==
               skipped_same_plan + no_divergence + confirmed + rejected + errors;
    }
};

std::string stats_json(const FuzzStats& s, const RunConfig& cfg);

struct PairRecord {
    int64_t index = 0;
    std::string base_sql;
    std::string mutant_sql;
    std::vector<int> fired_rule_ids;
    PairStatus status = PairStatus::Error;
    double ratio = 0;
};

struct FuzzCallbacks {
    std::function<void(const PairRecord&)> on_pair;
};

// The main loop: generate a base query, derive equivalent mutants, time each
// pair on the target, report confirmed divergences into cfg.out_dir. Returns
// aggregate counters; every validated pair lands in exactly one of them.
FuzzStats fuzz_loop(DbAdapter& db, const RunConfig& cfg, const FuzzCallbacks& cb = {});

std::unique_ptr<DbAdapter> open_adapter(const RunConfig& cfg);

}  // namespace eqperf
