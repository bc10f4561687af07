#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "eqperf/adapter.hpp"
#include "eqperf/ir.hpp"
#include "eqperf/mutator.hpp"
#include "eqperf/rng.hpp"

namespace eqperf {

struct ValidatorParams {
    double threshold = 2.0;       // slow/fast ratio that counts as divergence
    int timeout_ms = 15000;
    int validation_attempts = 3;  // confirmation reruns
    int warmup_runs = 1;          // unmeasured executions before timing
};

enum class PairStatus {
    SkippedSamePlan,  // both queries optimize to the same plan
    NoDivergence,     // ran, ratio under threshold
    Rejected,         // initial divergence did not reproduce
    Confirmed,        // consistent divergence: bug report generated
    Error,            // render/explain/execution failure
};

const char* pair_status_name(PairStatus s);

struct RunTiming {
    double base_ms = 0;
    double mutant_ms = 0;
    bool base_first = true;
    bool base_timed_out = false;
    bool mutant_timed_out = false;
};

struct BugReport {
    std::string id;  // digest of the two statements
    std::string dbms;
    uint64_t seed = 0;
    double threshold = 0;
    int timeout_ms = 0;
    int64_t created_unix = 0;

    std::string slow_sql;
    std::string fast_sql;
    double slow_ms = 0;  // mean over all measured runs
    double fast_ms = 0;
    double ratio = 0;
    std::string slow_plan;
    std::string fast_plan;
    bool mutant_is_slow = true;
    std::vector<int> fired_rule_ids;
    std::vector<RunTiming> runs;
    std::string duplicate_of;  // id of an earlier report with the same plan shapes
};

struct PairOutcome {
    PairStatus status = PairStatus::Error;
    double ratio = 0.0;
    std::string detail;
    std::optional<BugReport> report;
};

class Validator {
  public:
    Validator(DbAdapter& db, ValidatorParams params) : db_(db), params_(params) {}

    // Renders both plans, skips same-plan pairs, times the rest, and demands
    // that an over-threshold gap reproduces in randomized-order reruns before
    // a report is produced.
    PairOutcome validate_pair(const PlanPtr& base, const Mutant& mutant, uint64_t seed, Rng& rng);

    // True when the engine's plans for the two statements differ (estimated
    // cost when available, plan shape otherwise). Exposed for tests.
    bool plans_differ(const PlanInfo& a, const PlanInfo& b) const;

  private:
    DbAdapter& db_;
    ValidatorParams params_;
    std::map<uint64_t, std::string> seen_shapes_;  // plan-shape digest -> first report id
};

// Result-set equality oracle. Column counts must match; rows are compared as
// a multiset unless order_sensitive. Doubles compare with relative tolerance;
// NULL equals NULL. Very large results (>100k rows) fall back to an exact
// digest comparison with no tolerance.
bool results_equivalent(const ExecResult& a, const ExecResult& b, bool order_sensitive,
                        double rel_tol = 1e-9, std::string* why = nullptr);

// True when both plans end in an ORDER BY, making row order part of the
// contract for the comparison above.
bool order_is_observable(const PlanPtr& a, const PlanPtr& b);

std::string report_json(const BugReport& r);
std::string report_markdown(const BugReport& r);

// Writes <id>.json and <id>.md atomically; returns the json path.
std::filesystem::path write_report(const BugReport& r, const std::filesystem::path& dir);

}  // namespace eqperf
