#include "eqperf/validator.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <fstream>
#include <json.hpp>

#include "eqperf/common.hpp"
#include "eqperf/render.hpp"

namespace eqperf {

using nlohmann::json;

const char* pair_status_name(PairStatus s) {
    switch (s) {
        case PairStatus::SkippedSamePlan: return "skipped_same_plan";
        case PairStatus::NoDivergence: return "no_divergence";
        case PairStatus::Rejected: return "rejected";
        case PairStatus::Confirmed: return "confirmed";
        case PairStatus::Error: return "error";
    }
    return "unknown";
}

namespace {

// Floor for the denominator: sub-hundredth-millisecond readings are noise.
constexpr double kMinTimeMs = 0.01;

double effective_ms(double measured, bool timed_out, int timeout_ms) {
    return timed_out ? static_cast<double>(timeout_ms) : measured;
}

double pair_ratio(const RunTiming& t, int timeout_ms) {
    double b = effective_ms(t.base_ms, t.base_timed_out, timeout_ms);
    double m = effective_ms(t.mutant_ms, t.mutant_timed_out, timeout_ms);
    double lo = std::max(std::min(b, m), kMinTimeMs);
    double hi = std::max(b, m);
    return hi / lo;
}

}  // namespace

bool Validator::plans_differ(const PlanInfo& a, const PlanInfo& b) const {
    if (a.cost && b.cost) return *a.cost != *b.cost;
    return a.fingerprint != b.fingerprint;
}

PairOutcome Validator::validate_pair(const PlanPtr& base, const Mutant& mutant, uint64_t seed,
                                     Rng& rng) {
    PairOutcome out;
    std::string base_sql, mutant_sql;
    PlanInfo base_plan, mutant_plan;
    try {
        base_sql = render_sql(LogicalPlan{base}, db_.dialect());
        mutant_sql = render_sql(LogicalPlan{mutant.plan}, db_.dialect());
        base_plan = db_.explain(base_sql, params_.timeout_ms);
        mutant_plan = db_.explain(mutant_sql, params_.timeout_ms);
    } catch (const Error& e) {
        out.status = PairStatus::Error;
        out.detail = std::string(error_kind_name(e.kind())) + ": " + e.what();
        return out;
    }

    if (!plans_differ(base_plan, mutant_plan)) {
        out.status = PairStatus::SkippedSamePlan;
        return out;
    }

    auto run_pair = [&](bool measured) -> RunTiming {
        RunTiming t;
        t.base_first = rng.chance(0.5);
        auto run_one = [&](const std::string& sql, double& ms, bool& timed_out) {
            ExecResult r = db_.execute(sql, params_.timeout_ms);
            ms = r.duration_ms;
            timed_out = r.timed_out;
        };
        if (t.base_first) {
            run_one(base_sql, t.base_ms, t.base_timed_out);
            run_one(mutant_sql, t.mutant_ms, t.mutant_timed_out);
        } else {
            run_one(mutant_sql, t.mutant_ms, t.mutant_timed_out);
            run_one(base_sql, t.base_ms, t.base_timed_out);
        }
        (void)measured;
        return t;
    };

    std::vector<RunTiming> runs;
    try {
        for (int i = 0; i < params_.warmup_runs; ++i) (void)run_pair(false);
        runs.push_back(run_pair(true));
    } catch (const Error& e) {
        out.status = PairStatus::Error;
        out.detail = std::string(error_kind_name(e.kind())) + ": " + e.what();
        return out;
    }

    if (runs[0].base_timed_out && runs[0].mutant_timed_out) {
        out.status = PairStatus::NoDivergence;
        out.detail = "both statements timed out";
        return out;
    }
    out.ratio = pair_ratio(runs[0], params_.timeout_ms);
    if (out.ratio <= params_.threshold) {
        out.status = PairStatus::NoDivergence;
        return out;
    }

    // The gap must reproduce: the first sighting counts as one observation
    // and all but one rerun must agree with it.
    int difference_count = 1;
    try {
        for (int k = 1; k <= params_.validation_attempts; ++k) {
            RunTiming t = run_pair(true);
            runs.push_back(t);
            if (pair_ratio(t, params_.timeout_ms) > params_.threshold) ++difference_count;
        }
    } catch (const Error& e) {
        out.status = PairStatus::Error;
        out.detail = std::string(error_kind_name(e.kind())) + ": " + e.what();
        return out;
    }
    if (difference_count < params_.validation_attempts) {
        out.status = PairStatus::Rejected;
        out.detail = "difference reproduced in " + std::to_string(difference_count - 1) + "/" +
                     std::to_string(params_.validation_attempts) + " reruns";
        return out;
    }

    double base_sum = 0, mutant_sum = 0;
    for (const auto& t : runs) {
        base_sum += effective_ms(t.base_ms, t.base_timed_out, params_.timeout_ms);
        mutant_sum += effective_ms(t.mutant_ms, t.mutant_timed_out, params_.timeout_ms);
    }
    double base_mean = base_sum / static_cast<double>(runs.size());
    double mutant_mean = mutant_sum / static_cast<double>(runs.size());

    BugReport r;
    r.dbms = db_.name();
    r.seed = seed;
    r.threshold = params_.threshold;
    r.timeout_ms = params_.timeout_ms;
    r.created_unix = static_cast<int64_t>(
        std::chrono::duration_cast<std::chrono::seconds>(
            std::chrono::system_clock::now().time_since_epoch())
            .count());
    r.mutant_is_slow = mutant_mean >= base_mean;
    r.slow_sql = r.mutant_is_slow ? mutant_sql : base_sql;
    r.fast_sql = r.mutant_is_slow ? base_sql : mutant_sql;
    r.slow_ms = std::max(base_mean, mutant_mean);
    r.fast_ms = std::min(base_mean, mutant_mean);
    r.ratio = r.slow_ms / std::max(r.fast_ms, kMinTimeMs);
    r.slow_plan = r.mutant_is_slow ? mutant_plan.raw : base_plan.raw;
    r.fast_plan = r.mutant_is_slow ? base_plan.raw : mutant_plan.raw;
    r.fired_rule_ids = mutant.fired_rule_ids;
    r.runs = runs;
    r.id = to_hex(fnv1a64(r.slow_sql + "\n" + r.fast_sql));

    uint64_t shape = fnv1a64(base_plan.fingerprint) ^ (fnv1a64(mutant_plan.fingerprint) << 1 |
                                                       fnv1a64(mutant_plan.fingerprint) >> 63);
    auto [it, fresh] = seen_shapes_.emplace(shape, r.id);
    if (!fresh) r.duplicate_of = it->second;

    out.status = PairStatus::Confirmed;
    out.ratio = r.ratio;
    out.report = std::move(r);
    return out;
}

namespace {

std::string value_repr(const Value& v) {
    if (std::holds_alternative<std::monostate>(v)) return "\x01null";
    if (const auto* i = std::get_if<int64_t>(&v)) return "i" + std::to_string(*i);
    if (const auto* d = std::get_if<double>(&v)) {
        char buf[40];
        std::snprintf(buf, sizeof(buf), "d%.17g", *d);
        return buf;
    }
    return "s" + std::get<std::string>(v);
}

int row_order(const std::vector<Value>& a, const std::vector<Value>& b) {
    for (size_t i = 0; i < a.size() && i < b.size(); ++i) {
        int c = value_order(a[i], b[i]);
        if (c != 0) return c;
    }
    return 0;
}

bool rows_equal(const std::vector<Value>& a, const std::vector<Value>& b, double rel_tol) {
    if (a.size() != b.size()) return false;
    for (size_t i = 0; i < a.size(); ++i) {
        if (!value_equal(a[i], b[i], rel_tol)) return false;
    }
    return true;
}

}  // namespace

bool results_equivalent(const ExecResult& a, const ExecResult& b, bool order_sensitive,
                        double rel_tol, std::string* why) {
    auto fail = [&](const std::string& msg) {
        if (why) *why = msg;
        return false;
    };
    if (a.column_names.size() != b.column_names.size()) {
        return fail("column count differs: " + std::to_string(a.column_names.size()) + " vs " +
                    std::to_string(b.column_names.size()));
    }
    if (a.rows.size() != b.rows.size()) {
        return fail("row count differs: " + std::to_string(a.rows.size()) + " vs " +
                    std::to_string(b.rows.size()));
    }
    if (order_sensitive) {
        for (size_t i = 0; i < a.rows.size(); ++i) {
            if (!rows_equal(a.rows[i], b.rows[i], rel_tol)) {
                return fail("row " + std::to_string(i) + " differs");
            }
        }
        return true;
    }
    if (a.rows.size() > 100000) {
        // Exact digest; tolerance is dropped at this size.
        auto digest = [](const ExecResult& r) {
            uint64_t acc = 0;
            for (const auto& row : r.rows) {
                std::string repr;
                for (const auto& v : row) {
                    repr += value_repr(v);
                    repr += '\x02';
                }
                acc += fnv1a64(repr);
            }
            return acc;
        };
        if (digest(a) != digest(b)) return fail("multiset digest differs");
        return true;
    }
    std::vector<const std::vector<Value>*> ra, rb;
    ra.reserve(a.rows.size());
    rb.reserve(b.rows.size());
    for (const auto& r : a.rows) ra.push_back(&r);
    for (const auto& r : b.rows) rb.push_back(&r);
    auto cmp = [](const std::vector<Value>* x, const std::vector<Value>* y) {
        return row_order(*x, *y) < 0;
    };
    std::sort(ra.begin(), ra.end(), cmp);
    std::sort(rb.begin(), rb.end(), cmp);
    for (size_t i = 0; i < ra.size(); ++i) {
        if (!rows_equal(*ra[i], *rb[i], rel_tol)) {
            return fail("sorted row " + std::to_string(i) + " differs");
        }
    }
    return true;
}

bool order_is_observable(const PlanPtr& a, const PlanPtr& b) {
    auto sorted_top = [](const PlanPtr& p) {
        const PlanPtr* cur = &p;
        // A LIMIT above the sort does not disturb the order.
        while (std::holds_alternative<LimitOp>((*cur)->op)) cur = &(*cur)->children[0];
        return std::holds_alternative<SortOp>((*cur)->op);
    };
    return sorted_top(a) && sorted_top(b);
}

std::string report_json(const BugReport& r) {
    json j;
    j["id"] = r.id;
    j["dbms"] = r.dbms;
    j["seed"] = r.seed;
    j["threshold"] = r.threshold;
    j["timeout_ms"] = r.timeout_ms;
    j["created_unix"] = r.created_unix;
    j["ratio"] = r.ratio;
    j["slow"] = {{"sql", r.slow_sql}, {"mean_ms", r.slow_ms}, {"plan", r.slow_plan}};
    j["fast"] = {{"sql", r.fast_sql}, {"mean_ms", r.fast_ms}, {"plan", r.fast_plan}};
    j["mutant_is_slow"] = r.mutant_is_slow;
    j["fired_rule_ids"] = r.fired_rule_ids;
    json runs = json::array();
    for (const auto& t : r.runs) {
        runs.push_back({{"base_ms", t.base_ms},
                        {"mutant_ms", t.mutant_ms},
                        {"base_first", t.base_first},
                        {"base_timed_out", t.base_timed_out},
                        {"mutant_timed_out", t.mutant_timed_out}});
    }
    j["runs"] = runs;
    j["duplicate_of"] = r.duplicate_of.empty() ? json(nullptr) : json(r.duplicate_of);
    return j.dump(2);
}

std::string report_markdown(const BugReport& r) {
    char ratio_buf[32];
    std::snprintf(ratio_buf, sizeof(ratio_buf), "%.1f", r.ratio);
    std::string md;
    md += "# Performance divergence " + r.id + "\n\n";
    md += "- DBMS: " + r.dbms + "\n";
    md += "- Observed slow-down: " + std::string(ratio_buf) + "x (" +
          std::to_string(r.slow_ms) + " ms vs " + std::to_string(r.fast_ms) + " ms, mean of " +
          std::to_string(r.runs.size()) + " runs)\n";
    md += "- Slow statement is the " + std::string(r.mutant_is_slow ? "mutant" : "base") + "\n";
    if (!r.fired_rule_ids.empty()) {
        std::vector<std::string> ids;
        for (int id : r.fired_rule_ids) ids.push_back(std::to_string(id));
        md += "- Rewrites applied: [" + join(ids, ", ") + "]\n";
    }
    if (!r.duplicate_of.empty()) md += "- Likely duplicate of: " + r.duplicate_of + "\n";
    md += "\n## Slow query\n\n```sql\n" + r.slow_sql + "\n```\n\n```\n" + r.slow_plan +
          "\n```\n";
    md += "\n## Fast query\n\n```sql\n" + r.fast_sql + "\n```\n\n```\n" + r.fast_plan +
          "\n```\n";
    md += "\nBoth statements request the same rows; the runtime gap above the " +
          std::to_string(r.threshold) + "x threshold reproduced across reruns in shuffled "
          "order.\n";
    return md;
}

std::filesystem::path write_report(const BugReport& r, const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    auto write_atomic = [&](const std::filesystem::path& target, const std::string& content) {
        std::filesystem::path tmp = target;
        tmp += ".tmp";
        {
            std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
            if (!out) throw Error(ErrorKind::IoError, "cannot write " + tmp.string());
            out << content;
        }
        std::filesystem::rename(tmp, target);
    };
    std::filesystem::path jpath = dir / (r.id + ".json");
    write_atomic(jpath, report_json(r));
    write_atomic(dir / (r.id + ".md"), report_markdown(r));
    return jpath;
}

}  // namespace eqperf
