#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <fstream>
#include <json.hpp>

#include "eqperf/validator.hpp"
#include "support.hpp"

using namespace eqperf;
using namespace eqperf::build;
using testutil::FakeAdapter;
using testutil::PerturbShim;
using testutil::fixture_schema;

namespace {

struct PairFixture {
    SchemaMetadata md = fixture_schema();
    PlanPtr base;
    Mutant mutant;
    std::string base_sql;
    std::string mutant_sql;

    PairFixture() {
        base = filter(cmp(CmpOp::Eq, col("emp", "empno", ValueType::Integer), lit_int(1)),
                      scan(md, "emp"));
        mutant.plan = filter(cmp(CmpOp::Eq, lit_int(1),
                                 col("emp", "empno", ValueType::Integer)),
                             scan(md, "emp"));
        mutant.fired_rule_ids = {40};
        base_sql = render_sql(base, Dialect::embedded());
        mutant_sql = render_sql(mutant.plan, Dialect::embedded());
        REQUIRE(base_sql != mutant_sql);
    }
};

ValidatorParams quick_params() {
    ValidatorParams p;
    p.threshold = 2.0;
    p.timeout_ms = 1000;
    p.validation_attempts = 3;
    p.warmup_runs = 0;
    return p;
}

}  // namespace

TEST_CASE("a consistent runtime gap is confirmed with a full report") {
    PairFixture fx;
    FakeAdapter db;
    db.scripts[fx.base_sql] = {100.0, "fpA", {}, false};
    db.scripts[fx.mutant_sql] = {300.0, "fpB", {}, false};

    Validator v(db, quick_params());
    Rng rng(5);
    PairOutcome out = v.validate_pair(fx.base, fx.mutant, 42, rng);

    CHECK(out.status == PairStatus::Confirmed);
    CHECK(out.ratio == doctest::Approx(3.0));
    REQUIRE(out.report.has_value());
    const BugReport& r = *out.report;
    CHECK(r.slow_sql == fx.mutant_sql);
    CHECK(r.fast_sql == fx.base_sql);
    CHECK(r.mutant_is_slow);
    CHECK(r.slow_ms == doctest::Approx(300.0));
    CHECK(r.fast_ms == doctest::Approx(100.0));
    CHECK(r.ratio == doctest::Approx(3.0));
    CHECK(r.seed == 42);
    CHECK(r.dbms == "scripted");
    CHECK(r.fired_rule_ids == std::vector<int>{40});
    CHECK(r.runs.size() == 4);  // initial measurement plus three reruns
    CHECK_FALSE(r.id.empty());
    CHECK(r.duplicate_of.empty());

    // No warmup: 4 timed pair runs = 8 executions, 2 explains.
    CHECK(db.exec_log.size() == 8);
    CHECK(db.explain_log.size() == 2);
}

TEST_CASE("warmup runs execute but are not measured") {
    PairFixture fx;
    FakeAdapter db;
    db.scripts[fx.base_sql] = {100.0, "fpA", {}, false};
    db.scripts[fx.mutant_sql] = {300.0, "fpB", {}, false};

    ValidatorParams p = quick_params();
    p.warmup_runs = 1;
    Validator v(db, p);
    Rng rng(5);
    PairOutcome out = v.validate_pair(fx.base, fx.mutant, 1, rng);
    CHECK(out.status == PairStatus::Confirmed);
    CHECK(out.report->runs.size() == 4);
    CHECK(db.exec_log.size() == 10);  // one warmup pair on top of the timed ones
}

TEST_CASE("same-plan pairs are skipped without a single execution") {
    PairFixture fx;
    FakeAdapter db;
    db.scripts[fx.base_sql] = {100.0, "same", {}, false};
    db.scripts[fx.mutant_sql] = {900.0, "same", {}, false};

    Validator v(db, quick_params());
    Rng rng(5);
    PairOutcome out = v.validate_pair(fx.base, fx.mutant, 1, rng);
    CHECK(out.status == PairStatus::SkippedSamePlan);
    CHECK(db.exec_log.empty());
    CHECK(db.explain_log.size() == 2);
}

TEST_CASE("a ratio exactly at the threshold does not count as divergence") {
    PairFixture fx;
    FakeAdapter db;
    db.scripts[fx.base_sql] = {100.0, "fpA", {}, false};
    db.scripts[fx.mutant_sql] = {200.0, "fpB", {}, false};

    Validator v(db, quick_params());
    Rng rng(5);
    PairOutcome out = v.validate_pair(fx.base, fx.mutant, 1, rng);
    CHECK(out.status == PairStatus::NoDivergence);
    CHECK(out.ratio == doctest::Approx(2.0));
    CHECK(db.exec_log.size() == 2);  // the initial run settles it
}

TEST_CASE("a gap that appears only on the first execution is rejected") {
    PairFixture fx;
    FakeAdapter db;
    db.scripts[fx.base_sql] = {100.0, "fpA", {}, false};
    db.scripts[fx.mutant_sql] = {100.0, "fpB", {}, false};

    PerturbShim shim(db, 1, 10.0);
    Validator v(shim, quick_params());
    Rng rng(5);
    PairOutcome out = v.validate_pair(fx.base, fx.mutant, 1, rng);
    CHECK(out.status == PairStatus::Rejected);
    CHECK(out.detail.find("0/3") != std::string::npos);
    CHECK(shim.execute_calls == 8);
}

TEST_CASE("a divergence that keeps reproducing under the shim is still confirmed") {
    PairFixture fx;
    FakeAdapter db;
    db.scripts[fx.base_sql] = {100.0, "fpA", {}, false};
    db.scripts[fx.mutant_sql] = {500.0, "fpB", {}, false};

    // Perturbing one call cannot hide a real, repeating gap.
    PerturbShim shim(db, 1, 10.0);
    Validator v(shim, quick_params());
    Rng rng(5);
    PairOutcome out = v.validate_pair(fx.base, fx.mutant, 1, rng);
    CHECK(out.status == PairStatus::Confirmed);
}

TEST_CASE("one rerun may disagree without sinking the confirmation") {
    PairFixture fx;
    FakeAdapter db;
    db.scripts[fx.base_sql] = {100.0, "fpA", {}, false};
    db.scripts[fx.mutant_sql] = {300.0, "fpB", {}, false};
    // Runs are pairs; make the mutant fast during exactly one rerun.
    db.duration_hook = [&](const std::string& sql, int idx) {
        if (sql == fx.mutant_sql && (idx == 2 || idx == 3)) return 100.0;
        return db.scripts[sql].duration_ms;
    };

    Validator v(db, quick_params());
    Rng rng(5);
    PairOutcome out = v.validate_pair(fx.base, fx.mutant, 1, rng);
    CHECK(out.status == PairStatus::Confirmed);

    // Two disagreeing reruns sink it.
    FakeAdapter db2;
    db2.scripts[fx.base_sql] = {100.0, "fpA", {}, false};
    db2.scripts[fx.mutant_sql] = {300.0, "fpB", {}, false};
    db2.duration_hook = [&](const std::string& sql, int idx) {
        if (sql == fx.mutant_sql && idx >= 2 && idx <= 5) return 100.0;
        return db2.scripts[sql].duration_ms;
    };
    Validator v2(db2, quick_params());
    PairOutcome out2 = v2.validate_pair(fx.base, fx.mutant, 1, rng);
    CHECK(out2.status == PairStatus::Rejected);
}

TEST_CASE("timeouts on both sides end the pair without confirmation") {
    PairFixture fx;
    FakeAdapter db;
    db.scripts[fx.base_sql] = {1000.0, "fpA", {}, true};
    db.scripts[fx.mutant_sql] = {1000.0, "fpB", {}, true};

    Validator v(db, quick_params());
    Rng rng(5);
    PairOutcome out = v.validate_pair(fx.base, fx.mutant, 1, rng);
    CHECK(out.status == PairStatus::NoDivergence);
    CHECK(out.detail.find("timed out") != std::string::npos);
}

TEST_CASE("a one-sided timeout counts at the timeout budget") {
    PairFixture fx;
    FakeAdapter db;
    db.scripts[fx.base_sql] = {50.0, "fpA", {}, false};
    db.scripts[fx.mutant_sql] = {0.0, "fpB", {}, true};  // always times out

    Validator v(db, quick_params());  // timeout_ms = 1000 -> ratio 20
    Rng rng(5);
    PairOutcome out = v.validate_pair(fx.base, fx.mutant, 1, rng);
    CHECK(out.status == PairStatus::Confirmed);
    CHECK(out.report->slow_ms == doctest::Approx(1000.0));
    CHECK(out.report->ratio == doctest::Approx(20.0));
}

TEST_CASE("execution failures surface as pair errors") {
    PairFixture fx;
    FakeAdapter db;
    db.scripts[fx.base_sql] = {100.0, "fpA", {}, false};
    // No script for the mutant: explain already fails.
    Validator v(db, quick_params());
    Rng rng(5);
    PairOutcome out = v.validate_pair(fx.base, fx.mutant, 1, rng);
    CHECK(out.status == PairStatus::Error);
    CHECK(out.detail.find("ExecutionError") != std::string::npos);
}

TEST_CASE("plan comparison prefers cost estimates when both sides have them") {
    FakeAdapter db;
    Validator v(db, quick_params());
    PlanInfo a{"raw", "fpX", 10.0};
    PlanInfo b{"raw", "fpX", 20.0};
    CHECK(v.plans_differ(a, b));  // same shape, different cost

    PlanInfo c{"raw", "fpX", 10.0};
    PlanInfo d{"raw", "fpY", 10.0};
    CHECK_FALSE(v.plans_differ(c, d));  // equal cost wins over shape

    PlanInfo e{"raw", "fpX", {}};
    PlanInfo f{"raw", "fpY", 10.0};
    CHECK(v.plans_differ(e, f));  // fall back to fingerprints
    PlanInfo g{"raw", "fpX", {}};
    CHECK_FALSE(v.plans_differ(e, g));
}

TEST_CASE("repeated plan shapes are flagged as duplicates") {
    PairFixture fx;
    FakeAdapter db;
    db.scripts[fx.base_sql] = {100.0, "fpA", {}, false};
    db.scripts[fx.mutant_sql] = {300.0, "fpB", {}, false};

    Validator v(db, quick_params());
    Rng rng(5);
    PairOutcome first = v.validate_pair(fx.base, fx.mutant, 1, rng);
    REQUIRE(first.status == PairStatus::Confirmed);
    PairOutcome second = v.validate_pair(fx.base, fx.mutant, 2, rng);
    REQUIRE(second.status == PairStatus::Confirmed);
    CHECK(second.report->duplicate_of == first.report->id);
}

TEST_CASE("result comparison accepts reordered rows unless order is observable") {
    ExecResult a;
    a.column_names = {"x", "y"};
    a.rows = {{Value{int64_t{1}}, Value{std::string{"a"}}},
              {Value{int64_t{2}}, Value{std::string{"b"}}}};
    ExecResult b;
    b.column_names = {"x", "y"};
    b.rows = {{Value{int64_t{2}}, Value{std::string{"b"}}},
              {Value{int64_t{1}}, Value{std::string{"a"}}}};

    CHECK(results_equivalent(a, b, false));
    std::string why;
    CHECK_FALSE(results_equivalent(a, b, true, 1e-9, &why));
    CHECK_FALSE(why.empty());
}

TEST_CASE("result comparison tolerates last-bit float noise but not real drift") {
    ExecResult a;
    a.column_names = {"v"};
    a.rows = {{Value{1.0}}};
    ExecResult b = a;
    b.rows = {{Value{1.0 + 1e-13}}};
    CHECK(results_equivalent(a, b, false));

    ExecResult c = a;
    c.rows = {{Value{1.1}}};
    std::string why;
    CHECK_FALSE(results_equivalent(a, c, false, 1e-9, &why));
    CHECK(why.find("row") != std::string::npos);
}

TEST_CASE("NULL equals NULL and mismatched shapes are rejected") {
    ExecResult a;
    a.column_names = {"v"};
    a.rows = {{Value{}}};
    ExecResult b = a;
    CHECK(results_equivalent(a, b, false));

    ExecResult wide;
    wide.column_names = {"v", "w"};
    wide.rows = {{Value{}, Value{}}};
    std::string why;
    CHECK_FALSE(results_equivalent(a, wide, false, 1e-9, &why));
    CHECK(why.find("column") != std::string::npos);

    ExecResult more = a;
    more.rows.push_back({Value{}});
    CHECK_FALSE(results_equivalent(a, more, false, 1e-9, &why));
}

TEST_CASE("very large results compare by digest") {
    ExecResult a;
    a.column_names = {"i"};
    for (int64_t i = 0; i < 100001; ++i) a.rows.push_back({Value{i}});
    ExecResult b = a;
    CHECK(results_equivalent(a, b, false));
    b.rows[50000][0] = Value{int64_t{-1}};
    CHECK_FALSE(results_equivalent(a, b, false));
}

TEST_CASE("row order is part of the contract only when both plans sort") {
    SchemaMetadata md = fixture_schema();
    PlanPtr plain = scan(md, "emp");
    PlanPtr sorted = sort({SortKey{col("emp", "empno", ValueType::Integer), true, false}},
                          scan(md, "emp"));
    PlanPtr capped = limit(5, sorted);
    CHECK(order_is_observable(sorted, capped));
    CHECK_FALSE(order_is_observable(sorted, plain));
    CHECK_FALSE(order_is_observable(plain, plain));
}

TEST_CASE("reports serialize to parseable JSON and readable markdown") {
    BugReport r;
    r.id = "deadbeef";
    r.dbms = "embedded";
    r.seed = 7;
    r.threshold = 2.0;
    r.timeout_ms = 1000;
    r.created_unix = 1700000000;
    r.slow_sql = "SELECT 1";
    r.fast_sql = "SELECT 2";
    r.slow_ms = 300.0;
    r.fast_ms = 100.0;
    r.ratio = 3.0;
    r.slow_plan = "SCAN t";
    r.fast_plan = "SEARCH t";
    r.fired_rule_ids = {15, 55};
    r.runs.push_back({300.0, 100.0, true, false, false});

    auto j = nlohmann::json::parse(report_json(r));
    CHECK(j["id"] == "deadbeef");
    CHECK(j["slow"]["sql"] == "SELECT 1");
    CHECK(j["fast"]["mean_ms"] == doctest::Approx(100.0));
    CHECK(j["fired_rule_ids"].size() == 2);
    CHECK(j["runs"].size() == 1);
    CHECK(j["duplicate_of"].is_null());

    std::string md = report_markdown(r);
    CHECK(md.find("SELECT 1") != std::string::npos);
    CHECK(md.find("3.0x") != std::string::npos);
    CHECK(md.find("mutant") != std::string::npos);
}

TEST_CASE("reports land on disk as json plus markdown") {
    testutil::TmpDir dir;
    BugReport r;
    r.id = "cafe01";
    r.slow_sql = "SELECT 1";
    r.fast_sql = "SELECT 2";
    auto jpath = write_report(r, dir.path());
    CHECK(jpath.filename() == "cafe01.json");
    CHECK(std::filesystem::exists(dir.path() / "cafe01.json"));
    CHECK(std::filesystem::exists(dir.path() / "cafe01.md"));

    std::ifstream in(jpath);
    nlohmann::json j;
    in >> j;
    CHECK(j["id"] == "cafe01");
}
