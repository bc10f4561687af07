#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <set>

#include "eqperf/adapter.hpp"
#include "eqperf/generator.hpp"
#include "eqperf/rules.hpp"
#include "eqperf/typecheck.hpp"
#include "support.hpp"

using namespace eqperf;
using namespace eqperf::build;
using testutil::fixture_schema;

namespace {

ExprPtr deptno_e() { return col("emp", "deptno", ValueType::Integer); }
ExprPtr deptno_d() { return col("dept", "deptno", ValueType::Integer); }
ExprPtr sal() { return col("emp", "sal", ValueType::Double); }
ExprPtr job() { return col("emp", "job", ValueType::String); }

PlanPtr emp_dept_join(const SchemaMetadata& md, JoinType t) {
    return join(t, cmp(CmpOp::Eq, deptno_e(), deptno_d()), scan(md, "emp"), scan(md, "dept"));
}

// Applies the rule and requires a fired, equal-to-expected, type-correct result.
void expect_transform(int id, const PlanPtr& in, const PlanPtr& want) {
    SchemaMetadata md = fixture_schema();
    auto out = apply_rule(in, *find_rule(id), md);
    REQUIRE(out.has_value());
    if (!plan_equal(*out, want)) {
        MESSAGE("got:\n" << plan_pretty(*out));
        MESSAGE("want:\n" << plan_pretty(want));
        FAIL_CHECK("transform mismatch for rule " << id);
    }
    CHECK(type_check(LogicalPlan{*out}, md).ok);
}

void expect_no_fire(int id, const PlanPtr& in) {
    SchemaMetadata md = fixture_schema();
    CHECK_FALSE(apply_rule(in, *find_rule(id), md).has_value());
}

}  // namespace

TEST_CASE("the catalog holds distinct, well-formed rules") {
    const auto& rules = rule_catalog();
    CHECK(rules.size() == 17);
    std::set<int> ids;
    for (const auto& r : rules) {
        CHECK(ids.insert(r.id).second);
        CHECK_FALSE(r.name.empty());
        CHECK_FALSE(r.summary.empty());
        CHECK(r.condition != nullptr);
        CHECK(r.transform != nullptr);
        CHECK(find_rule(r.id) == &r);
    }
    CHECK(find_rule(12345) == nullptr);
}

TEST_CASE("grouping pushes through a join onto the left input") {
    SchemaMetadata md = fixture_schema();
    PlanPtr in = aggregate({ColumnRef{"emp", "deptno", ValueType::Integer}}, {},
                           emp_dept_join(md, JoinType::Inner));
    PlanPtr want = aggregate(
        {ColumnRef{"emp", "deptno", ValueType::Integer}}, {},
        join(JoinType::Inner, cmp(CmpOp::Eq, deptno_e(), deptno_d()),
             aggregate({ColumnRef{"emp", "deptno", ValueType::Integer}}, {}, scan(md, "emp")),
             scan(md, "dept")));
    expect_transform(0, in, want);
}

TEST_CASE("a filter on grouping keys moves below the group-by") {
    SchemaMetadata md = fixture_schema();
    ExprPtr pred = cmp(CmpOp::Eq, job(), lit_str("CLERK", 10));
    PlanPtr in = filter(pred, aggregate({ColumnRef{"emp", "job", ValueType::String},
                                         ColumnRef{"emp", "deptno", ValueType::Integer}},
                                        {}, scan(md, "emp")));
    PlanPtr want = aggregate({ColumnRef{"emp", "job", ValueType::String},
                              ColumnRef{"emp", "deptno", ValueType::Integer}},
                             {}, filter(pred, scan(md, "emp")));
    expect_transform(13, in, want);
}

TEST_CASE("filters on aggregate outputs stay above the group-by") {
    SchemaMetadata md = fixture_schema();
    PlanPtr agg_plan = aggregate({ColumnRef{"emp", "job", ValueType::String}},
                                 {{AggCall{AggFn::Sum, sal(), false}, "total"}}, scan(md, "emp"));
    expect_no_fire(13, filter(cmp(CmpOp::Gt, col("", "total", ValueType::Double), lit_dbl(10.0)),
                              agg_plan));
}

TEST_CASE("equality on an extracted year widens to a half-open range") {
    SchemaMetadata md = fixture_schema();
    ExprPtr hd = col("emp", "hiredate", ValueType::Datetime);
    PlanPtr in = filter(cmp(CmpOp::Eq, extract(ExtractField::Year, hd), lit_int(2019)),
                        scan(md, "emp"));
    PlanPtr want = filter(land({cmp(CmpOp::Ge, hd, lit_dt("2019-01-01 00:00:00")),
                                cmp(CmpOp::Lt, hd, lit_dt("2020-01-01 00:00:00"))}),
                          scan(md, "emp"));
    expect_transform(15, in, want);
}

TEST_CASE("a conjunctive filter splits across an inner join") {
    SchemaMetadata md = fixture_schema();
    ExprPtr left = cmp(CmpOp::Gt, sal(), lit_dbl(1000.0));
    ExprPtr right = cmp(CmpOp::Eq, col("dept", "name", ValueType::String), lit_str("ACCT", 14));
    PlanPtr in = filter(land({left, right}), emp_dept_join(md, JoinType::Inner));
    PlanPtr want = join(JoinType::Inner, cmp(CmpOp::Eq, deptno_e(), deptno_d()),
                        filter(left, scan(md, "emp")), filter(right, scan(md, "dept")));
    expect_transform(16, in, want);
}

TEST_CASE("right-side filters do not push through outer joins") {
    SchemaMetadata md = fixture_schema();
    expect_no_fire(16, filter(cmp(CmpOp::Eq, col("dept", "name", ValueType::String),
                                  lit_str("ACCT", 14)),
                              emp_dept_join(md, JoinType::Left)));
}

TEST_CASE("a pinned column in the select list becomes its literal") {
    SchemaMetadata md = fixture_schema();
    ExprPtr pred = cmp(CmpOp::Eq, job(), lit_str("Technical", 10));
    PlanPtr in = project({{job(), "job"}, {deptno_e(), "deptno"}},
                         filter(pred, scan(md, "emp")));
    PlanPtr want = project({{cast({ValueType::String, 10}, lit_str("Technical", 10)), "job"},
                            {deptno_e(), "deptno"}},
                           filter(pred, scan(md, "emp")));
    expect_transform(22, in, want);
}

TEST_CASE("pinned-literal substitution skips sites whose outputs are referenced above") {
    SchemaMetadata md = fixture_schema();
    ExprPtr pred = cmp(CmpOp::Eq, job(), lit_str("Technical", 10));
    PlanPtr in = filter(pred, project({{job(), "job"}, {sal(), "sal"}},
                                      filter(pred, scan(md, "emp"))));
    // The outer filter references emp.job through the projection; replacing
    // the item would strand that reference, so the only site is skipped.
    expect_no_fire(22, in);
}

TEST_CASE("a conjunction splits into stacked filters and merges back") {
    SchemaMetadata md = fixture_schema();
    ExprPtr a = cmp(CmpOp::Gt, sal(), lit_dbl(1000.0));
    ExprPtr b = cmp(CmpOp::Eq, job(), lit_str("CLERK", 10));
    PlanPtr merged = filter(land({a, b}), scan(md, "emp"));
    PlanPtr stacked = filter(a, filter(b, scan(md, "emp")));
    expect_transform(30, merged, stacked);
    expect_transform(31, stacked, merged);
    expect_no_fire(30, filter(a, scan(md, "emp")));
    expect_no_fire(31, filter(a, scan(md, "emp")));
}

TEST_CASE("commuting a join restores the original column order with a projection") {
    SchemaMetadata md = fixture_schema();
    PlanPtr in = emp_dept_join(md, JoinType::Inner);
    Scope before = plan_scope(in);

    auto out = apply_rule(in, *find_rule(40), md);
    REQUIRE(out.has_value());
    const auto* pr = std::get_if<ProjectOp>(&(*out)->op);
    REQUIRE(pr != nullptr);
    const auto* jn = std::get_if<JoinOp>(&(*out)->children[0]->op);
    REQUIRE(jn != nullptr);
    const auto* left = std::get_if<ScanOp>(&(*out)->children[0]->children[0]->op);
    REQUIRE(left != nullptr);
    CHECK(left->table == "dept");

    Scope after = plan_scope(*out);
    REQUIRE(after.cols.size() == before.cols.size());
    for (size_t i = 0; i < before.cols.size(); ++i) {
        CHECK(after.cols[i].src_alias == before.cols[i].src_alias);
        CHECK(after.cols[i].src_column == before.cols[i].src_column);
    }
    CHECK(type_check(LogicalPlan{*out}, md).ok);
}

TEST_CASE("left joins do not commute") {
    SchemaMetadata md = fixture_schema();
    expect_no_fire(40, emp_dept_join(md, JoinType::Left));
}

TEST_CASE("a filter hoists above a projection that passes its columns through") {
    SchemaMetadata md = fixture_schema();
    ExprPtr pred = cmp(CmpOp::Gt, sal(), lit_dbl(1000.0));
    PlanPtr in = project({{sal(), "pay"}, {job(), "job"}}, filter(pred, scan(md, "emp")));
    PlanPtr want = filter(pred, project({{sal(), "pay"}, {job(), "job"}}, scan(md, "emp")));
    expect_transform(41, in, want);
}

TEST_CASE("a sort over provably empty input disappears") {
    SchemaMetadata md = fixture_schema();
    PlanPtr empty = filter(lit_bool(false), scan(md, "emp"));
    PlanPtr in = sort({SortKey{sal(), true, false}}, empty);
    expect_transform(51, in, empty);
    expect_no_fire(51, sort({SortKey{sal(), true, false}}, scan(md, "emp")));
}

TEST_CASE("literal-only subexpressions fold away") {
    SchemaMetadata md = fixture_schema();
    ExprPtr keep = cmp(CmpOp::Gt, sal(), lit_dbl(2500.0));
    PlanPtr in = filter(land({cmp(CmpOp::Lt, arith(ArithOp::Add, lit_int(1), lit_int(1)),
                                  lit_int(3)),
                              keep}),
                        scan(md, "emp"));
    expect_transform(54, in, filter(keep, scan(md, "emp")));
}

TEST_CASE("a pinned column propagates into sibling conjuncts") {
    SchemaMetadata md = fixture_schema();
    PlanPtr in = filter(land({cmp(CmpOp::Eq, deptno_e(), lit_int(7)),
                              cmp(CmpOp::Lt, col("emp", "empno", ValueType::Integer),
                                  deptno_e())}),
                        scan(md, "emp"));
    PlanPtr want = filter(land({cmp(CmpOp::Eq, deptno_e(), lit_int(7)),
                                cmp(CmpOp::Lt, col("emp", "empno", ValueType::Integer),
                                    lit_int(7))}),
                          scan(md, "emp"));
    expect_transform(55, in, want);
}

TEST_CASE("the pinning conjunct itself is never rewritten") {
    SchemaMetadata md = fixture_schema();
    // With only the pin present there is nothing to substitute into.
    expect_no_fire(55, filter(cmp(CmpOp::Eq, deptno_e(), lit_int(7)), scan(md, "emp")));
}

TEST_CASE("a limit above a left join is copied onto the left input") {
    SchemaMetadata md = fixture_schema();
    PlanPtr in = limit(20, emp_dept_join(md, JoinType::Left));
    PlanPtr want = limit(20, join(JoinType::Left, cmp(CmpOp::Eq, deptno_e(), deptno_d()),
                                  limit(20, scan(md, "emp")), scan(md, "dept")));
    expect_transform(59, in, want);
    expect_no_fire(59, limit(20, emp_dept_join(md, JoinType::Inner)));
}

TEST_CASE("limit zero becomes a FALSE filter") {
    SchemaMetadata md = fixture_schema();
    expect_transform(60, limit(0, scan(md, "emp")),
                     filter(lit_bool(false), scan(md, "emp")));
    expect_no_fire(60, limit(1, scan(md, "emp")));
}

TEST_CASE("distinct over unique output is dropped") {
    SchemaMetadata md = fixture_schema();
    PlanPtr unique_proj =
        project({{col("emp", "empno", ValueType::Integer), "empno"}}, scan(md, "emp"));
    expect_transform(61, distinct(unique_proj), unique_proj);

    PlanPtr dup_proj = project({{deptno_e(), "deptno"}}, scan(md, "emp"));
    expect_no_fire(61, distinct(dup_proj));
}

TEST_CASE("grouping by a unique key without aggregates reduces to a projection") {
    SchemaMetadata md = fixture_schema();
    PlanPtr base = filter(cmp(CmpOp::Gt, col("emp", "emp_pk", ValueType::Integer), lit_int(100)),
                          scan(md, "emp"));
    PlanPtr in = aggregate({ColumnRef{"emp", "emp_pk", ValueType::Integer}}, {}, base);
    PlanPtr want = project({{col("emp", "emp_pk", ValueType::Integer), "emp_pk"}}, base);
    expect_transform(61, in, want);
}

TEST_CASE("a provably empty union-all arm is pruned") {
    SchemaMetadata md = fixture_schema();
    PlanPtr live = project({{deptno_e(), "deptno"}}, scan(md, "emp"));
    PlanPtr dead = project({{deptno_d(), "deptno"}},
                           filter(lit_bool(false), scan(md, "dept")));
    expect_transform(62, set_union(true, live, dead), live);
    expect_transform(62, set_union(true, dead, live), live);
    expect_no_fire(62, set_union(true, live, project({{deptno_d(), "deptno"}},
                                                     scan(md, "dept"))));
}

TEST_CASE("IS TRUE drops only when the operand cannot be NULL") {
    SchemaMetadata md = fixture_schema();
    ExprPtr solid = cmp(CmpOp::Gt, col("emp", "empno", ValueType::Integer), lit_int(5));
    expect_transform(63, filter(is_test(IsOp::IsTrue, solid), scan(md, "emp")),
                     filter(solid, scan(md, "emp")));
    // sal is nullable: x > 5 can be NULL, and IS TRUE maps that to FALSE.
    expect_no_fire(63, filter(is_test(IsOp::IsTrue, cmp(CmpOp::Gt, sal(), lit_dbl(5.0))),
                              scan(md, "emp")));
}

TEST_CASE("emptiness and nullability analyses are conservative") {
    SchemaMetadata md = fixture_schema();
    CHECK(provably_empty(filter(lit_bool(false), scan(md, "emp"))));
    CHECK(provably_empty(limit(0, scan(md, "emp"))));
    CHECK(provably_empty(project({{deptno_e(), "deptno"}},
                                 filter(lit_bool(false), scan(md, "emp")))));
    CHECK_FALSE(provably_empty(scan(md, "emp")));
    CHECK_FALSE(provably_empty(filter(lit_bool(true), scan(md, "emp"))));

    Scope s = plan_scope(scan(md, "emp"));
    CHECK(provably_non_null(cmp(CmpOp::Gt, col("emp", "empno", ValueType::Integer), lit_int(5)),
                            s));
    CHECK(provably_non_null(lit_int(3), s));
    CHECK_FALSE(provably_non_null(cmp(CmpOp::Gt, sal(), lit_dbl(5.0)), s));
    CHECK_FALSE(provably_non_null(lit_null(ValueType::Integer), s));
}

TEST_CASE("conjunct splitting and joining round-trip") {
    ExprPtr a = cmp(CmpOp::Gt, sal(), lit_dbl(1.0));
    ExprPtr b = cmp(CmpOp::Gt, sal(), lit_dbl(2.0));
    ExprPtr c = cmp(CmpOp::Gt, sal(), lit_dbl(3.0));

    auto parts = conjuncts(land({a, b, c}));
    REQUIRE(parts.size() == 3);
    CHECK(expr_equal(conjoin(parts), land({a, b, c})));

    auto single = conjuncts(a);
    REQUIRE(single.size() == 1);
    CHECK(conjoin(single) == a);

    // OR is not a conjunction.
    CHECK(conjuncts(lor({a, b})).size() == 1);
}

TEST_CASE("chained year-range and pin substitution compose in either order") {
    SchemaMetadata md = testutil::two_datetime_tables();
    ExprPtr c1 = col("t1", "c1", ValueType::Datetime);
    ExprPtr c2 = col("t2", "c2", ValueType::Datetime);

    auto make = [&] {
        PlanPtr lower = filter(cmp(CmpOp::Eq, extract(ExtractField::Year, c1), lit_int(2021)),
                               scan(md, "t1"));
        PlanPtr j = join(JoinType::Cross, nullptr, lower, scan(md, "t2"));
        return filter(cmp(CmpOp::Gt, extract(ExtractField::Year, c1),
                          extract(ExtractField::Year, c2)),
                      j);
    };

    // Range rewrite first: only the lower filter's equality qualifies.
    PlanPtr a = make();
    auto a1 = apply_rule(a, *find_rule(15), md);
    REQUIRE(a1.has_value());
    CHECK_FALSE(apply_rule(*a1, *find_rule(55), md).has_value());

    // Pin substitution first: the top filter inherits the year, after which
    // the range rewrite still fires below.
    PlanPtr b = make();
    auto b1 = apply_rule(b, *find_rule(55), md);
    REQUIRE(b1.has_value());
    auto b2 = apply_rule(*b1, *find_rule(15), md);
    REQUIRE(b2.has_value());

    CHECK_FALSE(plan_equal(*a1, *b2));
    CHECK(type_check(LogicalPlan{*a1}, md).ok);
    CHECK(type_check(LogicalPlan{*b2}, md).ok);
}

TEST_CASE("every rule stays sound across generated plans") {
    auto db = testutil::loaded_db(0.01);
    SchemaMetadata md = db->retrieve_metadata();
    SampleSet samples = db->sample_values(md, 20, 3);
    ProbabilityTable prob = init_probability_table();
    Rng rng(31);
    const auto& rules = rule_catalog();
    int fired = 0;
    for (int i = 0; i < 120; ++i) {
        LogicalPlan plan = build_specification(md, samples, prob, rng);
        for (const auto& r : rules) {
            std::optional<PlanPtr> out;
            CHECK_NOTHROW(out = apply_rule(plan.root, r, md));
            if (!out) continue;
            ++fired;
            CHECK(type_check(LogicalPlan{*out}, md).ok);
        }
    }
    CHECK(fired > 50);
}
