#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <functional>

#include "eqperf/adapter.hpp"
#include "eqperf/generator.hpp"
#include "eqperf/mutator.hpp"
#include "eqperf/render.hpp"
#include "eqperf/typecheck.hpp"
#include "eqperf/validator.hpp"
#include "support.hpp"

using namespace eqperf;
using namespace eqperf::build;
using testutil::fixture_schema;

namespace {

std::vector<const MutationRule*> order_of(std::initializer_list<int> ids) {
    std::vector<const MutationRule*> out;
    for (int id : ids) {
        const MutationRule* r = find_rule(id);
        REQUIRE(r != nullptr);
        out.push_back(r);
    }
    return out;
}

PlanPtr year_chain_plan(const SchemaMetadata& md) {
    ExprPtr c1 = col("t1", "c1", ValueType::Datetime);
    ExprPtr c2 = col("t2", "c2", ValueType::Datetime);
    PlanPtr lower = filter(cmp(CmpOp::Eq, extract(ExtractField::Year, c1), lit_int(2021)),
                           scan(md, "t1"));
    PlanPtr j = join(JoinType::Cross, nullptr, lower, scan(md, "t2"));
    return filter(cmp(CmpOp::Gt, extract(ExtractField::Year, c1),
                      extract(ExtractField::Year, c2)),
                  j);
}

}  // namespace

TEST_CASE("rule order decides which rewrites land in one pass") {
    SchemaMetadata md = testutil::two_datetime_tables();
    PlanPtr origin = year_chain_plan(md);

    Mutant a = mutate_tree(origin, order_of({15, 55}), md);
    CHECK(a.fired_rule_ids == std::vector<int>{15});

    Mutant b = mutate_tree(origin, order_of({55, 15}), md);
    CHECK(b.fired_rule_ids == std::vector<int>{55, 15});

    CHECK_FALSE(plan_equal(a.plan, b.plan));
    CHECK_FALSE(plan_equal(a.plan, origin));
    CHECK_FALSE(plan_equal(b.plan, origin));
    CHECK(type_check(LogicalPlan{a.plan}, md).ok);
    CHECK(type_check(LogicalPlan{b.plan}, md).ok);
}

TEST_CASE("each firing rule feeds the next") {
    SchemaMetadata md = fixture_schema();
    ExprPtr a = cmp(CmpOp::Gt, col("emp", "sal", ValueType::Double), lit_dbl(1000.0));
    ExprPtr b = cmp(CmpOp::Eq, col("emp", "job", ValueType::String), lit_str("CLERK", 10));
    PlanPtr origin = filter(land({a, b}), scan(md, "emp"));

    // Split stacks the filters; the merge then folds them back together.
    Mutant m = mutate_tree(origin, order_of({30, 31}), md);
    CHECK(m.fired_rule_ids == std::vector<int>{30, 31});
    CHECK(plan_equal(m.plan, origin));
}

TEST_CASE("a pass that fires nothing returns the origin") {
    SchemaMetadata md = fixture_schema();
    PlanPtr origin = scan(md, "emp");
    Mutant m = mutate_tree(origin, order_of({30, 51, 60}), md);
    CHECK(m.fired_rule_ids.empty());
    CHECK(plan_equal(m.plan, origin));
}

TEST_CASE("mutants are distinct from the origin and from each other") {
    SchemaMetadata md = fixture_schema();
    ExprPtr a = cmp(CmpOp::Gt, col("emp", "sal", ValueType::Double), lit_dbl(1000.0));
    ExprPtr b = cmp(CmpOp::Eq, col("emp", "deptno", ValueType::Integer), lit_int(20));
    PlanPtr origin = limit(15, filter(land({a, b}), scan(md, "emp")));

    Rng rng(7);
    auto mutants = mutate_query(origin, md, rng);
    CHECK_FALSE(mutants.empty());
    for (size_t i = 0; i < mutants.size(); ++i) {
        CHECK_FALSE(plan_equal(mutants[i].plan, origin));
        CHECK_FALSE(mutants[i].fired_rule_ids.empty());
        CHECK(type_check(LogicalPlan{mutants[i].plan}, md).ok);
        for (size_t j = i + 1; j < mutants.size(); ++j)
            CHECK_FALSE(plan_equal(mutants[i].plan, mutants[j].plan));
    }
}

TEST_CASE("fired rule ids come from the catalog and match the mutation") {
    SchemaMetadata md = fixture_schema();
    PlanPtr origin = limit(0, scan(md, "emp"));
    Rng rng(3);
    auto mutants = mutate_query(origin, md, rng);
    REQUIRE_FALSE(mutants.empty());
    for (const auto& m : mutants)
        for (int id : m.fired_rule_ids) CHECK(find_rule(id) != nullptr);
}

TEST_CASE("mutation is reproducible for a fixed seed") {
    SchemaMetadata md = fixture_schema();
    ExprPtr a = cmp(CmpOp::Gt, col("emp", "sal", ValueType::Double), lit_dbl(1000.0));
    ExprPtr b = cmp(CmpOp::Eq, col("emp", "deptno", ValueType::Integer), lit_int(20));
    PlanPtr origin = limit(15, filter(land({a, b}), scan(md, "emp")));

    Rng r1(99), r2(99);
    auto m1 = mutate_query(origin, md, r1);
    auto m2 = mutate_query(origin, md, r2);
    REQUIRE(m1.size() == m2.size());
    for (size_t i = 0; i < m1.size(); ++i) {
        CHECK(plan_equal(m1[i].plan, m2[i].plan));
        CHECK(m1[i].fired_rule_ids == m2[i].fired_rule_ids);
    }
}

TEST_CASE("ternary partition unions the three predicate branches") {
    SchemaMetadata md = fixture_schema();
    ExprPtr pred = cmp(CmpOp::Gt, col("emp", "sal", ValueType::Double), lit_dbl(1500.0));
    PlanPtr origin = project({{col("emp", "empno", ValueType::Integer), "empno"}},
                             filter(pred, scan(md, "emp")));

    Mutant m = ternary_partition(origin, md);
    CHECK(m.fired_rule_ids == std::vector<int>{kTernaryPartitionRuleId});
    CHECK(type_check(LogicalPlan{m.plan}, md).ok);

    // Two stacked unions with three filter branches underneath.
    int unions = 0, filters = 0;
    std::function<void(const PlanPtr&)> walk = [&](const PlanPtr& p) {
        if (std::holds_alternative<UnionOp>(p->op)) ++unions;
        if (std::holds_alternative<FilterOp>(p->op)) ++filters;
        for (const auto& c : p->children) walk(c);
    };
    walk(m.plan);
    CHECK(unions == 2);
    CHECK(filters == 3);
}

TEST_CASE("ternary branches together cover exactly the filter input") {
    auto db = testutil::loaded_db(0.01);
    SchemaMetadata md = db->retrieve_metadata();

    // sal is nullable, so all three branches carry rows. The three branch
    // predicates tile the ternary truth table, so the UNION ALL of the
    // branches reproduces the filter's input, not the filtered output.
    ExprPtr pred = cmp(CmpOp::Gt, col("emp", "sal", ValueType::Double), lit_dbl(2000.0));
    std::vector<ProjItem> cols = {{col("emp", "empno", ValueType::Integer), "empno"},
                                  {col("emp", "sal", ValueType::Double), "sal"}};
    PlanPtr origin = project(cols, filter(pred, scan(md, "emp")));
    Mutant m = ternary_partition(origin, md);

    PlanPtr unfiltered = project(cols, scan(md, "emp"));
    auto all_rows = db->execute(render_sql(unfiltered, Dialect::embedded()), 10000);
    auto matched = db->execute(render_sql(origin, Dialect::embedded()), 10000);
    auto part = db->execute(render_sql(m.plan, Dialect::embedded()), 10000);
    REQUIRE_FALSE(all_rows.timed_out);
    REQUIRE_FALSE(part.timed_out);
    CHECK(matched.rows.size() < part.rows.size());
    CHECK(all_rows.rows.size() == part.rows.size());
    std::string why;
    CHECK(results_equivalent(all_rows, part, false, 1e-9, &why));
    if (!why.empty()) MESSAGE(why);
}

TEST_CASE("ternary partition keeps deduplication semantics") {
    auto db = testutil::loaded_db(0.01);
    SchemaMetadata md = db->retrieve_metadata();
    ExprPtr pred = cmp(CmpOp::Gt, col("emp", "sal", ValueType::Double), lit_dbl(2000.0));
    PlanPtr origin = distinct(project({{col("emp", "deptno", ValueType::Integer), "deptno"}},
                                      filter(pred, scan(md, "emp"))));
    Mutant m = ternary_partition(origin, md);
    CHECK(type_check(LogicalPlan{m.plan}, md).ok);

    auto base = db->execute(render_sql(origin, Dialect::embedded()), 10000);
    auto part = db->execute(render_sql(m.plan, Dialect::embedded()), 10000);
    std::string why;
    CHECK(results_equivalent(base, part, false, 1e-9, &why));
    if (!why.empty()) MESSAGE(why);
}

TEST_CASE("plans whose shape does not distribute over the partition are rejected") {
    SchemaMetadata md = fixture_schema();
    ExprPtr pred = cmp(CmpOp::Gt, col("emp", "sal", ValueType::Double), lit_dbl(1.0));

    auto expect_reject = [&](const PlanPtr& p) {
        try {
            ternary_partition(p, md);
            FAIL_CHECK("expected a not-partitionable error");
        } catch (const Error& e) {
            CHECK(e.kind() == ErrorKind::NotPartitionable);
        }
    };

    expect_reject(limit(5, filter(pred, scan(md, "emp"))));
    expect_reject(sort({SortKey{col("emp", "empno", ValueType::Integer), true, false}},
                       filter(pred, scan(md, "emp"))));
    expect_reject(aggregate({ColumnRef{"emp", "deptno", ValueType::Integer}}, {},
                            filter(pred, scan(md, "emp"))));
    expect_reject(scan(md, "emp"));  // no filter at all
}
