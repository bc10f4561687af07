#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "eqperf/adapter.hpp"
#include "eqperf/catalog.hpp"
#include "eqperf/render.hpp"
#include "eqperf/rules.hpp"
#include "eqperf/common.hpp"
#include "support.hpp"

using namespace eqperf;
using namespace eqperf::build;
using testutil::fixture_schema;

namespace {

PlanPtr listing_query(const SchemaMetadata& md) {
    PlanPtr p = scan(md, "emp");
    p = filter(cmp(CmpOp::Eq, col("emp", "job", ValueType::String),
                   lit_str("Technical", 10)),
               p);
    p = aggregate({ColumnRef{"emp", "job", ValueType::String},
                   ColumnRef{"emp", "deptno", ValueType::Integer}},
                  {}, p);
    return limit(13, p);
}

}  // namespace

TEST_CASE("grouped query with filter and limit renders identically in both dialects") {
    SchemaMetadata md = fixture_schema();
    PlanPtr p = listing_query(md);
    const std::string want =
        "SELECT job, deptno FROM emp WHERE job = 'Technical' GROUP BY job, deptno LIMIT 13";
    CHECK(render_sql(p, Dialect::embedded()) == want);
    CHECK(render_sql(p, Dialect::postgres()) == want);
}

TEST_CASE("constant substitution into the select list keeps the grouped shape") {
    SchemaMetadata md = fixture_schema();
    PlanPtr p = listing_query(md);
    auto m = apply_rule(p, *find_rule(22), md);
    REQUIRE(m.has_value());
    CHECK(render_sql(*m, Dialect::postgres()) ==
          "SELECT CAST('Technical' AS VARCHAR(10)) AS job, deptno FROM emp "
          "WHERE job = 'Technical' GROUP BY job, deptno LIMIT 13");
    CHECK(render_sql(*m, Dialect::embedded()) ==
          "SELECT CAST('Technical' AS TEXT) AS job, deptno FROM emp "
          "WHERE job = 'Technical' GROUP BY job, deptno LIMIT 13");
}

TEST_CASE("dialects differ on NULL literals and distinctness tests") {
    SchemaMetadata md = fixture_schema();
    PlanPtr p = filter(cmp(CmpOp::IsDistinct, col("emp", "sal", ValueType::Double),
                           lit_null(ValueType::Double)),
                       scan(md, "emp"));
    CHECK(render_sql(p, Dialect::embedded()) == "SELECT * FROM emp WHERE sal IS NOT NULL");
    CHECK(render_sql(p, Dialect::postgres()) ==
          "SELECT * FROM emp WHERE sal IS DISTINCT FROM CAST(NULL AS DOUBLE PRECISION)");
}

TEST_CASE("dialects differ on field extraction") {
    SchemaMetadata md = fixture_schema();
    PlanPtr p = filter(cmp(CmpOp::Gt,
                           extract(ExtractField::Year,
                                   col("emp", "hiredate", ValueType::Datetime)),
                           lit_int(2000)),
                       scan(md, "emp"));
    CHECK(render_sql(p, Dialect::embedded()) ==
          "SELECT * FROM emp WHERE CAST(strftime('%Y', hiredate) AS INTEGER) > 2000");
    CHECK(render_sql(p, Dialect::postgres()) ==
          "SELECT * FROM emp WHERE EXTRACT(YEAR FROM hiredate) > 2000");
}

TEST_CASE("dialects differ on datetime literals") {
    SchemaMetadata md = fixture_schema();
    PlanPtr p = filter(cmp(CmpOp::Ge, col("emp", "hiredate", ValueType::Datetime),
                           lit_dt("2021-06-01 12:00:00")),
                       scan(md, "emp"));
    CHECK(render_sql(p, Dialect::embedded()) ==
          "SELECT * FROM emp WHERE hiredate >= '2021-06-01 12:00:00'");
    CHECK(render_sql(p, Dialect::postgres()) ==
          "SELECT * FROM emp WHERE hiredate >= TIMESTAMP '2021-06-01 12:00:00'");
}

TEST_CASE("dialects differ on cast target names") {
    SchemaMetadata md = fixture_schema();
    PlanPtr p = project({{cast({ValueType::String, 10}, col("emp", "empno", ValueType::Integer)),
                          "s"}},
                        scan(md, "emp"));
    CHECK(render_sql(p, Dialect::embedded()) == "SELECT CAST(empno AS TEXT) AS s FROM emp");
    CHECK(render_sql(p, Dialect::postgres()) ==
          "SELECT CAST(empno AS VARCHAR(10)) AS s FROM emp");
}

TEST_CASE("string literals double embedded quotes") {
    SchemaMetadata md = fixture_schema();
    PlanPtr p = filter(cmp(CmpOp::Eq, col("emp", "ename", ValueType::String),
                           lit_str("O'Brien", 10)),
                       scan(md, "emp"));
    CHECK(render_sql(p, Dialect::embedded()) ==
          "SELECT * FROM emp WHERE ename = 'O''Brien'");
}

TEST_CASE("connectives, IS tests, LIKE, and NOT render with stable parentheses") {
    SchemaMetadata md = fixture_schema();
    PlanPtr p = filter(conn(BoolConn::And,
                            {is_test(IsOp::IsNotNull, col("emp", "ename", ValueType::String)),
                             cmp(CmpOp::Like, col("emp", "job", ValueType::String),
                                 lit_str("Tech%", 10)),
                             negate(cmp(CmpOp::Lt, col("emp", "sal", ValueType::Double),
                                        lit_dbl(1.0)))}),
                       scan(md, "emp"));
    const std::string want =
        "SELECT * FROM emp WHERE (ename IS NOT NULL AND job LIKE 'Tech%' AND NOT (sal < 1.0))";
    CHECK(render_sql(p, Dialect::embedded()) == want);
    CHECK(render_sql(p, Dialect::postgres()) == want);
}

TEST_CASE("a union is a compound select with trailing sort and limit") {
    SchemaMetadata md = fixture_schema();
    PlanPtr a = project({{col("emp", "deptno", ValueType::Integer), "deptno"}}, scan(md, "emp"));
    PlanPtr b = project({{col("dept", "deptno", ValueType::Integer), "deptno"}},
                        scan(md, "dept"));
    PlanPtr u = limit(5, sort({SortKey{col("", "deptno", ValueType::Integer), true, false}},
                              set_union(false, a, b)));
    CHECK(render_sql(u, Dialect::embedded()) ==
          "SELECT deptno FROM emp UNION SELECT deptno FROM dept ORDER BY deptno LIMIT 5");
}

TEST_CASE("a union arm with its own limit hides inside a derived table") {
    SchemaMetadata md = fixture_schema();
    PlanPtr arm =
        limit(3, project({{col("emp", "deptno", ValueType::Integer), "deptno"}}, scan(md, "emp")));
    PlanPtr b = project({{col("dept", "deptno", ValueType::Integer), "deptno"}},
                        scan(md, "dept"));
    CHECK(render_sql(set_union(true, arm, b), Dialect::embedded()) ==
          "SELECT * FROM (SELECT deptno FROM emp LIMIT 3) AS sq0 UNION ALL "
          "SELECT deptno FROM dept");
}

TEST_CASE("sort keys render qualified so select aliases cannot capture them") {
    SchemaMetadata md = fixture_schema();
    // The select list aliases sal as "deptno"; a bare deptno in ORDER BY
    // would bind to that alias instead of the input column.
    PlanPtr p = project({{col("emp", "sal", ValueType::Double), "deptno"},
                         {col("emp", "deptno", ValueType::Integer), "d2"}},
                        scan(md, "emp"));
    p = sort({SortKey{col("emp", "deptno", ValueType::Integer), true, false}}, p);
    CHECK(render_sql(p, Dialect::embedded()) ==
          "SELECT sal AS deptno, deptno AS d2 FROM emp ORDER BY emp.deptno");
}

TEST_CASE("sort keys naming an output alias stay bare") {
    SchemaMetadata md = fixture_schema();
    PlanPtr p = project({{arith(ArithOp::Add, col("emp", "sal", ValueType::Double), lit_dbl(1.0)),
                          "pay"}},
                        scan(md, "emp"));
    p = sort({SortKey{col("", "pay", ValueType::Double), true, false}}, p);
    CHECK(render_sql(p, Dialect::embedded()) ==
          "SELECT sal + 1.0 AS pay FROM emp ORDER BY pay");
}

TEST_CASE("derived tables with clashing star names get positional aliases") {
    SchemaMetadata md = fixture_schema();
    PlanPtr j = join(JoinType::Cross, nullptr, scan(md, "emp"), scan(md, "emp", "e2"));
    PlanPtr p = filter(cmp(CmpOp::Gt, col("e2", "sal", ValueType::Double), lit_dbl(0.0)),
                       limit(10, j));
    std::string sql = render_sql(p, Dialect::embedded());
    CHECK(sql.find("emp.empno AS c1") != std::string::npos);
    CHECK(sql.find("e2.deptno AS c14") != std::string::npos);
    CHECK(sql.find("WHERE c13 > 0.0") != std::string::npos);

    // The renamed derived table must be valid SQL.
    auto db = open_embedded(":memory:");
    load_fixture(*db, build_fixture(0.0, 1));
    CHECK_NOTHROW(db->execute(sql, 5000));
}

TEST_CASE("derived tables that cannot be renamed are reported as unsupported") {
    SchemaMetadata md = fixture_schema();
    PlanPtr j = join(JoinType::Cross, nullptr, scan(md, "emp"), scan(md, "emp", "e2"));
    PlanPtr u = set_union(true, limit(3, j), join(JoinType::Cross, nullptr, scan(md, "emp"),
                                                  scan(md, "emp", "e3")));
    try {
        render_sql(u, Dialect::embedded());
        FAIL("expected an unsupported-construct error");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::UnsupportedConstruct);
    }
}

TEST_CASE("rendering is deterministic") {
    SchemaMetadata md = fixture_schema();
    PlanPtr p = listing_query(md);
    CHECK(render_sql(p, Dialect::embedded()) == render_sql(p, Dialect::embedded()));
    CHECK(render_sql(p, Dialect::postgres()) == render_sql(p, Dialect::postgres()));
}
