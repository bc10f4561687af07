#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "eqperf/schema.hpp"

namespace eqperf {

// Logical query trees. Nodes are immutable and shared: mutation rules build
// new trees that reuse untouched subtrees, so copies are cheap and equality
// can rely on structure alone.

struct Expr;
using ExprPtr = std::shared_ptr<const Expr>;

struct TypeSpec {
    ValueType type = ValueType::Integer;
    std::optional<int> varchar_len;  // only meaningful for String

    bool operator==(const TypeSpec&) const = default;
};

enum class CmpOp { Eq, Ne, Lt, Le, Gt, Ge, Like, NotLike, IsDistinct, IsNotDistinct };
enum class IsOp { IsTrue, IsFalse, IsNull, IsNotNull };
enum class BoolConn { And, Or };
enum class ArithOp { Add, Sub, Mul, Div };
enum class AggFn { Avg, Sum, Min, Max, Count };
enum class ExtractField { Year, Month, Day };

// Column reference by source binding: `table` is the scan alias that
// introduced the column ("" means resolve by output name in the enclosing
// scope, e.g. references to aggregate outputs).
struct ColumnRef {
    std::string table;
    std::string column;
    ValueType type = ValueType::Integer;
};

struct Literal {
    TypeSpec spec;
    bool is_null = false;
    int64_t int_v = 0;
    double dbl_v = 0.0;
    bool bool_v = false;
    std::string str_v;  // also holds datetime text "YYYY-MM-DD HH:MM:SS"
};

struct Comparison {
    CmpOp op;
    ExprPtr lhs, rhs;
};

struct IsTest {
    IsOp op;
    ExprPtr operand;
};

struct BoolExpr {
    BoolConn conn;
    std::vector<ExprPtr> operands;  // two or more
};

struct NotExpr {
    ExprPtr operand;
};

struct ArithExpr {
    ArithOp op;
    ExprPtr lhs, rhs;
};

struct ExtractExpr {
    ExtractField field;
    ExprPtr arg;
};

struct CastExpr {
    TypeSpec to;
    ExprPtr arg;
};

struct AggCall {
    AggFn fn;
    ExprPtr arg;       // null for COUNT(*)
    bool star = false; // COUNT(*)
};

struct Expr {
    std::variant<ColumnRef, Literal, Comparison, IsTest, BoolExpr, NotExpr, ArithExpr, ExtractExpr,
                 CastExpr, AggCall>
        node;
};

// -------------------------------------------------------------------------
// Plan nodes

struct PlanNode;
using PlanPtr = std::shared_ptr<const PlanNode>;

enum class JoinType { Inner, Left, Cross };

struct ScanOp {
    std::string table;
    std::string alias;  // unique within the tree; equals table name when unambiguous
    std::vector<ColumnInfo> columns;
};

struct FilterOp {
    ExprPtr predicate;
};

struct ProjItem {
    ExprPtr expr;
    std::string alias;  // output column name
};

struct ProjectOp {
    std::vector<ProjItem> items;
};

struct JoinOp {
    JoinType type = JoinType::Inner;
    ExprPtr condition;  // null for CROSS
};

struct AggItem {
    AggCall call;
    std::string alias;
};

struct AggregateOp {
    std::vector<ColumnRef> keys;  // group-by columns
    std::vector<AggItem> aggs;
};

struct DistinctOp {};

struct SortKey {
    ExprPtr expr;
    bool asc = true;
    // Keys appended only to make row order total; they are not part of the
    // query's observable intent and are excluded from entity extraction.
    bool tie_breaker = false;
};

struct SortOp {
    std::vector<SortKey> keys;
};

struct LimitOp {
    int64_t count = 0;
};

struct UnionOp {
    bool all = false;
};

struct PlanNode {
    std::variant<ScanOp, FilterOp, ProjectOp, JoinOp, AggregateOp, DistinctOp, SortOp, LimitOp,
                 UnionOp>
        op;
    std::vector<PlanPtr> children;  // Scan: 0, Join/Union: 2, otherwise 1
};

struct LogicalPlan {
    PlanPtr root;
};

// -------------------------------------------------------------------------
// Builders

namespace build {

ExprPtr col(const std::string& table, const std::string& column, ValueType type);
ExprPtr lit_int(int64_t v);
ExprPtr lit_dbl(double v);
ExprPtr lit_str(const std::string& v, std::optional<int> varchar_len = std::nullopt);
ExprPtr lit_dt(const std::string& canonical);
ExprPtr lit_bool(bool v);
ExprPtr lit_null(ValueType type);
ExprPtr cmp(CmpOp op, ExprPtr lhs, ExprPtr rhs);
ExprPtr is_test(IsOp op, ExprPtr operand);
ExprPtr conn(BoolConn c, std::vector<ExprPtr> operands);  // flattens nested same-connective
ExprPtr negate(ExprPtr operand);
ExprPtr arith(ArithOp op, ExprPtr lhs, ExprPtr rhs);
ExprPtr extract(ExtractField field, ExprPtr arg);
ExprPtr cast(TypeSpec to, ExprPtr arg);
ExprPtr agg(AggFn fn, ExprPtr arg);
ExprPtr count_star();

inline ExprPtr land(std::vector<ExprPtr> ops) { return conn(BoolConn::And, std::move(ops)); }
inline ExprPtr lor(std::vector<ExprPtr> ops) { return conn(BoolConn::Or, std::move(ops)); }

PlanPtr scan(const SchemaMetadata& schema, const std::string& table, const std::string& alias = "");
PlanPtr filter(ExprPtr predicate, PlanPtr child);
PlanPtr project(std::vector<ProjItem> items, PlanPtr child);
PlanPtr join(JoinType type, ExprPtr condition, PlanPtr left, PlanPtr right);
PlanPtr aggregate(std::vector<ColumnRef> keys, std::vector<AggItem> aggs, PlanPtr child);
PlanPtr distinct(PlanPtr child);
PlanPtr sort(std::vector<SortKey> keys, PlanPtr child);
PlanPtr limit(int64_t count, PlanPtr child);
PlanPtr set_union(bool all, PlanPtr left, PlanPtr right);

}  // namespace build

// -------------------------------------------------------------------------
// Inspection

ValueType expr_type(const ExprPtr& e);
bool expr_has_agg(const ExprPtr& e);

// Deterministic canonical serialization; equal strings iff exprs equal.
std::string expr_key(const ExprPtr& e);
bool expr_equal(const ExprPtr& a, const ExprPtr& b);

// Structural equality modulo AND/OR operand order.
bool plan_equal(const PlanPtr& a, const PlanPtr& b);
inline bool plan_equal(const LogicalPlan& a, const LogicalPlan& b) {
    return plan_equal(a.root, b.root);
}

// Multi-line indented dump for debugging and golden tests.
std::string plan_pretty(const PlanPtr& p);
inline std::string plan_pretty(const LogicalPlan& p) { return plan_pretty(p.root); }

// Shape signature: node kinds, table names and expression structure with
// literals wiped. Two plans that differ only in literal values collide.
uint64_t plan_skeleton_hash(const PlanPtr& p);

// Exact content hash over the canonical serialization.
uint64_t plan_content_hash(const PlanPtr& p);

// Output columns a node exposes to its parent.
struct ScopeColumn {
    std::string name;        // output name
    ValueType type = ValueType::Integer;
    std::string src_alias;   // scan alias of origin, "" when computed
    std::string src_column;  // column name at origin, "" when computed
    bool from_aggregate = false;
    bool nullable = true;
    bool unique = false;     // holds distinct values over the node's output
};

struct Scope {
    std::vector<ScopeColumn> cols;

    const ScopeColumn* resolve(const ColumnRef& ref) const;
    int resolve_index(const ColumnRef& ref) const;
};

Scope plan_scope(const PlanPtr& p);

// Collect every scan alias in the tree.
std::vector<std::string> plan_aliases(const PlanPtr& p);

// Walks all expressions attached to a node (not its children).
template <typename F>
void for_each_node_expr(const PlanNode& n, F&& f) {
    if (auto* fi = std::get_if<FilterOp>(&n.op)) {
        f(fi->predicate);
    } else if (auto* pr = std::get_if<ProjectOp>(&n.op)) {
        for (const auto& it : pr->items) f(it.expr);
    } else if (auto* jn = std::get_if<JoinOp>(&n.op)) {
        if (jn->condition) f(jn->condition);
    } else if (auto* so = std::get_if<SortOp>(&n.op)) {
        for (const auto& k : so->keys) f(k.expr);
    }
}

}  // namespace eqperf
