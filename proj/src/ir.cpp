#include "eqperf/ir.hpp"

#include <algorithm>
#include <cassert>
#include <charconv>
#include <sstream>

#include "eqperf/common.hpp"

namespace eqperf {

namespace {

std::string dbl_repr(double v) {
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

std::string type_spec_key(const TypeSpec& t) {
    std::string s = value_type_name(t.type);
    if (t.varchar_len) s += "(" + std::to_string(*t.varchar_len) + ")";
    return s;
}

const char* cmp_op_token(CmpOp op) {
    switch (op) {
        case CmpOp::Eq: return "=";
        case CmpOp::Ne: return "<>";
        case CmpOp::Lt: return "<";
        case CmpOp::Le: return "<=";
        case CmpOp::Gt: return ">";
        case CmpOp::Ge: return ">=";
        case CmpOp::Like: return "LIKE";
        case CmpOp::NotLike: return "NOT LIKE";
        case CmpOp::IsDistinct: return "IS DISTINCT FROM";
        case CmpOp::IsNotDistinct: return "IS NOT DISTINCT FROM";
    }
    return "?";
}

const char* agg_fn_name(AggFn fn) {
    switch (fn) {
        case AggFn::Avg: return "AVG";
        case AggFn::Sum: return "SUM";
        case AggFn::Min: return "MIN";
        case AggFn::Max: return "MAX";
        case AggFn::Count: return "COUNT";
    }
    return "?";
}

const char* extract_field_name(ExtractField f) {
    switch (f) {
        case ExtractField::Year: return "YEAR";
        case ExtractField::Month: return "MONTH";
        case ExtractField::Day: return "DAY";
    }
    return "?";
}

// Canonical serialization of an expression. With `normalized`, AND/OR operand
// lists are sorted so that key equality ignores conjunct order. With
// `wipe_literals`, literal payloads collapse to "?" (shape signatures).
std::string ser_expr(const ExprPtr& e, bool normalized, bool wipe_literals) {
    if (!e) return "<null>";
    return std::visit(
        [&](const auto& n) -> std::string {
            using T = std::decay_t<decltype(n)>;
            if constexpr (std::is_same_v<T, ColumnRef>) {
                return "c:" + n.table + "." + n.column;
            } else if constexpr (std::is_same_v<T, Literal>) {
                if (wipe_literals) return "l:?";
                if (n.is_null) return "l:null:" + type_spec_key(n.spec);
                switch (n.spec.type) {
                    case ValueType::Integer: return "l:i:" + std::to_string(n.int_v);
                    case ValueType::Double: return "l:d:" + dbl_repr(n.dbl_v);
                    case ValueType::Boolean: return n.bool_v ? "l:b:1" : "l:b:0";
                    case ValueType::Datetime: return "l:dt:" + n.str_v;
                    case ValueType::String: return "l:" + type_spec_key(n.spec) + ":" + n.str_v;
                }
                return "l:?";
            } else if constexpr (std::is_same_v<T, Comparison>) {
                return std::string("(") + cmp_op_token(n.op) + " " +
                       ser_expr(n.lhs, normalized, wipe_literals) + " " +
                       ser_expr(n.rhs, normalized, wipe_literals) + ")";
            } else if constexpr (std::is_same_v<T, IsTest>) {
                const char* t = n.op == IsOp::IsTrue     ? "istrue"
                                : n.op == IsOp::IsFalse  ? "isfalse"
                                : n.op == IsOp::IsNull   ? "isnull"
                                                         : "isnotnull";
                return std::string("(") + t + " " + ser_expr(n.operand, normalized, wipe_literals) +
                       ")";
            } else if constexpr (std::is_same_v<T, BoolExpr>) {
                std::vector<std::string> parts;
                parts.reserve(n.operands.size());
                for (const auto& op : n.operands)
                    parts.push_back(ser_expr(op, normalized, wipe_literals));
                if (normalized) std::sort(parts.begin(), parts.end());
                return std::string("(") + (n.conn == BoolConn::And ? "and" : "or") + " " +
                       join(parts, " ") + ")";
            } else if constexpr (std::is_same_v<T, NotExpr>) {
                return "(not " + ser_expr(n.operand, normalized, wipe_literals) + ")";
            } else if constexpr (std::is_same_v<T, ArithExpr>) {
                const char* t = n.op == ArithOp::Add   ? "+"
                                : n.op == ArithOp::Sub ? "-"
                                : n.op == ArithOp::Mul ? "*"
                                                       : "/";
                return std::string("(") + t + " " + ser_expr(n.lhs, normalized, wipe_literals) +
                       " " + ser_expr(n.rhs, normalized, wipe_literals) + ")";
            } else if constexpr (std::is_same_v<T, ExtractExpr>) {
                return std::string("(extract:") + extract_field_name(n.field) + " " +
                       ser_expr(n.arg, normalized, wipe_literals) + ")";
            } else if constexpr (std::is_same_v<T, CastExpr>) {
                return "(cast:" + type_spec_key(n.to) + " " +
                       ser_expr(n.arg, normalized, wipe_literals) + ")";
            } else if constexpr (std::is_same_v<T, AggCall>) {
                if (n.star) return "(count*)";
                return std::string("(") + agg_fn_name(n.fn) + " " +
                       ser_expr(n.arg, normalized, wipe_literals) + ")";
            }
        },
        e->node);
}

std::string ser_plan(const PlanPtr& p, bool normalized, bool wipe_literals) {
    if (!p) return "<null>";
    std::string head = std::visit(
        [&](const auto& op) -> std::string {
            using T = std::decay_t<decltype(op)>;
            if constexpr (std::is_same_v<T, ScanOp>) {
                std::string s = "scan:" + op.table + ":" + op.alias + "[";
                for (const auto& c : op.columns) s += c.name + ",";
                return s + "]";
            } else if constexpr (std::is_same_v<T, FilterOp>) {
                return "filter:" + ser_expr(op.predicate, normalized, wipe_literals);
            } else if constexpr (std::is_same_v<T, ProjectOp>) {
                std::string s = "project:[";
                for (const auto& it : op.items)
                    s += it.alias + "=" + ser_expr(it.expr, normalized, wipe_literals) + ",";
                return s + "]";
            } else if constexpr (std::is_same_v<T, JoinOp>) {
                std::string s = op.type == JoinType::Inner  ? "join:inner"
                                : op.type == JoinType::Left ? "join:left"
                                                            : "join:cross";
                if (op.condition) s += ":" + ser_expr(op.condition, normalized, wipe_literals);
                return s;
            } else if constexpr (std::is_same_v<T, AggregateOp>) {
                std::string s = "agg:keys[";
                for (const auto& k : op.keys) s += k.table + "." + k.column + ",";
                s += "]:aggs[";
                for (const auto& a : op.aggs) {
                    if (a.call.star)
                        s += a.alias + "=(count*),";
                    else
                        s += a.alias + "=(" + agg_fn_name(a.call.fn) + " " +
                             ser_expr(a.call.arg, normalized, wipe_literals) + "),";
                }
                return s + "]";
            } else if constexpr (std::is_same_v<T, DistinctOp>) {
                return "distinct";
            } else if constexpr (std::is_same_v<T, SortOp>) {
                std::string s = "sort:[";
                for (const auto& k : op.keys) {
                    s += ser_expr(k.expr, normalized, wipe_literals);
                    s += k.asc ? ":asc" : ":desc";
                    if (k.tie_breaker) s += ":tb";
                    s += ",";
                }
                return s + "]";
            } else if constexpr (std::is_same_v<T, LimitOp>) {
                return wipe_literals ? "limit:?" : "limit:" + std::to_string(op.count);
            } else if constexpr (std::is_same_v<T, UnionOp>) {
                return op.all ? "union:all" : "union:distinct";
            }
        },
        p->op);
    std::string s = "(" + head;
    for (const auto& c : p->children) s += " " + ser_plan(c, normalized, wipe_literals);
    return s + ")";
}

}  // namespace

// -------------------------------------------------------------------------
// Builders

namespace build {

ExprPtr col(const std::string& table, const std::string& column, ValueType type) {
    return std::make_shared<Expr>(Expr{ColumnRef{table, column, type}});
}

ExprPtr lit_int(int64_t v) {
    Literal l;
    l.spec = {ValueType::Integer, std::nullopt};
    l.int_v = v;
    return std::make_shared<Expr>(Expr{l});
}

ExprPtr lit_dbl(double v) {
    Literal l;
    l.spec = {ValueType::Double, std::nullopt};
    l.dbl_v = v;
    return std::make_shared<Expr>(Expr{l});
}

ExprPtr lit_str(const std::string& v, std::optional<int> varchar_len) {
    Literal l;
    l.spec = {ValueType::String, varchar_len};
    l.str_v = v;
    return std::make_shared<Expr>(Expr{l});
}

ExprPtr lit_dt(const std::string& canonical) {
    Literal l;
    l.spec = {ValueType::Datetime, std::nullopt};
    l.str_v = canonical;
    return std::make_shared<Expr>(Expr{l});
}

ExprPtr lit_bool(bool v) {
    Literal l;
    l.spec = {ValueType::Boolean, std::nullopt};
    l.bool_v = v;
    return std::make_shared<Expr>(Expr{l});
}

ExprPtr lit_null(ValueType type) {
    Literal l;
    l.spec = {type, std::nullopt};
    l.is_null = true;
    return std::make_shared<Expr>(Expr{l});
}

ExprPtr cmp(CmpOp op, ExprPtr lhs, ExprPtr rhs) {
    return std::make_shared<Expr>(Expr{Comparison{op, std::move(lhs), std::move(rhs)}});
}

ExprPtr is_test(IsOp op, ExprPtr operand) {
    return std::make_shared<Expr>(Expr{IsTest{op, std::move(operand)}});
}

ExprPtr conn(BoolConn c, std::vector<ExprPtr> operands) {
    std::vector<ExprPtr> flat;
    for (auto& op : operands) {
        if (const auto* b = std::get_if<BoolExpr>(&op->node); b && b->conn == c) {
            for (const auto& sub : b->operands) flat.push_back(sub);
        } else {
            flat.push_back(std::move(op));
        }
    }
    assert(flat.size() >= 1);
    if (flat.size() == 1) return flat[0];
    return std::make_shared<Expr>(Expr{BoolExpr{c, std::move(flat)}});
}

ExprPtr negate(ExprPtr operand) {
    return std::make_shared<Expr>(Expr{NotExpr{std::move(operand)}});
}

ExprPtr arith(ArithOp op, ExprPtr lhs, ExprPtr rhs) {
    return std::make_shared<Expr>(Expr{ArithExpr{op, std::move(lhs), std::move(rhs)}});
}

ExprPtr extract(ExtractField field, ExprPtr arg) {
    return std::make_shared<Expr>(Expr{ExtractExpr{field, std::move(arg)}});
}

ExprPtr cast(TypeSpec to, ExprPtr arg) {
    return std::make_shared<Expr>(Expr{CastExpr{to, std::move(arg)}});
}

ExprPtr agg(AggFn fn, ExprPtr arg) {
    return std::make_shared<Expr>(Expr{AggCall{fn, std::move(arg), false}});
}

ExprPtr count_star() { return std::make_shared<Expr>(Expr{AggCall{AggFn::Count, nullptr, true}}); }

PlanPtr scan(const SchemaMetadata& schema, const std::string& table, const std::string& alias) {
    const TableInfo* t = schema.table(table);
    assert(t && "unknown table");
    ScanOp op;
    op.table = table;
    op.alias = alias.empty() ? table : alias;
    op.columns = t->columns;
    return std::make_shared<PlanNode>(PlanNode{op, {}});
}

PlanPtr filter(ExprPtr predicate, PlanPtr child) {
    return std::make_shared<PlanNode>(PlanNode{FilterOp{std::move(predicate)}, {std::move(child)}});
}

PlanPtr project(std::vector<ProjItem> items, PlanPtr child) {
    return std::make_shared<PlanNode>(PlanNode{ProjectOp{std::move(items)}, {std::move(child)}});
}

PlanPtr join(JoinType type, ExprPtr condition, PlanPtr left, PlanPtr right) {
    return std::make_shared<PlanNode>(
        PlanNode{JoinOp{type, std::move(condition)}, {std::move(left), std::move(right)}});
}

PlanPtr aggregate(std::vector<ColumnRef> keys, std::vector<AggItem> aggs, PlanPtr child) {
    return std::make_shared<PlanNode>(
        PlanNode{AggregateOp{std::move(keys), std::move(aggs)}, {std::move(child)}});
}

PlanPtr distinct(PlanPtr child) {
    return std::make_shared<PlanNode>(PlanNode{DistinctOp{}, {std::move(child)}});
}

PlanPtr sort(std::vector<SortKey> keys, PlanPtr child) {
    return std::make_shared<PlanNode>(PlanNode{SortOp{std::move(keys)}, {std::move(child)}});
}

PlanPtr limit(int64_t count, PlanPtr child) {
    return std::make_shared<PlanNode>(PlanNode{LimitOp{count}, {std::move(child)}});
}

PlanPtr set_union(bool all, PlanPtr left, PlanPtr right) {
    return std::make_shared<PlanNode>(PlanNode{UnionOp{all}, {std::move(left), std::move(right)}});
}

}  // namespace build

// -------------------------------------------------------------------------
// Inspection

ValueType expr_type(const ExprPtr& e) {
    assert(e);
    return std::visit(
        [&](const auto& n) -> ValueType {
            using T = std::decay_t<decltype(n)>;
            if constexpr (std::is_same_v<T, ColumnRef>) {
                return n.type;
            } else if constexpr (std::is_same_v<T, Literal>) {
                return n.spec.type;
            } else if constexpr (std::is_same_v<T, Comparison> || std::is_same_v<T, IsTest> ||
                                 std::is_same_v<T, BoolExpr> || std::is_same_v<T, NotExpr>) {
                return ValueType::Boolean;
            } else if constexpr (std::is_same_v<T, ArithExpr>) {
                return (expr_type(n.lhs) == ValueType::Double ||
                        expr_type(n.rhs) == ValueType::Double)
                           ? ValueType::Double
                           : ValueType::Integer;
            } else if constexpr (std::is_same_v<T, ExtractExpr>) {
                return ValueType::Integer;
            } else if constexpr (std::is_same_v<T, CastExpr>) {
                return n.to.type;
            } else if constexpr (std::is_same_v<T, AggCall>) {
                switch (n.fn) {
                    case AggFn::Avg: return ValueType::Double;
                    case AggFn::Count: return ValueType::Integer;
                    case AggFn::Sum:
                    case AggFn::Min:
                    case AggFn::Max: return n.star ? ValueType::Integer : expr_type(n.arg);
                }
                return ValueType::Integer;
            }
        },
        e->node);
}

bool expr_has_agg(const ExprPtr& e) {
    if (!e) return false;
    return std::visit(
        [&](const auto& n) -> bool {
            using T = std::decay_t<decltype(n)>;
            if constexpr (std::is_same_v<T, AggCall>) {
                return true;
            } else if constexpr (std::is_same_v<T, Comparison> || std::is_same_v<T, ArithExpr>) {
                return expr_has_agg(n.lhs) || expr_has_agg(n.rhs);
            } else if constexpr (std::is_same_v<T, IsTest> || std::is_same_v<T, NotExpr>) {
                return expr_has_agg(n.operand);
            } else if constexpr (std::is_same_v<T, BoolExpr>) {
                for (const auto& op : n.operands)
                    if (expr_has_agg(op)) return true;
                return false;
            } else if constexpr (std::is_same_v<T, ExtractExpr> || std::is_same_v<T, CastExpr>) {
                return expr_has_agg(n.arg);
            } else {
                return false;
            }
        },
        e->node);
}

std::string expr_key(const ExprPtr& e) { return ser_expr(e, true, false); }

bool expr_equal(const ExprPtr& a, const ExprPtr& b) {
    if (!a || !b) return !a && !b;
    return expr_key(a) == expr_key(b);
}

bool plan_equal(const PlanPtr& a, const PlanPtr& b) {
    if (!a || !b) return !a && !b;
    return ser_plan(a, true, false) == ser_plan(b, true, false);
}

uint64_t plan_skeleton_hash(const PlanPtr& p) { return fnv1a64(ser_plan(p, true, true)); }

uint64_t plan_content_hash(const PlanPtr& p) { return fnv1a64(ser_plan(p, true, false)); }

// -------------------------------------------------------------------------
// Pretty printer

namespace {

std::string pretty_expr(const ExprPtr& e) {
    if (!e) return "<null>";
    return std::visit(
        [&](const auto& n) -> std::string {
            using T = std::decay_t<decltype(n)>;
            if constexpr (std::is_same_v<T, ColumnRef>) {
                return n.table.empty() ? n.column : n.table + "." + n.column;
            } else if constexpr (std::is_same_v<T, Literal>) {
                if (n.is_null) return "NULL";
                switch (n.spec.type) {
                    case ValueType::Integer: return std::to_string(n.int_v);
                    case ValueType::Double: return dbl_repr(n.dbl_v);
                    case ValueType::Boolean: return n.bool_v ? "TRUE" : "FALSE";
                    case ValueType::Datetime: return "ts'" + n.str_v + "'";
                    case ValueType::String: return "'" + n.str_v + "'";
                }
                return "?";
            } else if constexpr (std::is_same_v<T, Comparison>) {
                return "(" + pretty_expr(n.lhs) + " " + cmp_op_token(n.op) + " " +
                       pretty_expr(n.rhs) + ")";
            } else if constexpr (std::is_same_v<T, IsTest>) {
                const char* t = n.op == IsOp::IsTrue     ? " IS TRUE"
                                : n.op == IsOp::IsFalse  ? " IS FALSE"
                                : n.op == IsOp::IsNull   ? " IS NULL"
                                                         : " IS NOT NULL";
                return "(" + pretty_expr(n.operand) + t + ")";
            } else if constexpr (std::is_same_v<T, BoolExpr>) {
                std::vector<std::string> parts;
                for (const auto& op : n.operands) parts.push_back(pretty_expr(op));
                return "(" + join(parts, n.conn == BoolConn::And ? " AND " : " OR ") + ")";
            } else if constexpr (std::is_same_v<T, NotExpr>) {
                return "(NOT " + pretty_expr(n.operand) + ")";
            } else if constexpr (std::is_same_v<T, ArithExpr>) {
                const char* t = n.op == ArithOp::Add   ? " + "
                                : n.op == ArithOp::Sub ? " - "
                                : n.op == ArithOp::Mul ? " * "
                                                       : " / ";
                return "(" + pretty_expr(n.lhs) + t + pretty_expr(n.rhs) + ")";
            } else if constexpr (std::is_same_v<T, ExtractExpr>) {
                return std::string("EXTRACT(") + extract_field_name(n.field) + " FROM " +
                       pretty_expr(n.arg) + ")";
            } else if constexpr (std::is_same_v<T, CastExpr>) {
                std::string t = value_type_name(n.to.type);
                if (n.to.varchar_len) t += "(" + std::to_string(*n.to.varchar_len) + ")";
                return "CAST(" + pretty_expr(n.arg) + " AS " + t + ")";
            } else if constexpr (std::is_same_v<T, AggCall>) {
                if (n.star) return "COUNT(*)";
                return std::string(agg_fn_name(n.fn)) + "(" + pretty_expr(n.arg) + ")";
            }
        },
        e->node);
}

void pretty_rec(const PlanPtr& p, int depth, std::ostringstream& out) {
    std::string pad(static_cast<size_t>(depth) * 2, ' ');
    out << pad;
    std::visit(
        [&](const auto& op) {
            using T = std::decay_t<decltype(op)>;
            if constexpr (std::is_same_v<T, ScanOp>) {
                out << "Scan " << op.table;
                if (op.alias != op.table) out << " AS " << op.alias;
            } else if constexpr (std::is_same_v<T, FilterOp>) {
                out << "Filter " << pretty_expr(op.predicate);
            } else if constexpr (std::is_same_v<T, ProjectOp>) {
                std::vector<std::string> parts;
                for (const auto& it : op.items)
                    parts.push_back(it.alias + " := " + pretty_expr(it.expr));
                out << "Project [" << join(parts, ", ") << "]";
            } else if constexpr (std::is_same_v<T, JoinOp>) {
                out << "Join "
                    << (op.type == JoinType::Inner  ? "INNER"
                        : op.type == JoinType::Left ? "LEFT"
                                                    : "CROSS");
                if (op.condition) out << " ON " << pretty_expr(op.condition);
            } else if constexpr (std::is_same_v<T, AggregateOp>) {
                std::vector<std::string> ks, as;
                for (const auto& k : op.keys) ks.push_back(k.table + "." + k.column);
                for (const auto& a : op.aggs) {
                    std::string c = a.call.star ? "COUNT(*)"
                                                : std::string(agg_fn_name(a.call.fn)) + "(" +
                                                      pretty_expr(a.call.arg) + ")";
                    as.push_back(a.alias + " := " + c);
                }
                out << "Aggregate keys=[" << join(ks, ", ") << "] aggs=[" << join(as, ", ") << "]";
            } else if constexpr (std::is_same_v<T, DistinctOp>) {
                out << "Distinct";
            } else if constexpr (std::is_same_v<T, SortOp>) {
                std::vector<std::string> parts;
                for (const auto& k : op.keys) {
                    std::string s = pretty_expr(k.expr);
                    s += k.asc ? " ASC" : " DESC";
                    if (k.tie_breaker) s += "*";
                    parts.push_back(s);
                }
                out << "Sort [" << join(parts, ", ") << "]";
            } else if constexpr (std::is_same_v<T, LimitOp>) {
                out << "Limit " << op.count;
            } else if constexpr (std::is_same_v<T, UnionOp>) {
                out << (op.all ? "Union ALL" : "Union DISTINCT");
            }
        },
        p->op);
    out << "\n";
    for (const auto& c : p->children) pretty_rec(c, depth + 1, out);
}

}  // namespace

std::string plan_pretty(const PlanPtr& p) {
    if (!p) return "<null>\n";
    std::ostringstream out;
    pretty_rec(p, 0, out);
    return out.str();
}

// -------------------------------------------------------------------------
// Scope

const ScopeColumn* Scope::resolve(const ColumnRef& ref) const {
    int i = resolve_index(ref);
    return i < 0 ? nullptr : &cols[static_cast<size_t>(i)];
}

int Scope::resolve_index(const ColumnRef& ref) const {
    for (size_t i = 0; i < cols.size(); ++i) {
        const auto& c = cols[i];
        if (ref.table.empty()) {
            if (c.name == ref.column) return static_cast<int>(i);
        } else if (c.src_alias == ref.table && c.src_column == ref.column) {
            return static_cast<int>(i);
        }
    }
    return -1;
}

Scope plan_scope(const PlanPtr& p) {
    assert(p);
    return std::visit(
        [&](const auto& op) -> Scope {
            using T = std::decay_t<decltype(op)>;
            if constexpr (std::is_same_v<T, ScanOp>) {
                Scope s;
                for (const auto& c : op.columns) {
                    s.cols.push_back(
                        {c.name, c.type, op.alias, c.name, false, c.nullable, c.unique});
                }
                return s;
            } else if constexpr (std::is_same_v<T, FilterOp> || std::is_same_v<T, SortOp> ||
                                 std::is_same_v<T, LimitOp>) {
                return plan_scope(p->children[0]);
            } else if constexpr (std::is_same_v<T, DistinctOp>) {
                Scope s = plan_scope(p->children[0]);
                if (s.cols.size() == 1) s.cols[0].unique = true;
                return s;
            } else if constexpr (std::is_same_v<T, ProjectOp>) {
                Scope child = plan_scope(p->children[0]);
                Scope s;
                for (const auto& it : op.items) {
                    ScopeColumn sc;
                    sc.name = it.alias;
                    sc.type = expr_type(it.expr);
                    if (const auto* cr = std::get_if<ColumnRef>(&it.expr->node)) {
                        if (const ScopeColumn* src = child.resolve(*cr)) {
                            sc.src_alias = src->src_alias;
                            sc.src_column = src->src_column;
                            sc.from_aggregate = src->from_aggregate;
                            sc.nullable = src->nullable;
                            sc.unique = src->unique;
                        }
                    }
                    s.cols.push_back(sc);
                }
                return s;
            } else if constexpr (std::is_same_v<T, JoinOp>) {
                Scope l = plan_scope(p->children[0]);
                Scope r = plan_scope(p->children[1]);
                Scope s;
                for (auto c : l.cols) {
                    c.unique = false;
                    s.cols.push_back(c);
                }
                for (auto c : r.cols) {
                    c.unique = false;
                    if (op.type == JoinType::Left) c.nullable = true;
                    s.cols.push_back(c);
                }
                return s;
            } else if constexpr (std::is_same_v<T, AggregateOp>) {
                Scope child = plan_scope(p->children[0]);
                Scope s;
                for (const auto& k : op.keys) {
                    ScopeColumn sc;
                    sc.name = k.column;
                    sc.type = k.type;
                    sc.src_alias = k.table;
                    sc.src_column = k.column;
                    if (const ScopeColumn* src = child.resolve(k)) sc.nullable = src->nullable;
                    sc.unique = op.keys.size() == 1;
                    s.cols.push_back(sc);
                }
                for (const auto& a : op.aggs) {
                    ScopeColumn sc;
                    sc.name = a.alias;
                    sc.type = a.call.star ? ValueType::Integer
                                          : expr_type(std::make_shared<Expr>(Expr{a.call}));
                    sc.from_aggregate = true;
                    sc.nullable = a.call.fn != AggFn::Count;
                    s.cols.push_back(sc);
                }
                return s;
            } else if constexpr (std::is_same_v<T, UnionOp>) {
                Scope l = plan_scope(p->children[0]);
                Scope r = plan_scope(p->children[1]);
                Scope s;
                for (size_t i = 0; i < l.cols.size(); ++i) {
                    ScopeColumn sc;
                    sc.name = l.cols[i].name;
                    sc.type = l.cols[i].type;
                    if (i < r.cols.size() && r.cols[i].type == ValueType::Double)
                        sc.type = ValueType::Double;
                    sc.nullable = l.cols[i].nullable ||
                                  (i < r.cols.size() ? r.cols[i].nullable : true);
                    s.cols.push_back(sc);
                }
                return s;
            }
        },
        p->op);
}

std::vector<std::string> plan_aliases(const PlanPtr& p) {
    std::vector<std::string> out;
    if (!p) return out;
    if (const auto* sc = std::get_if<ScanOp>(&p->op)) out.push_back(sc->alias);
    for (const auto& c : p->children) {
        auto sub = plan_aliases(c);
        out.insert(out.end(), sub.begin(), sub.end());
    }
    return out;
}

}  // namespace eqperf
