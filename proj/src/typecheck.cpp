#include "eqperf/typecheck.hpp"

#include <set>

namespace eqperf {

namespace {

bool numeric(ValueType t) { return t == ValueType::Integer || t == ValueType::Double; }

bool comparable(ValueType a, ValueType b) {
    if (a == b) return true;
    return numeric(a) && numeric(b);
}

struct Checker {
    const SchemaMetadata& schema;
    std::vector<std::string>& diags;

    void fail(const std::string& where, const std::string& what) {
        diags.push_back(where + ": " + what);
    }

    // Returns false if the expression is unusable (stops cascading noise).
    bool check_expr(const ExprPtr& e, const Scope& scope, const std::string& where,
                    bool allow_agg) {
        if (!e) {
            fail(where, "missing expression");
            return false;
        }
        return std::visit(
            [&](const auto& n) -> bool {
                using T = std::decay_t<decltype(n)>;
                if constexpr (std::is_same_v<T, ColumnRef>) {
                    const ScopeColumn* c = scope.resolve(n);
                    if (!c) {
                        fail(where, "unresolved column " +
                                        (n.table.empty() ? n.column : n.table + "." + n.column));
                        return false;
                    }
                    if (c->type != n.type) {
                        fail(where, "column " + n.column + " declared " +
                                        value_type_name(n.type) + " but scope has " +
                                        value_type_name(c->type));
                        return false;
                    }
                    return true;
                } else if constexpr (std::is_same_v<T, Literal>) {
                    return true;
                } else if constexpr (std::is_same_v<T, Comparison>) {
                    if (!check_expr(n.lhs, scope, where, allow_agg) ||
                        !check_expr(n.rhs, scope, where, allow_agg))
                        return false;
                    ValueType lt = expr_type(n.lhs), rt = expr_type(n.rhs);
                    if (n.op == CmpOp::Like || n.op == CmpOp::NotLike) {
                        if (lt != ValueType::String || rt != ValueType::String) {
                            fail(where, "LIKE needs string operands");
                            return false;
                        }
                        return true;
                    }
                    if (!comparable(lt, rt)) {
                        fail(where, std::string("incomparable types ") + value_type_name(lt) +
                                        " vs " + value_type_name(rt));
                        return false;
                    }
                    return true;
                } else if constexpr (std::is_same_v<T, IsTest>) {
                    if (!check_expr(n.operand, scope, where, allow_agg)) return false;
                    if ((n.op == IsOp::IsTrue || n.op == IsOp::IsFalse) &&
                        expr_type(n.operand) != ValueType::Boolean) {
                        fail(where, "IS TRUE/FALSE needs a boolean operand");
                        return false;
                    }
                    return true;
                } else if constexpr (std::is_same_v<T, BoolExpr>) {
                    if (n.operands.size() < 2) {
                        fail(where, "AND/OR with fewer than two operands");
                        return false;
                    }
                    bool ok = true;
                    for (const auto& op : n.operands) {
                        if (!check_expr(op, scope, where, allow_agg)) {
                            ok = false;
                            continue;
                        }
                        if (expr_type(op) != ValueType::Boolean) {
                            fail(where, "AND/OR operand is not boolean");
                            ok = false;
                        }
                    }
                    return ok;
                } else if constexpr (std::is_same_v<T, NotExpr>) {
                    if (!check_expr(n.operand, scope, where, allow_agg)) return false;
                    if (expr_type(n.operand) != ValueType::Boolean) {
                        fail(where, "NOT needs a boolean operand");
                        return false;
                    }
                    return true;
                } else if constexpr (std::is_same_v<T, ArithExpr>) {
                    if (!check_expr(n.lhs, scope, where, allow_agg) ||
                        !check_expr(n.rhs, scope, where, allow_agg))
                        return false;
                    if (!numeric(expr_type(n.lhs)) || !numeric(expr_type(n.rhs))) {
                        fail(where, "arithmetic needs numeric operands");
                        return false;
                    }
                    return true;
                } else if constexpr (std::is_same_v<T, ExtractExpr>) {
                    if (!check_expr(n.arg, scope, where, allow_agg)) return false;
                    if (expr_type(n.arg) != ValueType::Datetime) {
                        fail(where, "EXTRACT needs a datetime operand");
                        return false;
                    }
                    return true;
                } else if constexpr (std::is_same_v<T, CastExpr>) {
                    return check_expr(n.arg, scope, where, allow_agg);
                } else if constexpr (std::is_same_v<T, AggCall>) {
                    if (!allow_agg) {
                        fail(where, "aggregate call outside an Aggregate node");
                        return false;
                    }
                    if (n.star) return true;
                    if (!check_expr(n.arg, scope, where, false)) return false;
                    if (n.fn == AggFn::Avg || n.fn == AggFn::Sum) {
                        if (!numeric(expr_type(n.arg))) {
                            fail(where, "AVG/SUM needs a numeric argument");
                            return false;
                        }
                    }
                    return true;
                }
            },
            e->node);
    }

    void check_node(const PlanPtr& p, std::set<std::string>& aliases) {
        std::visit(
            [&](const auto& op) {
                using T = std::decay_t<decltype(op)>;
                if constexpr (std::is_same_v<T, ScanOp>) {
                    const TableInfo* t = schema.table(op.table);
                    if (!t) {
                        fail("Scan " + op.table, "table not in schema");
                        return;
                    }
                    if (op.alias.empty()) fail("Scan " + op.table, "empty alias");
                    if (!aliases.insert(op.alias).second)
                        fail("Scan " + op.table, "duplicate alias " + op.alias);
                    for (const auto& c : op.columns) {
                        const ColumnInfo* sc = t->column(c.name);
                        if (!sc)
                            fail("Scan " + op.table, "column " + c.name + " not in schema");
                        else if (sc->type != c.type)
                            fail("Scan " + op.table, "column " + c.name + " type mismatch");
                    }
                } else if constexpr (std::is_same_v<T, FilterOp>) {
                    Scope s = plan_scope(p->children[0]);
                    if (check_expr(op.predicate, s, "Filter", false) &&
                        expr_type(op.predicate) != ValueType::Boolean)
                        fail("Filter", "predicate is not boolean");
                } else if constexpr (std::is_same_v<T, ProjectOp>) {
                    if (op.items.empty()) fail("Project", "no output columns");
                    Scope s = plan_scope(p->children[0]);
                    std::set<std::string> names;
                    for (const auto& it : op.items) {
                        if (it.alias.empty()) fail("Project", "item without alias");
                        if (!names.insert(it.alias).second)
                            fail("Project", "duplicate output name " + it.alias);
                        check_expr(it.expr, s, "Project " + it.alias, false);
                    }
                } else if constexpr (std::is_same_v<T, JoinOp>) {
                    Scope l = plan_scope(p->children[0]);
                    Scope r = plan_scope(p->children[1]);
                    Scope both;
                    both.cols = l.cols;
                    both.cols.insert(both.cols.end(), r.cols.begin(), r.cols.end());
                    if (op.type == JoinType::Cross) {
                        if (op.condition) fail("Join", "CROSS join with a condition");
                    } else {
                        if (!op.condition) {
                            fail("Join", "missing condition");
                        } else if (check_expr(op.condition, both, "Join", false) &&
                                   expr_type(op.condition) != ValueType::Boolean) {
                            fail("Join", "condition is not boolean");
                        }
                    }
                } else if constexpr (std::is_same_v<T, AggregateOp>) {
                    Scope s = plan_scope(p->children[0]);
                    std::set<std::string> names;
                    for (const auto& k : op.keys) {
                        check_expr(build::col(k.table, k.column, k.type), s, "Aggregate key",
                                   false);
                        if (!names.insert(k.column).second)
                            fail("Aggregate", "duplicate output name " + k.column);
                    }
                    if (op.keys.empty() && op.aggs.empty())
                        fail("Aggregate", "neither keys nor aggregate calls");
                    for (const auto& a : op.aggs) {
                        if (a.alias.empty()) fail("Aggregate", "call without alias");
                        if (!names.insert(a.alias).second)
                            fail("Aggregate", "duplicate output name " + a.alias);
                        check_expr(std::make_shared<Expr>(Expr{a.call}), s, "Aggregate " + a.alias,
                                   true);
                    }
                } else if constexpr (std::is_same_v<T, SortOp>) {
                    if (op.keys.empty()) fail("Sort", "no keys");
                    Scope s = plan_scope(p->children[0]);
                    for (const auto& k : op.keys) check_expr(k.expr, s, "Sort key", false);
                } else if constexpr (std::is_same_v<T, LimitOp>) {
                    if (op.count < 0) fail("Limit", "negative count");
                } else if constexpr (std::is_same_v<T, UnionOp>) {
                    Scope l = plan_scope(p->children[0]);
                    Scope r = plan_scope(p->children[1]);
                    if (l.cols.size() != r.cols.size()) {
                        fail("Union", "arms have different column counts");
                    } else {
                        for (size_t i = 0; i < l.cols.size(); ++i) {
                            if (!comparable(l.cols[i].type, r.cols[i].type))
                                fail("Union", "column " + std::to_string(i + 1) +
                                                  " type mismatch");
                        }
                    }
                } else if constexpr (std::is_same_v<T, DistinctOp>) {
                    // nothing beyond child checks
                }
            },
            p->op);
        size_t want = std::holds_alternative<ScanOp>(p->op) ? 0
                      : (std::holds_alternative<JoinOp>(p->op) ||
                         std::holds_alternative<UnionOp>(p->op))
                          ? 2
                          : 1;
        if (p->children.size() != want) {
            fail("node", "wrong child count");
            return;
        }
        for (const auto& c : p->children) check_node(c, aliases);
    }
};

}  // namespace

TypeCheckResult type_check(const LogicalPlan& plan, const SchemaMetadata& schema) {
    TypeCheckResult r;
    if (!plan.root) {
        r.ok = false;
        r.diagnostics.push_back("plan: empty");
        return r;
    }
    std::set<std::string> aliases;
    Checker ck{schema, r.diagnostics};
    ck.check_node(plan.root, aliases);
    r.ok = r.diagnostics.empty();
    return r;
}

}  // namespace eqperf
