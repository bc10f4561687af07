#include "eqperf/rules.hpp"

#include <cassert>
#include <set>

#include "eqperf/common.hpp"
#include "eqperf/typecheck.hpp"

namespace eqperf {

namespace {

using namespace build;

PlanPtr with_children(const PlanPtr& p, std::vector<PlanPtr> ch) {
    return std::make_shared<PlanNode>(PlanNode{p->op, std::move(ch)});
}

bool is_bool_literal(const ExprPtr& e, bool value) {
    const auto* l = std::get_if<Literal>(&e->node);
    return l && !l->is_null && l->spec.type == ValueType::Boolean && l->bool_v == value;
}

const Literal* as_literal(const ExprPtr& e) { return std::get_if<Literal>(&e->node); }

void collect_refs(const ExprPtr& e, std::vector<ColumnRef>& out) {
    if (!e) return;
    std::visit(
        [&](const auto& n) {
            using T = std::decay_t<decltype(n)>;
            if constexpr (std::is_same_v<T, ColumnRef>) {
                out.push_back(n);
            } else if constexpr (std::is_same_v<T, Comparison> || std::is_same_v<T, ArithExpr>) {
                collect_refs(n.lhs, out);
                collect_refs(n.rhs, out);
            } else if constexpr (std::is_same_v<T, IsTest> || std::is_same_v<T, NotExpr>) {
                collect_refs(n.operand, out);
            } else if constexpr (std::is_same_v<T, BoolExpr>) {
                for (const auto& op : n.operands) collect_refs(op, out);
            } else if constexpr (std::is_same_v<T, ExtractExpr> || std::is_same_v<T, CastExpr>) {
                collect_refs(n.arg, out);
            } else if constexpr (std::is_same_v<T, AggCall>) {
                if (!n.star) collect_refs(n.arg, out);
            }
        },
        e->node);
}

std::set<std::string> alias_set(const PlanPtr& p) {
    std::set<std::string> out;
    for (const auto& a : plan_aliases(p)) out.insert(a);
    return out;
}

// True when every reference names a scan alias in `aliases` (name-only
// references disqualify: their origin is unknown).
bool refs_within(const ExprPtr& e, const std::set<std::string>& aliases) {
    std::vector<ColumnRef> refs;
    collect_refs(e, refs);
    for (const auto& r : refs) {
        if (r.table.empty() || !aliases.count(r.table)) return false;
    }
    return true;
}

// Qualified references keep a stable identity across projections and
// groupings, which the value-preservation arguments below rely on.
bool refs_all_qualified(const ExprPtr& e) {
    std::vector<ColumnRef> refs;
    collect_refs(e, refs);
    for (const auto& r : refs) {
        if (r.table.empty()) return false;
    }
    return true;
}

ExprPtr substitute_expr(const ExprPtr& e, const ExprPtr& needle, const ExprPtr& repl,
                        bool& changed) {
    if (expr_equal(e, needle)) {
        changed = true;
        return repl;
    }
    return std::visit(
        [&](const auto& n) -> ExprPtr {
            using T = std::decay_t<decltype(n)>;
            if constexpr (std::is_same_v<T, Comparison>) {
                return cmp(n.op, substitute_expr(n.lhs, needle, repl, changed),
                           substitute_expr(n.rhs, needle, repl, changed));
            } else if constexpr (std::is_same_v<T, IsTest>) {
                return is_test(n.op, substitute_expr(n.operand, needle, repl, changed));
            } else if constexpr (std::is_same_v<T, BoolExpr>) {
                std::vector<ExprPtr> ops;
                for (const auto& op : n.operands)
                    ops.push_back(substitute_expr(op, needle, repl, changed));
                return std::make_shared<Expr>(Expr{BoolExpr{n.conn, std::move(ops)}});
            } else if constexpr (std::is_same_v<T, NotExpr>) {
                return negate(substitute_expr(n.operand, needle, repl, changed));
            } else if constexpr (std::is_same_v<T, ArithExpr>) {
                return arith(n.op, substitute_expr(n.lhs, needle, repl, changed),
                             substitute_expr(n.rhs, needle, repl, changed));
            } else if constexpr (std::is_same_v<T, ExtractExpr>) {
                return extract(n.field, substitute_expr(n.arg, needle, repl, changed));
            } else if constexpr (std::is_same_v<T, CastExpr>) {
                return cast(n.to, substitute_expr(n.arg, needle, repl, changed));
            } else {
                return e;
            }
        },
        e->node);
}

}  // namespace

std::vector<ExprPtr> conjuncts(const ExprPtr& e) {
    if (const auto* b = std::get_if<BoolExpr>(&e->node); b && b->conn == BoolConn::And)
        return b->operands;
    return {e};
}

ExprPtr conjoin(std::vector<ExprPtr> parts) {
    assert(!parts.empty());
    if (parts.size() == 1) return parts[0];
    return build::land(std::move(parts));
}

bool provably_empty(const PlanPtr& p) {
    return std::visit(
        [&](const auto& op) -> bool {
            using T = std::decay_t<decltype(op)>;
            if constexpr (std::is_same_v<T, FilterOp>) {
                return is_bool_literal(op.predicate, false) || provably_empty(p->children[0]);
            } else if constexpr (std::is_same_v<T, LimitOp>) {
                return op.count == 0 || provably_empty(p->children[0]);
            } else if constexpr (std::is_same_v<T, ProjectOp> || std::is_same_v<T, DistinctOp> ||
                                 std::is_same_v<T, SortOp>) {
                return provably_empty(p->children[0]);
            } else if constexpr (std::is_same_v<T, AggregateOp>) {
                // A grouped aggregate of nothing is nothing; a global one
                // still yields a row.
                return !op.keys.empty() && provably_empty(p->children[0]);
            } else if constexpr (std::is_same_v<T, JoinOp>) {
                if (op.type == JoinType::Left) return provably_empty(p->children[0]);
                return provably_empty(p->children[0]) || provably_empty(p->children[1]);
            } else if constexpr (std::is_same_v<T, UnionOp>) {
                return provably_empty(p->children[0]) && provably_empty(p->children[1]);
            } else {
                return false;
            }
        },
        p->op);
}

bool provably_non_null(const ExprPtr& e, const Scope& scope) {
    if (!e) return false;
    return std::visit(
        [&](const auto& n) -> bool {
            using T = std::decay_t<decltype(n)>;
            if constexpr (std::is_same_v<T, ColumnRef>) {
                const ScopeColumn* c = scope.resolve(n);
                return c && !c->nullable;
            } else if constexpr (std::is_same_v<T, Literal>) {
                return !n.is_null;
            } else if constexpr (std::is_same_v<T, Comparison>) {
                if (n.op == CmpOp::IsDistinct || n.op == CmpOp::IsNotDistinct) return true;
                return provably_non_null(n.lhs, scope) && provably_non_null(n.rhs, scope);
            } else if constexpr (std::is_same_v<T, IsTest>) {
                return true;
            } else if constexpr (std::is_same_v<T, BoolExpr>) {
                for (const auto& op : n.operands)
                    if (!provably_non_null(op, scope)) return false;
                return true;
            } else if constexpr (std::is_same_v<T, NotExpr>) {
                return provably_non_null(n.operand, scope);
            } else if constexpr (std::is_same_v<T, ArithExpr>) {
                return provably_non_null(n.lhs, scope) && provably_non_null(n.rhs, scope);
            } else if constexpr (std::is_same_v<T, ExtractExpr> || std::is_same_v<T, CastExpr>) {
                return provably_non_null(n.arg, scope);
            } else {
                return false;
            }
        },
        e->node);
}

// -------------------------------------------------------------------------
// Individual rules

namespace {

// Rule 0. A grouping (no aggregate calls) above an inner or cross join whose
// condition touches the left side only through grouping keys can be pushed
// below the join onto the left input; the outer grouping stays to dedup.
bool cond_push_group_through_join(const PlanPtr& p, const SchemaMetadata&) {
    const auto* agg = std::get_if<AggregateOp>(&p->op);
    if (!agg || agg->keys.empty() || !agg->aggs.empty()) return false;
    const PlanPtr& child = p->children[0];
    const auto* jn = std::get_if<JoinOp>(&child->op);
    if (!jn || jn->type == JoinType::Left) return false;
    auto left_aliases = alias_set(child->children[0]);
    for (const auto& k : agg->keys) {
        if (k.table.empty() || !left_aliases.count(k.table)) return false;
    }
    if (jn->condition) {
        std::vector<ColumnRef> refs;
        collect_refs(jn->condition, refs);
        for (const auto& r : refs) {
            if (r.table.empty()) return false;
            if (!left_aliases.count(r.table)) continue;  // right side, unconstrained
            bool is_key = false;
            for (const auto& k : agg->keys)
                if (k.table == r.table && k.column == r.column) is_key = true;
            if (!is_key) return false;
        }
    }
    return true;
}

PlanPtr tf_push_group_through_join(const PlanPtr& p, const SchemaMetadata&) {
    const auto& agg = std::get<AggregateOp>(p->op);
    const PlanPtr& child = p->children[0];
    const auto& jn = std::get<JoinOp>(child->op);
    PlanPtr inner = aggregate(agg.keys, {}, child->children[0]);
    PlanPtr new_join = join(jn.type, jn.condition, inner, child->children[1]);
    return aggregate(agg.keys, {}, new_join);
}

// Rule 13. A filter over a grouped aggregate that touches only grouping keys
// moves below the aggregate.
bool cond_push_filter_through_group(const PlanPtr& p, const SchemaMetadata&) {
    const auto* f = std::get_if<FilterOp>(&p->op);
    if (!f) return false;
    const auto* agg = std::get_if<AggregateOp>(&p->children[0]->op);
    if (!agg) return false;
    std::vector<ColumnRef> refs;
    collect_refs(f->predicate, refs);
    if (refs.empty()) return false;
    for (const auto& r : refs) {
        bool is_key = false;
        for (const auto& k : agg->keys)
            if (!r.table.empty() && k.table == r.table && k.column == r.column) is_key = true;
        if (!is_key) return false;
    }
    return true;
}

PlanPtr tf_push_filter_through_group(const PlanPtr& p, const SchemaMetadata&) {
    const auto& f = std::get<FilterOp>(p->op);
    const PlanPtr& aggnode = p->children[0];
    const auto& agg = std::get<AggregateOp>(aggnode->op);
    return aggregate(agg.keys, agg.aggs, filter(f.predicate, aggnode->children[0]));
}

// Rule 15. EXTRACT(YEAR FROM d) compared against an integer becomes a plain
// range test over d, which lets engines use indexes and skip the function.
std::string year_start(int64_t y) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%04d-01-01 00:00:00", static_cast<int>(y));
    return buf;
}

ExprPtr year_range_cmp(CmpOp op, const ExprPtr& d, int64_t y) {
    ExprPtr lo = lit_dt(year_start(y));
    ExprPtr hi = lit_dt(year_start(y + 1));
    switch (op) {
        case CmpOp::Eq: return land({cmp(CmpOp::Ge, d, lo), cmp(CmpOp::Lt, d, hi)});
        case CmpOp::Ne: return lor({cmp(CmpOp::Lt, d, lo), cmp(CmpOp::Ge, d, hi)});
        case CmpOp::Lt: return cmp(CmpOp::Lt, d, lo);
        case CmpOp::Le: return cmp(CmpOp::Lt, d, hi);
        case CmpOp::Gt: return cmp(CmpOp::Ge, d, hi);
        case CmpOp::Ge: return cmp(CmpOp::Ge, d, lo);
        default: return nullptr;
    }
}

CmpOp mirror_op(CmpOp op) {
    switch (op) {
        case CmpOp::Lt: return CmpOp::Gt;
        case CmpOp::Le: return CmpOp::Ge;
        case CmpOp::Gt: return CmpOp::Lt;
        case CmpOp::Ge: return CmpOp::Le;
        default: return op;
    }
}

ExprPtr rewrite_extract_cmp(const ExprPtr& e, bool& changed) {
    return std::visit(
        [&](const auto& n) -> ExprPtr {
            using T = std::decay_t<decltype(n)>;
            if constexpr (std::is_same_v<T, Comparison>) {
                const auto* lx = std::get_if<ExtractExpr>(&n.lhs->node);
                const auto* rx = std::get_if<ExtractExpr>(&n.rhs->node);
                const Literal* ll = as_literal(n.lhs);
                const Literal* rl = as_literal(n.rhs);
                auto usable = [](const ExtractExpr* x, const Literal* l) {
                    return x && x->field == ExtractField::Year && l && !l->is_null &&
                           l->spec.type == ValueType::Integer && l->int_v >= 0 &&
                           l->int_v <= 9998;
                };
                if (usable(lx, rl)) {
                    if (ExprPtr out = year_range_cmp(n.op, lx->arg, rl->int_v)) {
                        changed = true;
                        return out;
                    }
                }
                if (usable(rx, ll)) {
                    if (ExprPtr out = year_range_cmp(mirror_op(n.op), rx->arg, ll->int_v)) {
                        changed = true;
                        return out;
                    }
                }
                return cmp(n.op, rewrite_extract_cmp(n.lhs, changed),
                           rewrite_extract_cmp(n.rhs, changed));
            } else if constexpr (std::is_same_v<T, IsTest>) {
                return is_test(n.op, rewrite_extract_cmp(n.operand, changed));
            } else if constexpr (std::is_same_v<T, BoolExpr>) {
                std::vector<ExprPtr> ops;
                for (const auto& op : n.operands)
                    ops.push_back(rewrite_extract_cmp(op, changed));
                return std::make_shared<Expr>(Expr{BoolExpr{n.conn, std::move(ops)}});
            } else if constexpr (std::is_same_v<T, NotExpr>) {
                return negate(rewrite_extract_cmp(n.operand, changed));
            } else {
                return e;
            }
        },
        e->node);
}

bool cond_extract_to_range(const PlanPtr& p, const SchemaMetadata&) {
    bool changed = false;
    if (const auto* f = std::get_if<FilterOp>(&p->op)) {
        rewrite_extract_cmp(f->predicate, changed);
    } else if (const auto* jn = std::get_if<JoinOp>(&p->op); jn && jn->condition) {
        rewrite_extract_cmp(jn->condition, changed);
    }
    return changed;
}

PlanPtr tf_extract_to_range(const PlanPtr& p, const SchemaMetadata&) {
    bool changed = false;
    if (const auto* f = std::get_if<FilterOp>(&p->op)) {
        return filter(rewrite_extract_cmp(f->predicate, changed), p->children[0]);
    }
    const auto& jn = std::get<JoinOp>(p->op);
    return join(jn.type, rewrite_extract_cmp(jn.condition, changed), p->children[0],
                p->children[1]);
}

// Rule 16. Conjuncts of a filter above a join that reference only one input
// move onto that input. For LEFT joins only the left input is safe: filtering
// the right input would resurrect rows the original filter discarded.
struct FilterSplit {
    std::vector<ExprPtr> left, right, keep;
};

FilterSplit split_filter_over_join(const FilterOp& f, const PlanNode& join_node) {
    const auto& jn = std::get<JoinOp>(join_node.op);
    auto la = alias_set(join_node.children[0]);
    auto ra = alias_set(join_node.children[1]);
    FilterSplit out;
    for (const auto& c : conjuncts(f.predicate)) {
        if (refs_within(c, la)) {
            out.left.push_back(c);
        } else if (jn.type != JoinType::Left && refs_within(c, ra)) {
            out.right.push_back(c);
        } else {
            out.keep.push_back(c);
        }
    }
    return out;
}

bool cond_push_filter_through_join(const PlanPtr& p, const SchemaMetadata&) {
    const auto* f = std::get_if<FilterOp>(&p->op);
    if (!f) return false;
    if (!std::holds_alternative<JoinOp>(p->children[0]->op)) return false;
    FilterSplit s = split_filter_over_join(*f, *p->children[0]);
    return !s.left.empty() || !s.right.empty();
}

PlanPtr tf_push_filter_through_join(const PlanPtr& p, const SchemaMetadata&) {
    const auto& f = std::get<FilterOp>(p->op);
    const PlanPtr& jnode = p->children[0];
    const auto& jn = std::get<JoinOp>(jnode->op);
    FilterSplit s = split_filter_over_join(f, *jnode);
    PlanPtr l = jnode->children[0];
    PlanPtr r = jnode->children[1];
    if (!s.left.empty()) l = filter(conjoin(std::move(s.left)), l);
    if (!s.right.empty()) r = filter(conjoin(std::move(s.right)), r);
    PlanPtr out = join(jn.type, jn.condition, l, r);
    if (!s.keep.empty()) out = filter(conjoin(std::move(s.keep)), out);
    return out;
}

// Shared by rules 22 and 55: column/expression values pinned by equality
// filters in a subtree. Collection stops where pinned values no longer hold
// for every surviving row (right side of a LEFT join, union arms).
struct PinnedEq {
    ExprPtr expr;  // non-literal side
    ExprPtr lit;   // literal side
};

// Scans a predicate's top-level conjuncts for expr = literal equalities.
// `sources`, when given, records which conjunct produced each pin.
void pins_from_predicate(const ExprPtr& pred, std::vector<PinnedEq>& out,
                         std::vector<size_t>* sources = nullptr) {
    std::vector<ExprPtr> cs = conjuncts(pred);
    for (size_t i = 0; i < cs.size(); ++i) {
        const auto* cp = std::get_if<Comparison>(&cs[i]->node);
        if (!cp || cp->op != CmpOp::Eq) continue;
        const Literal* ll = as_literal(cp->lhs);
        const Literal* rl = as_literal(cp->rhs);
        if (rl && !rl->is_null && !ll && refs_all_qualified(cp->lhs)) {
            out.push_back({cp->lhs, cp->rhs});
            if (sources) sources->push_back(i);
        }
        if (ll && !ll->is_null && !rl && refs_all_qualified(cp->rhs)) {
            out.push_back({cp->rhs, cp->lhs});
            if (sources) sources->push_back(i);
        }
    }
}

void collect_pinned(const PlanPtr& p, std::vector<PinnedEq>& out) {
    std::visit(
        [&](const auto& op) {
            using T = std::decay_t<decltype(op)>;
            if constexpr (std::is_same_v<T, FilterOp>) {
                pins_from_predicate(op.predicate, out);
                collect_pinned(p->children[0], out);
            } else if constexpr (std::is_same_v<T, JoinOp>) {
                collect_pinned(p->children[0], out);
                if (op.type != JoinType::Left) collect_pinned(p->children[1], out);
            } else if constexpr (std::is_same_v<T, ProjectOp> || std::is_same_v<T, DistinctOp> ||
                                 std::is_same_v<T, SortOp> || std::is_same_v<T, LimitOp> ||
                                 std::is_same_v<T, AggregateOp>) {
                collect_pinned(p->children[0], out);
            }
            // Scan, Union: nothing / stop.
        },
        p->op);
}

// Rule 22. A projected column whose value is pinned by an equality filter
// below becomes the literal itself, cast back to the column's declared type.
std::optional<int> declared_len(const PlanPtr& tree, const ColumnRef& ref,
                                const SchemaMetadata& schema) {
    if (const auto* sc = std::get_if<ScanOp>(&tree->op)) {
        if (sc->alias == ref.table) {
            if (const TableInfo* t = schema.table(sc->table)) {
                if (const ColumnInfo* c = t->column(ref.column)) return c->varchar_len;
            }
        }
        return std::nullopt;
    }
    for (const auto& ch : tree->children) {
        if (auto len = declared_len(ch, ref, schema)) return len;
    }
    return std::nullopt;
}

const PinnedEq* find_pin_for(const std::vector<PinnedEq>& pins, const ColumnRef& ref) {
    for (const auto& pin : pins) {
        const auto* cr = std::get_if<ColumnRef>(&pin.expr->node);
        if (cr && cr->table == ref.table && cr->column == ref.column) return &pin;
    }
    return nullptr;
}

bool cond_pinned_to_literal(const PlanPtr& p, const SchemaMetadata&) {
    if (const auto* pr = std::get_if<ProjectOp>(&p->op)) {
        std::vector<PinnedEq> pins;
        collect_pinned(p->children[0], pins);
        if (pins.empty()) return false;
        for (const auto& it : pr->items) {
            const auto* cr = std::get_if<ColumnRef>(&it.expr->node);
            if (cr && !cr->table.empty() && find_pin_for(pins, *cr)) return true;
        }
        return false;
    }
    if (const auto* agg = std::get_if<AggregateOp>(&p->op)) {
        std::vector<PinnedEq> pins;
        collect_pinned(p->children[0], pins);
        if (pins.empty()) return false;
        for (const auto& k : agg->keys) {
            if (find_pin_for(pins, k)) return true;
        }
    }
    return false;
}

PlanPtr tf_pinned_to_literal(const PlanPtr& p, const SchemaMetadata& schema) {
    std::vector<PinnedEq> pins;
    collect_pinned(p->children[0], pins);
    if (const auto* pr = std::get_if<ProjectOp>(&p->op)) {
        std::vector<ProjItem> items;
        for (const auto& it : pr->items) {
            const auto* cr = std::get_if<ColumnRef>(&it.expr->node);
            const PinnedEq* pin = cr && !cr->table.empty() ? find_pin_for(pins, *cr) : nullptr;
            if (pin) {
                TypeSpec spec{cr->type, declared_len(p->children[0], *cr, schema)};
                items.push_back({cast(spec, pin->lit), it.alias});
            } else {
                items.push_back(it);
            }
        }
        return project(std::move(items), p->children[0]);
    }
    // Aggregate head: keep the grouping, add a projection that swaps pinned
    // keys for their literals.
    const auto& agg = std::get<AggregateOp>(p->op);
    Scope out_scope = plan_scope(p);
    std::vector<ProjItem> items;
    size_t i = 0;
    for (const auto& k : agg.keys) {
        if (const PinnedEq* pin = find_pin_for(pins, k)) {
            TypeSpec spec{k.type, declared_len(p->children[0], k, schema)};
            items.push_back({cast(spec, pin->lit), out_scope.cols[i].name});
        } else {
            items.push_back({col(k.table, k.column, k.type), out_scope.cols[i].name});
        }
        ++i;
    }
    for (; i < out_scope.cols.size(); ++i) {
        items.push_back({col("", out_scope.cols[i].name, out_scope.cols[i].type),
                         out_scope.cols[i].name});
    }
    return project(std::move(items), p);
}

// Rule 30. Split a conjunctive filter into stacked filters.
bool cond_split_filter(const PlanPtr& p, const SchemaMetadata&) {
    const auto* f = std::get_if<FilterOp>(&p->op);
    if (!f) return false;
    const auto* b = std::get_if<BoolExpr>(&f->predicate->node);
    return b && b->conn == BoolConn::And && b->operands.size() >= 2;
}

PlanPtr tf_split_filter(const PlanPtr& p, const SchemaMetadata&) {
    const auto& f = std::get<FilterOp>(p->op);
    auto parts = conjuncts(f.predicate);
    std::vector<ExprPtr> rest(parts.begin() + 1, parts.end());
    return filter(parts[0], filter(conjoin(std::move(rest)), p->children[0]));
}

// Rule 31. Merge stacked filters into one conjunction.
bool cond_merge_filters(const PlanPtr& p, const SchemaMetadata&) {
    return std::holds_alternative<FilterOp>(p->op) &&
           std::holds_alternative<FilterOp>(p->children[0]->op);
}

PlanPtr tf_merge_filters(const PlanPtr& p, const SchemaMetadata&) {
    const auto& f1 = std::get<FilterOp>(p->op);
    const auto& f2 = std::get<FilterOp>(p->children[0]->op);
    return filter(land({f1.predicate, f2.predicate}), p->children[0]->children[0]);
}

// Rule 40. Swap the inputs of an inner or cross join. A projection restoring
// the original column order is placed on top so the visible output is
// unchanged.
bool cond_commute_join(const PlanPtr& p, const SchemaMetadata&) {
    const auto* jn = std::get_if<JoinOp>(&p->op);
    if (!jn || jn->type == JoinType::Left) return false;
    // The restoring projection needs a stable identity for every column.
    for (const auto& c : plan_scope(p).cols) {
        if (c.src_alias.empty()) return false;
    }
    return true;
}

PlanPtr tf_commute_join(const PlanPtr& p, const SchemaMetadata&) {
    const auto& jn = std::get<JoinOp>(p->op);
    Scope orig = plan_scope(p);
    PlanPtr swapped = join(jn.type, jn.condition, p->children[1], p->children[0]);
    std::vector<ProjItem> items;
    std::set<std::string> names;
    for (const auto& c : orig.cols) {
        std::string alias = c.name;
        int suffix = 2;
        while (!names.insert(alias).second) alias = c.name + "_" + std::to_string(suffix++);
        items.push_back({col(c.src_alias, c.src_column, c.type), alias});
    }
    return project(std::move(items), swapped);
}

// Rule 41. Hoist a filter above a projection when the projection still
// exposes everything the predicate needs.
bool cond_pull_filter_above_project(const PlanPtr& p, const SchemaMetadata&) {
    const auto* pr = std::get_if<ProjectOp>(&p->op);
    if (!pr) return false;
    const auto* f = std::get_if<FilterOp>(&p->children[0]->op);
    if (!f) return false;
    Scope above = plan_scope(project(pr->items, p->children[0]->children[0]));
    std::vector<ColumnRef> refs;
    collect_refs(f->predicate, refs);
    if (refs.empty()) return false;
    for (const auto& r : refs) {
        if (r.table.empty() || !above.resolve(r)) return false;
    }
    return true;
}

PlanPtr tf_pull_filter_above_project(const PlanPtr& p, const SchemaMetadata&) {
    const auto& pr = std::get<ProjectOp>(p->op);
    const auto& f = std::get<FilterOp>(p->children[0]->op);
    return filter(f.predicate, project(pr.items, p->children[0]->children[0]));
}

// Rule 51. Sorting nothing is a no-op.
bool cond_drop_sort_on_empty(const PlanPtr& p, const SchemaMetadata&) {
    return std::holds_alternative<SortOp>(p->op) && provably_empty(p->children[0]);
}

PlanPtr tf_drop_sort_on_empty(const PlanPtr& p, const SchemaMetadata&) { return p->children[0]; }

// Rule 54. Constant folding inside filter predicates, honoring SQL
// three-valued logic and engine-visible arithmetic (truncating integer
// division, IEEE doubles). Anything whose folding engines disagree on
// (divide by zero, lossy casts) is left alone.
ExprPtr fold_expr(const ExprPtr& e, bool& changed);

std::optional<Literal> literal_of(const ExprPtr& e) {
    if (const Literal* l = as_literal(e)) return *l;
    return std::nullopt;
}

ExprPtr make_bool(bool v, bool& changed) {
    changed = true;
    return lit_bool(v);
}

ExprPtr fold_comparison(const Comparison& n, bool& changed) {
    ExprPtr lhs = fold_expr(n.lhs, changed);
    ExprPtr rhs = fold_expr(n.rhs, changed);
    auto ll = literal_of(lhs);
    auto rl = literal_of(rhs);
    if (!ll || !rl) return cmp(n.op, lhs, rhs);
    if (n.op == CmpOp::Like || n.op == CmpOp::NotLike) return cmp(n.op, lhs, rhs);

    if (n.op == CmpOp::IsDistinct || n.op == CmpOp::IsNotDistinct) {
        bool distinct;
        if (ll->is_null || rl->is_null) {
            distinct = !(ll->is_null && rl->is_null);
        } else if (expr_equal(lhs, rhs)) {
            distinct = false;
        } else {
            distinct = true;  // literal keys differ
        }
        return make_bool(n.op == CmpOp::IsDistinct ? distinct : !distinct, changed);
    }
    if (ll->is_null || rl->is_null) {
        changed = true;
        return lit_null(ValueType::Boolean);
    }
    int order = 0;
    bool comparable = true;
    auto num = [](const Literal& l) {
        return l.spec.type == ValueType::Integer ? static_cast<double>(l.int_v) : l.dbl_v;
    };
    bool l_num = ll->spec.type == ValueType::Integer || ll->spec.type == ValueType::Double;
    bool r_num = rl->spec.type == ValueType::Integer || rl->spec.type == ValueType::Double;
    if (l_num && r_num) {
        if (ll->spec.type == ValueType::Integer && rl->spec.type == ValueType::Integer) {
            order = ll->int_v < rl->int_v ? -1 : (ll->int_v == rl->int_v ? 0 : 1);
        } else {
            double a = num(*ll), b = num(*rl);
            order = a < b ? -1 : (a == b ? 0 : 1);
        }
    } else if (ll->spec.type == rl->spec.type &&
               (ll->spec.type == ValueType::String || ll->spec.type == ValueType::Datetime)) {
        order = ll->str_v < rl->str_v ? -1 : (ll->str_v == rl->str_v ? 0 : 1);
    } else if (ll->spec.type == ValueType::Boolean && rl->spec.type == ValueType::Boolean) {
        order = ll->bool_v == rl->bool_v ? 0 : (ll->bool_v ? 1 : -1);
    } else {
        comparable = false;
    }
    if (!comparable) return cmp(n.op, lhs, rhs);
    switch (n.op) {
        case CmpOp::Eq: return make_bool(order == 0, changed);
        case CmpOp::Ne: return make_bool(order != 0, changed);
        case CmpOp::Lt: return make_bool(order < 0, changed);
        case CmpOp::Le: return make_bool(order <= 0, changed);
        case CmpOp::Gt: return make_bool(order > 0, changed);
        case CmpOp::Ge: return make_bool(order >= 0, changed);
        default: return cmp(n.op, lhs, rhs);
    }
}

ExprPtr fold_arith(const ArithExpr& n, bool& changed) {
    ExprPtr lhs = fold_expr(n.lhs, changed);
    ExprPtr rhs = fold_expr(n.rhs, changed);
    auto ll = literal_of(lhs);
    auto rl = literal_of(rhs);
    auto rebuilt = [&] { return arith(n.op, lhs, rhs); };
    if (!ll || !rl) return rebuilt();
    bool l_num = ll->spec.type == ValueType::Integer || ll->spec.type == ValueType::Double;
    bool r_num = rl->spec.type == ValueType::Integer || rl->spec.type == ValueType::Double;
    if (!l_num || !r_num) return rebuilt();
    if (ll->is_null || rl->is_null) {
        changed = true;
        return lit_null(ll->spec.type == ValueType::Double || rl->spec.type == ValueType::Double
                            ? ValueType::Double
                            : ValueType::Integer);
    }
    if (ll->spec.type == ValueType::Integer && rl->spec.type == ValueType::Integer) {
        __int128 a = ll->int_v, b = rl->int_v, r = 0;
        switch (n.op) {
            case ArithOp::Add: r = a + b; break;
            case ArithOp::Sub: r = a - b; break;
            case ArithOp::Mul: r = a * b; break;
            case ArithOp::Div:
                if (b == 0) return rebuilt();
                r = a / b;  // truncates toward zero, as both engines do
                break;
        }
        if (r > INT64_MAX || r < INT64_MIN) return rebuilt();
        changed = true;
        return lit_int(static_cast<int64_t>(r));
    }
    auto num = [](const Literal& l) {
        return l.spec.type == ValueType::Integer ? static_cast<double>(l.int_v) : l.dbl_v;
    };
    double a = num(*ll), b = num(*rl), r = 0;
    switch (n.op) {
        case ArithOp::Add: r = a + b; break;
        case ArithOp::Sub: r = a - b; break;
        case ArithOp::Mul: r = a * b; break;
        case ArithOp::Div:
            if (b == 0.0) return rebuilt();
            r = a / b;
            break;
    }
    changed = true;
    return lit_dbl(r);
}

ExprPtr fold_expr(const ExprPtr& e, bool& changed) {
    return std::visit(
        [&](const auto& n) -> ExprPtr {
            using T = std::decay_t<decltype(n)>;
            if constexpr (std::is_same_v<T, Comparison>) {
                return fold_comparison(n, changed);
            } else if constexpr (std::is_same_v<T, ArithExpr>) {
                return fold_arith(n, changed);
            } else if constexpr (std::is_same_v<T, BoolExpr>) {
                std::vector<ExprPtr> ops;
                bool shorted = false;
                ExprPtr short_val;
                for (const auto& raw : n.operands) {
                    ExprPtr op = fold_expr(raw, changed);
                    if (const Literal* l = as_literal(op);
                        l && l->spec.type == ValueType::Boolean && !l->is_null) {
                        bool absorbing = n.conn == BoolConn::And ? !l->bool_v : l->bool_v;
                        if (absorbing) {
                            shorted = true;
                            short_val = op;
                            break;
                        }
                        changed = true;  // neutral operand dropped
                        continue;
                    }
                    ops.push_back(op);
                }
                if (shorted) {
                    changed = true;
                    return short_val;
                }
                if (ops.empty()) {
                    changed = true;
                    return lit_bool(n.conn == BoolConn::And);
                }
                if (ops.size() == 1) {
                    changed = true;
                    return ops[0];
                }
                return std::make_shared<Expr>(Expr{BoolExpr{n.conn, std::move(ops)}});
            } else if constexpr (std::is_same_v<T, NotExpr>) {
                ExprPtr op = fold_expr(n.operand, changed);
                if (const Literal* l = as_literal(op)) {
                    if (l->spec.type == ValueType::Boolean) {
                        changed = true;
                        if (l->is_null) return lit_null(ValueType::Boolean);
                        return lit_bool(!l->bool_v);
                    }
                }
                return negate(op);
            } else if constexpr (std::is_same_v<T, IsTest>) {
                ExprPtr op = fold_expr(n.operand, changed);
                if (const Literal* l = as_literal(op)) {
                    bool is_null = l->is_null;
                    bool is_bool = l->spec.type == ValueType::Boolean;
                    switch (n.op) {
                        case IsOp::IsNull: return make_bool(is_null, changed);
                        case IsOp::IsNotNull: return make_bool(!is_null, changed);
                        case IsOp::IsTrue:
                            if (is_null || is_bool) return make_bool(!is_null && l->bool_v, changed);
                            break;
                        case IsOp::IsFalse:
                            if (is_null || is_bool)
                                return make_bool(!is_null && !l->bool_v, changed);
                            break;
                    }
                }
                return is_test(n.op, op);
            } else if constexpr (std::is_same_v<T, CastExpr>) {
                ExprPtr arg = fold_expr(n.arg, changed);
                if (const Literal* l = as_literal(arg); l && !l->is_null) {
                    ValueType from = l->spec.type, to = n.to.type;
                    if (from == to) {
                        if (from == ValueType::String && n.to.varchar_len &&
                            l->str_v.size() > static_cast<size_t>(*n.to.varchar_len))
                            return cast(n.to, arg);  // engines disagree on truncation
                        changed = true;
                        return arg;
                    }
                    if (from == ValueType::Integer && to == ValueType::Double) {
                        changed = true;
                        return lit_dbl(static_cast<double>(l->int_v));
                    }
                }
                return cast(n.to, arg);
            } else if constexpr (std::is_same_v<T, ExtractExpr>) {
                ExprPtr arg = fold_expr(n.arg, changed);
                if (const Literal* l = as_literal(arg);
                    l && !l->is_null && l->spec.type == ValueType::Datetime &&
                    l->str_v.size() >= 10) {
                    int pos = n.field == ExtractField::Year ? 0
                              : n.field == ExtractField::Month ? 5
                                                               : 8;
                    int len = n.field == ExtractField::Year ? 4 : 2;
                    changed = true;
                    return lit_int(std::stoll(l->str_v.substr(pos, len)));
                }
                return extract(n.field, arg);
            } else {
                return e;
            }
        },
        e->node);
}

bool cond_fold_constants(const PlanPtr& p, const SchemaMetadata&) {
    const auto* f = std::get_if<FilterOp>(&p->op);
    if (!f) return false;
    bool changed = false;
    fold_expr(f->predicate, changed);
    return changed;
}

PlanPtr tf_fold_constants(const PlanPtr& p, const SchemaMetadata&) {
    const auto& f = std::get<FilterOp>(p->op);
    bool changed = false;
    return filter(fold_expr(f.predicate, changed), p->children[0]);
}

// Rule 55. An equality filter below pins an expression to a constant for
// every surviving row; occurrences of that expression in predicates above
// can be replaced by the constant.
std::vector<PinnedEq> pins_for_site(const PlanPtr& p) {
    std::vector<PinnedEq> pins;
    if (std::holds_alternative<FilterOp>(p->op)) {
        collect_pinned(p->children[0], pins);
    } else if (const auto* jn = std::get_if<JoinOp>(&p->op); jn && jn->condition) {
        // The join condition is evaluated on real row pairs before any null
        // extension, so equalities from either input apply.
        collect_pinned(p->children[0], pins);
        collect_pinned(p->children[1], pins);
    }
    return pins;
}

ExprPtr substitute_pins(const ExprPtr& pred, const std::vector<PinnedEq>& pins, bool& changed) {
    ExprPtr out = pred;
    for (const auto& pin : pins) {
        out = substitute_expr(out, pin.expr, pin.lit, changed);
    }
    return out;
}

// Rewrites a site predicate using pins from below the site plus pins from
// its own conjuncts. Conjuncts that produced a pin are left untouched: as
// long as the pinning equality survives verbatim, replacing the pinned
// expression elsewhere cannot change which rows the predicate accepts.
ExprPtr substitute_site_predicate(const ExprPtr& pred, const std::vector<PinnedEq>& below,
                                  bool& changed) {
    std::vector<PinnedEq> own;
    std::vector<size_t> sources;
    pins_from_predicate(pred, own, &sources);
    std::vector<ExprPtr> cs = conjuncts(pred);
    std::vector<ExprPtr> out;
    out.reserve(cs.size());
    for (size_t i = 0; i < cs.size(); ++i) {
        bool is_source = std::find(sources.begin(), sources.end(), i) != sources.end();
        ExprPtr c = substitute_pins(cs[i], below, changed);
        if (!is_source) c = substitute_pins(c, own, changed);
        out.push_back(c);
    }
    return conjoin(std::move(out));
}

bool cond_substitute_constants(const PlanPtr& p, const SchemaMetadata&) {
    std::vector<PinnedEq> pins = pins_for_site(p);
    bool changed = false;
    if (const auto* f = std::get_if<FilterOp>(&p->op)) {
        substitute_site_predicate(f->predicate, pins, changed);
    } else if (const auto* jn = std::get_if<JoinOp>(&p->op); jn && jn->condition) {
        substitute_site_predicate(jn->condition, pins, changed);
    }
    return changed;
}

PlanPtr tf_substitute_constants(const PlanPtr& p, const SchemaMetadata&) {
    std::vector<PinnedEq> pins = pins_for_site(p);
    bool changed = false;
    if (const auto* f = std::get_if<FilterOp>(&p->op)) {
        return filter(substitute_site_predicate(f->predicate, pins, changed), p->children[0]);
    }
    const auto& jn = std::get<JoinOp>(p->op);
    return join(jn.type, substitute_site_predicate(jn.condition, pins, changed), p->children[0],
                p->children[1]);
}

// Rule 59. A LIMIT over a LEFT join also bounds the left input: every left
// row yields at least one output row, so a copy of the LIMIT can sit below.
bool cond_copy_limit_below_left_join(const PlanPtr& p, const SchemaMetadata&) {
    const auto* lim = std::get_if<LimitOp>(&p->op);
    if (!lim) return false;
    const auto* jn = std::get_if<JoinOp>(&p->children[0]->op);
    return jn && jn->type == JoinType::Left;
}

PlanPtr tf_copy_limit_below_left_join(const PlanPtr& p, const SchemaMetadata&) {
    const auto& lim = std::get<LimitOp>(p->op);
    const PlanPtr& jnode = p->children[0];
    const auto& jn = std::get<JoinOp>(jnode->op);
    PlanPtr bounded = limit(lim.count, jnode->children[0]);
    return limit(lim.count, join(jn.type, jn.condition, bounded, jnode->children[1]));
}

// Rule 60. LIMIT 0 produces nothing, as does filtering on FALSE.
bool cond_limit_zero_to_false(const PlanPtr& p, const SchemaMetadata&) {
    const auto* lim = std::get_if<LimitOp>(&p->op);
    return lim && lim->count == 0;
}

PlanPtr tf_limit_zero_to_false(const PlanPtr& p, const SchemaMetadata&) {
    return filter(lit_bool(false), p->children[0]);
}

// Rule 61. Deduplication is a no-op when a unique, non-nullable column
// already makes every row distinct. Likewise a pure GROUP BY over such a key
// is just a projection.
bool cond_drop_redundant_distinct(const PlanPtr& p, const SchemaMetadata&) {
    if (std::holds_alternative<DistinctOp>(p->op)) {
        Scope s = plan_scope(p->children[0]);
        for (const auto& c : s.cols) {
            if (c.unique && !c.nullable) return true;
        }
        return false;
    }
    if (const auto* agg = std::get_if<AggregateOp>(&p->op)) {
        if (agg->keys.empty() || !agg->aggs.empty()) return false;
        Scope s = plan_scope(p->children[0]);
        for (const auto& k : agg->keys) {
            const ScopeColumn* c = s.resolve(k);
            if (c && c->unique && !c->nullable) return true;
        }
    }
    return false;
}

PlanPtr tf_drop_redundant_distinct(const PlanPtr& p, const SchemaMetadata&) {
    if (std::holds_alternative<DistinctOp>(p->op)) return p->children[0];
    const auto& agg = std::get<AggregateOp>(p->op);
    std::vector<ProjItem> items;
    for (const auto& k : agg.keys) items.push_back({col(k.table, k.column, k.type), k.column});
    return project(std::move(items), p->children[0]);
}

// Rule 62. A union arm that provably yields nothing can be dropped. UNION
// (distinct) still owes a dedup of the surviving arm.
bool cond_prune_empty_union_arm(const PlanPtr& p, const SchemaMetadata&) {
    const auto* un = std::get_if<UnionOp>(&p->op);
    if (!un) return false;
    if (provably_empty(p->children[1])) return true;
    if (provably_empty(p->children[0])) {
        // Output names come from the left arm; only prune it when the right
        // arm exposes the same names.
        Scope l = plan_scope(p->children[0]);
        Scope r = plan_scope(p->children[1]);
        if (l.cols.size() != r.cols.size()) return false;
        for (size_t i = 0; i < l.cols.size(); ++i) {
            if (l.cols[i].name != r.cols[i].name) return false;
        }
        return true;
    }
    return false;
}

PlanPtr tf_prune_empty_union_arm(const PlanPtr& p, const SchemaMetadata&) {
    const auto& un = std::get<UnionOp>(p->op);
    PlanPtr kept = provably_empty(p->children[1]) ? p->children[0] : p->children[1];
    return un.all ? kept : distinct(kept);
}

// Rule 63. `x IS TRUE` equals `x` (and `x IS FALSE` equals `NOT x`) when x
// cannot be NULL. Without that guarantee the rewrite changes how NULL rows
// project, so the condition demands provable non-nullness.
ExprPtr rewrite_is_true(const ExprPtr& e, const Scope& scope, bool& changed) {
    return std::visit(
        [&](const auto& n) -> ExprPtr {
            using T = std::decay_t<decltype(n)>;
            if constexpr (std::is_same_v<T, IsTest>) {
                ExprPtr op = rewrite_is_true(n.operand, scope, changed);
                if ((n.op == IsOp::IsTrue || n.op == IsOp::IsFalse) &&
                    expr_type(op) == ValueType::Boolean && provably_non_null(op, scope)) {
                    changed = true;
                    return n.op == IsOp::IsTrue ? op : negate(op);
                }
                return is_test(n.op, op);
            } else if constexpr (std::is_same_v<T, BoolExpr>) {
                std::vector<ExprPtr> ops;
                for (const auto& op : n.operands)
                    ops.push_back(rewrite_is_true(op, scope, changed));
                return std::make_shared<Expr>(Expr{BoolExpr{n.conn, std::move(ops)}});
            } else if constexpr (std::is_same_v<T, NotExpr>) {
                return negate(rewrite_is_true(n.operand, scope, changed));
            } else if constexpr (std::is_same_v<T, Comparison>) {
                return cmp(n.op, rewrite_is_true(n.lhs, scope, changed),
                           rewrite_is_true(n.rhs, scope, changed));
            } else {
                return e;
            }
        },
        e->node);
}

Scope site_scope(const PlanPtr& p) {
    if (std::holds_alternative<JoinOp>(p->op)) {
        Scope l = plan_scope(p->children[0]);
        Scope r = plan_scope(p->children[1]);
        l.cols.insert(l.cols.end(), r.cols.begin(), r.cols.end());
        return l;
    }
    return plan_scope(p->children[0]);
}

bool cond_drop_is_true(const PlanPtr& p, const SchemaMetadata&) {
    bool changed = false;
    if (const auto* f = std::get_if<FilterOp>(&p->op)) {
        rewrite_is_true(f->predicate, site_scope(p), changed);
    } else if (const auto* jn = std::get_if<JoinOp>(&p->op); jn && jn->condition) {
        rewrite_is_true(jn->condition, site_scope(p), changed);
    }
    return changed;
}

PlanPtr tf_drop_is_true(const PlanPtr& p, const SchemaMetadata&) {
    bool changed = false;
    if (const auto* f = std::get_if<FilterOp>(&p->op)) {
        return filter(rewrite_is_true(f->predicate, site_scope(p), changed), p->children[0]);
    }
    const auto& jn = std::get<JoinOp>(p->op);
    return join(jn.type, rewrite_is_true(jn.condition, site_scope(p), changed), p->children[0],
                p->children[1]);
}

std::vector<MutationRule> make_catalog() {
    std::vector<MutationRule> rules;
    auto add = [&](int id, const char* name, const char* summary, bool expr_rule,
                   auto cond, auto tf) {
        MutationRule r;
        r.id = id;
        r.name = name;
        r.summary = summary;
        r.expression_rule = expr_rule;
        r.condition = cond;
        r.transform = tf;
        rules.push_back(std::move(r));
    };
    add(0, "push-group-through-join",
        "push an aggregate-free grouping below an inner/cross join", false,
        cond_push_group_through_join, tf_push_group_through_join);
    add(13, "push-filter-through-group-by",
        "move a filter on grouping keys below the GROUP BY", false,
        cond_push_filter_through_group, tf_push_filter_through_group);
    add(15, "extract-year-to-range",
        "turn EXTRACT(YEAR) comparisons into timestamp range tests", true,
        cond_extract_to_range, tf_extract_to_range);
    add(16, "push-filter-through-join",
        "move single-side filter conjuncts below the join", false,
        cond_push_filter_through_join, tf_push_filter_through_join);
    add(22, "pinned-column-to-literal",
        "replace a projected column with the literal an equality filter pins it to", false,
        cond_pinned_to_literal, tf_pinned_to_literal);
    rules.back().context_sensitive = true;
    add(30, "split-conjunctive-filter", "split AND filters into stacked filters", false,
        cond_split_filter, tf_split_filter);
    add(31, "merge-stacked-filters", "merge stacked filters into one conjunction", false,
        cond_merge_filters, tf_merge_filters);
    add(40, "commute-join", "swap inner/cross join inputs, preserving output order", false,
        cond_commute_join, tf_commute_join);
    add(41, "pull-filter-above-project", "hoist a filter above a projection", false,
        cond_pull_filter_above_project, tf_pull_filter_above_project);
    add(51, "drop-sort-on-empty", "remove ORDER BY over provably empty input", false,
        cond_drop_sort_on_empty, tf_drop_sort_on_empty);
    add(54, "fold-constant-expressions", "fold literal-only subexpressions in filters", true,
        cond_fold_constants, tf_fold_constants);
    add(55, "substitute-pinned-constants",
        "replace expressions with constants pinned by equality filters below", true,
        cond_substitute_constants, tf_substitute_constants);
    add(59, "copy-limit-below-left-join", "copy a LIMIT below a LEFT join's left input", false,
        cond_copy_limit_below_left_join, tf_copy_limit_below_left_join);
    add(60, "limit-zero-to-false-filter", "turn LIMIT 0 into a FALSE filter", false,
        cond_limit_zero_to_false, tf_limit_zero_to_false);
    add(61, "drop-redundant-distinct",
        "drop DISTINCT/GROUP BY made redundant by a unique non-null column", false,
        cond_drop_redundant_distinct, tf_drop_redundant_distinct);
    add(62, "prune-empty-union-arm", "drop a provably empty union arm", false,
        cond_prune_empty_union_arm, tf_prune_empty_union_arm);
    add(63, "drop-is-true-on-non-null",
        "strip IS TRUE/IS FALSE from provably non-null boolean expressions", true,
        cond_drop_is_true, tf_drop_is_true);
    return rules;
}

struct Applier {
    const MutationRule& rule;
    const SchemaMetadata& schema;
    bool fired = false;
    const std::set<const PlanNode*>* skip = nullptr;
    const PlanNode* fired_site = nullptr;

    // Structure rules: first matching node, top-down, one site.
    PlanPtr first_site(const PlanPtr& p) {
        if ((!skip || !skip->count(p.get())) && rule.condition(p, schema)) {
            fired = true;
            fired_site = p.get();
            return rule.transform(p, schema);
        }
        std::vector<PlanPtr> ch;
        bool any = false;
        for (const auto& c : p->children) {
            PlanPtr nc = fired ? c : first_site(c);
            any = any || nc != c;
            ch.push_back(nc);
        }
        return any ? with_children(p, std::move(ch)) : p;
    }

    // Expression rules: every matching node, bottom-up.
    PlanPtr all_sites(const PlanPtr& p) {
        std::vector<PlanPtr> ch;
        bool any = false;
        for (const auto& c : p->children) {
            PlanPtr nc = all_sites(c);
            any = any || nc != c;
            ch.push_back(nc);
        }
        PlanPtr cur = any ? with_children(p, std::move(ch)) : p;
        if (rule.condition(cur, schema)) {
            fired = true;
            cur = rule.transform(cur, schema);
        }
        return cur;
    }
};

}  // namespace

const std::vector<MutationRule>& rule_catalog() {
    static const std::vector<MutationRule> catalog = make_catalog();
    return catalog;
}

const MutationRule* find_rule(int id) {
    for (const auto& r : rule_catalog())
        if (r.id == id) return &r;
    return nullptr;
}

std::optional<PlanPtr> apply_rule(const PlanPtr& plan, const MutationRule& rule,
                                  const SchemaMetadata& schema) {
    std::set<const PlanNode*> rejected;
    for (;;) {
        Applier a{rule, schema};
        a.skip = &rejected;
        PlanPtr out = rule.expression_rule ? a.all_sites(plan) : a.first_site(plan);
        if (!a.fired) return std::nullopt;
        TypeCheckResult check = type_check(LogicalPlan{out}, schema);
        if (check.ok) return out;
        if (rule.context_sensitive && !rule.expression_rule && a.fired_site) {
            rejected.insert(a.fired_site);
            continue;
        }
        std::string msg = "rule " + std::to_string(rule.id) + " (" + rule.name +
                          ") produced an invalid plan: " + join(check.diagnostics, "; ");
        throw Error(ErrorKind::RuleProducedInvalidPlan, msg);
    }
}

}  // namespace eqperf
