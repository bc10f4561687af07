#include "eqperf/mutator.hpp"

#include <functional>
#include <set>

#include "eqperf/common.hpp"
#include "eqperf/typecheck.hpp"

namespace eqperf {

Mutant mutate_tree(const PlanPtr& origin, const std::vector<const MutationRule*>& order,
                   const SchemaMetadata& schema) {
    Mutant m{origin, {}};
    for (const MutationRule* rule : order) {
        if (auto next = apply_rule(m.plan, *rule, schema)) {
            m.plan = *next;
            m.fired_rule_ids.push_back(rule->id);
        }
    }
    return m;
}

std::vector<Mutant> mutate_query(const PlanPtr& origin, const SchemaMetadata& schema, Rng& rng,
                                 const MutatorParams& params) {
    std::vector<const MutationRule*> order;
    for (const auto& r : rule_catalog()) order.push_back(&r);

    std::set<uint64_t> seen{plan_content_hash(origin)};
    std::vector<Mutant> out;
    for (int attempt = 0; attempt < params.attempts; ++attempt) {
        rng.shuffle(order);
        Mutant m = mutate_tree(origin, order, schema);
        if (m.fired_rule_ids.empty()) continue;
        if (!seen.insert(plan_content_hash(m.plan)).second) continue;
        out.push_back(std::move(m));
    }
    return out;
}

namespace {

using namespace build;
using NodeOp = decltype(PlanNode::op);

ExprPtr rename_refs(const ExprPtr& e, const std::string& suffix);

std::vector<ExprPtr> rename_all(const std::vector<ExprPtr>& es, const std::string& suffix) {
    std::vector<ExprPtr> out;
    for (const auto& e : es) out.push_back(rename_refs(e, suffix));
    return out;
}

ExprPtr rename_refs(const ExprPtr& e, const std::string& suffix) {
    if (!e) return e;
    return std::visit(
        [&](const auto& n) -> ExprPtr {
            using T = std::decay_t<decltype(n)>;
            if constexpr (std::is_same_v<T, ColumnRef>) {
                if (n.table.empty()) return e;
                return col(n.table + suffix, n.column, n.type);
            } else if constexpr (std::is_same_v<T, Comparison>) {
                return cmp(n.op, rename_refs(n.lhs, suffix), rename_refs(n.rhs, suffix));
            } else if constexpr (std::is_same_v<T, IsTest>) {
                return is_test(n.op, rename_refs(n.operand, suffix));
            } else if constexpr (std::is_same_v<T, BoolExpr>) {
                return std::make_shared<Expr>(Expr{BoolExpr{n.conn, rename_all(n.operands, suffix)}});
            } else if constexpr (std::is_same_v<T, NotExpr>) {
                return negate(rename_refs(n.operand, suffix));
            } else if constexpr (std::is_same_v<T, ArithExpr>) {
                return arith(n.op, rename_refs(n.lhs, suffix), rename_refs(n.rhs, suffix));
            } else if constexpr (std::is_same_v<T, ExtractExpr>) {
                return extract(n.field, rename_refs(n.arg, suffix));
            } else if constexpr (std::is_same_v<T, CastExpr>) {
                return cast(n.to, rename_refs(n.arg, suffix));
            } else if constexpr (std::is_same_v<T, AggCall>) {
                if (n.star) return e;
                return std::make_shared<Expr>(Expr{AggCall{n.fn, rename_refs(n.arg, suffix), false}});
            } else {
                return e;
            }
        },
        e->node);
}

// Appends `suffix` to every scan alias and qualified reference so a cloned
// branch can coexist with the original in one statement.
PlanPtr rename_aliases(const PlanPtr& p, const std::string& suffix) {
    std::vector<PlanPtr> ch;
    for (const auto& c : p->children) ch.push_back(rename_aliases(c, suffix));
    NodeOp op = std::visit(
        [&](const auto& n) -> NodeOp {
            using T = std::decay_t<decltype(n)>;
            if constexpr (std::is_same_v<T, ScanOp>) {
                ScanOp s = n;
                s.alias += suffix;
                return s;
            } else if constexpr (std::is_same_v<T, FilterOp>) {
                return FilterOp{rename_refs(n.predicate, suffix)};
            } else if constexpr (std::is_same_v<T, ProjectOp>) {
                ProjectOp pr = n;
                for (auto& it : pr.items) it.expr = rename_refs(it.expr, suffix);
                return pr;
            } else if constexpr (std::is_same_v<T, JoinOp>) {
                return JoinOp{n.type, rename_refs(n.condition, suffix)};
            } else if constexpr (std::is_same_v<T, AggregateOp>) {
                AggregateOp a = n;
                for (auto& k : a.keys)
                    if (!k.table.empty()) k.table += suffix;
                for (auto& ag : a.aggs)
                    if (!ag.call.star) ag.call.arg = rename_refs(ag.call.arg, suffix);
                return a;
            } else if constexpr (std::is_same_v<T, SortOp>) {
                SortOp s = n;
                for (auto& k : s.keys) k.expr = rename_refs(k.expr, suffix);
                return s;
            } else {
                return n;
            }
        },
        p->op);
    return std::make_shared<PlanNode>(PlanNode{std::move(op), std::move(ch)});
}

}  // namespace

Mutant ternary_partition(const PlanPtr& origin, const SchemaMetadata& schema) {
    // Locate the topmost filter, tolerating only projections and one dedup
    // on the way down.
    std::vector<PlanPtr> path;
    PlanPtr cur = origin;
    bool saw_distinct = false;
    const FilterOp* target = nullptr;
    while (true) {
        if (const auto* f = std::get_if<FilterOp>(&cur->op)) {
            target = f;
            break;
        }
        if (std::holds_alternative<ProjectOp>(cur->op)) {
            path.push_back(cur);
            cur = cur->children[0];
            continue;
        }
        if (std::holds_alternative<DistinctOp>(cur->op) && !saw_distinct) {
            saw_distinct = true;
            path.push_back(cur);
            cur = cur->children[0];
            continue;
        }
        throw Error(ErrorKind::NotPartitionable,
                    "no filter reachable under projections only; cannot partition");
    }

    ExprPtr p = target->predicate;
    auto make_branch = [&](const ExprPtr& pred) {
        PlanPtr branch = filter(pred, cur->children[0]);
        for (auto it = path.rbegin(); it != path.rend(); ++it) {
            if (std::holds_alternative<DistinctOp>((*it)->op)) continue;  // union dedups instead
            const auto& pr = std::get<ProjectOp>((*it)->op);
            branch = project(pr.items, branch);
        }
        return branch;
    };

    PlanPtr b1 = make_branch(p);
    PlanPtr b2 = rename_aliases(make_branch(negate(p)), "_t2");
    PlanPtr b3 = rename_aliases(make_branch(is_test(IsOp::IsNull, p)), "_t3");
    bool all = !saw_distinct;
    PlanPtr merged = set_union(all, set_union(all, b1, b2), b3);

    TypeCheckResult check = type_check(LogicalPlan{merged}, schema);
    if (!check.ok) {
        throw Error(ErrorKind::NotPartitionable,
                    "partitioned plan does not validate: " + join(check.diagnostics, "; "));
    }
    return Mutant{merged, {kTernaryPartitionRuleId}};
}

}  // namespace eqperf
