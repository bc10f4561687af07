#include "eqperf/generator.hpp"

#include <algorithm>
#include <cassert>

#include "eqperf/common.hpp"
#include "eqperf/typecheck.hpp"

namespace eqperf {

namespace {

using namespace build;

struct Builder {
    const SchemaMetadata& schema;
    const SampleSet& samples;
    const ProbabilityTable& prob;
    Rng& rng;
    const GenParams& params;

    std::map<std::string, int> alias_use;            // table -> times used
    std::vector<std::pair<std::string, std::string>> alias_tables;  // alias -> table

    std::string fresh_alias(const std::string& table) {
        int n = ++alias_use[table];
        std::string alias = n == 1 ? table : table + std::to_string(n);
        alias_tables.emplace_back(alias, table);
        return alias;
    }

    std::string table_of(const std::string& alias) const {
        for (const auto& [a, t] : alias_tables)
            if (a == alias) return t;
        return "";
    }

    const TableInfo& pick_table() {
        assert(!schema.tables.empty());
        return schema.tables[rng.below(schema.tables.size())];
    }

    PlanPtr make_scan() {
        const TableInfo& t = pick_table();
        return scan(schema, t.name, fresh_alias(t.name));
    }

    ExprPtr scope_ref(const ScopeColumn& c) {
        if (!c.src_alias.empty()) return col(c.src_alias, c.src_column, c.type);
        return col("", c.name, c.type);
    }

    // ---- literals --------------------------------------------------------

    ExprPtr sampled_literal(const ScopeColumn& c) {
        if (!c.src_alias.empty()) {
            const ColumnSamples* cs = samples.find(table_of(c.src_alias), c.src_column);
            if (cs && !cs->values.empty()) {
                const Value& v = rng.pick(cs->values);
                if (const auto* i = std::get_if<int64_t>(&v)) return lit_int(*i);
                if (const auto* d = std::get_if<double>(&v)) return lit_dbl(*d);
                if (const auto* s = std::get_if<std::string>(&v)) {
                    if (c.type == ValueType::Datetime) return lit_dt(*s);
                    return lit_str(*s);
                }
            }
        }
        return synth_literal(c.type);
    }

    ExprPtr synth_literal(ValueType t) {
        switch (t) {
            case ValueType::Integer: return lit_int(rng.range_i(0, 1000));
            case ValueType::Double: return lit_dbl(static_cast<double>(rng.range_i(0, 16000)) * 0.25);
            case ValueType::String: {
                std::string s(1, static_cast<char>('a' + rng.below(26)));
                return lit_str(s);
            }
            case ValueType::Datetime: {
                char buf[32];
                std::snprintf(buf, sizeof(buf), "%04d-%02d-%02d 00:00:00",
                              static_cast<int>(rng.range_i(2015, 2023)),
                              static_cast<int>(rng.range_i(1, 12)),
                              static_cast<int>(rng.range_i(1, 28)));
                return lit_dt(buf);
            }
            case ValueType::Boolean: return lit_bool(rng.chance(0.5));
        }
        return lit_int(0);
    }

    // ---- FROM ------------------------------------------------------------

    PlanPtr build_from() {
        std::string alt = prob.sample("table_ref", rng);
        PlanPtr cur = make_scan();
        int joins = 0;
        while (alt != "table_simple" && joins < params.max_join_depth) {
            JoinType jt = alt == "join_left"    ? JoinType::Left
                          : alt == "join_cross" ? JoinType::Cross
                                                : JoinType::Inner;
            PlanPtr right = make_scan();
            ExprPtr cond;
            if (jt != JoinType::Cross) {
                if (prob.sample("join_cond", rng) == "bool_expr")
                    cond = join_condition(cur, right);
                if (!cond) cond = lit_bool(true);
            }
            cur = join(jt, cond, cur, right);
            ++joins;
            alt = prob.sample("table_ref", rng);
        }
        return cur;
    }

    ExprPtr join_condition(const PlanPtr& left, const PlanPtr& right) {
        Scope ls = plan_scope(left), rs = plan_scope(right);
        std::vector<std::pair<const ScopeColumn*, const ScopeColumn*>> compat;
        for (const auto& lc : ls.cols) {
            if (lc.type == ValueType::Boolean) continue;
            for (const auto& rc : rs.cols) {
                if (lc.type == rc.type) compat.push_back({&lc, &rc});
            }
        }
        if (compat.empty()) return nullptr;
        auto [lc, rc] = compat[rng.below(compat.size())];
        return cmp(CmpOp::Eq, scope_ref(*lc), scope_ref(*rc));
    }

    // ---- WHERE -----------------------------------------------------------

    ExprPtr build_predicate(const Scope& scope) {
        std::string conn_alt = prob.sample("bool_conn", rng);
        int n = conn_alt == "single" ? 1 : 2;
        std::vector<ExprPtr> parts;
        for (int i = 0; i < n; ++i) {
            ExprPtr p = build_simple_predicate(scope);
            if (p) parts.push_back(p);
        }
        if (parts.empty()) return nullptr;
        if (parts.size() == 1) return parts[0];
        return conn(conn_alt == "or" ? BoolConn::Or : BoolConn::And, std::move(parts));
    }

    ExprPtr build_simple_predicate(const Scope& scope) {
        if (scope.cols.empty()) return nullptr;
        const ScopeColumn& c = scope.cols[rng.below(scope.cols.size())];
        std::string kind = prob.sample("predicate", rng);
        if (kind == "like") {
            if (c.type != ValueType::String) kind = "cmp";
        }
        if (kind == "is_test") {
            return is_test(rng.chance(0.5) ? IsOp::IsNull : IsOp::IsNotNull, scope_ref(c));
        }
        if (kind == "like") {
            std::string prefix;
            ExprPtr lit = sampled_literal(c);
            if (const auto* l = std::get_if<Literal>(&lit->node);
                l && !l->is_null && !l->str_v.empty()) {
                prefix = l->str_v.substr(0, 1 + rng.below(std::min<size_t>(3, l->str_v.size())));
            } else {
                prefix = std::string(1, static_cast<char>('A' + rng.below(26)));
            }
            return cmp(rng.chance(0.8) ? CmpOp::Like : CmpOp::NotLike, scope_ref(c),
                       lit_str(prefix + "%"));
        }
        if (c.type == ValueType::Boolean) {
            return is_test(rng.chance(0.5) ? IsOp::IsTrue : IsOp::IsFalse, scope_ref(c));
        }
        // comparison, optionally through a scalar wrapper
        CmpOp op = sample_cmp_op();
        std::string scalar = prob.sample("scalar", rng);
        if (scalar == "extract" && c.type == ValueType::Datetime) {
            return cmp(op, extract(ExtractField::Year, scope_ref(c)),
                       lit_int(rng.range_i(2015, 2023)));
        }
        ExprPtr lhs = scope_ref(c);
        if (scalar == "arith" &&
            (c.type == ValueType::Integer || c.type == ValueType::Double)) {
            lhs = arith(rng.chance(0.5) ? ArithOp::Add : ArithOp::Sub, lhs,
                        lit_int(rng.range_i(1, 50)));
        }
        if (prob.sample("cmp_rhs", rng) == "column") {
            std::vector<const ScopeColumn*> others;
            for (const auto& o : scope.cols) {
                if (&o != &c && o.type == c.type) others.push_back(&o);
            }
            if (!others.empty() && scalar != "arith") {
                return cmp(op, lhs, scope_ref(*others[rng.below(others.size())]));
            }
        }
        ExprPtr rhs = sampled_literal(c);
        if (scalar == "arith" && expr_type(lhs) == ValueType::Double &&
            expr_type(rhs) == ValueType::Integer) {
            // keep both sides numeric, nothing to fix
        }
        return cmp(op, lhs, rhs);
    }

    CmpOp sample_cmp_op() {
        std::string alt = prob.sample("cmp_op", rng);
        if (alt == "eq") return CmpOp::Eq;
        if (alt == "ne") return CmpOp::Ne;
        if (alt == "lt") return CmpOp::Lt;
        if (alt == "le") return CmpOp::Le;
        if (alt == "gt") return CmpOp::Gt;
        return CmpOp::Ge;
    }

    // ---- upper structure ---------------------------------------------------

    PlanPtr build_body(bool allow_aggregate) {
        PlanPtr plan = build_from();
        if (prob.sample("where", rng) == "yes") {
            ExprPtr pred = build_predicate(plan_scope(plan));
            if (pred) plan = filter(pred, plan);
        }
        Scope scope = plan_scope(plan);
        if (allow_aggregate && prob.sample("group_by", rng) == "yes") {
            return build_aggregate(plan, scope);
        }
        plan = build_projection(plan, scope);
        if (prob.sample("distinct", rng) == "yes") plan = distinct(plan);
        return plan;
    }

    PlanPtr build_aggregate(PlanPtr plan, const Scope& scope) {
        int nkeys = static_cast<int>(rng.range_i(1, params.max_group_keys));
        std::vector<size_t> idx(scope.cols.size());
        for (size_t i = 0; i < idx.size(); ++i) idx[i] = i;
        rng.shuffle(idx);
        std::vector<ColumnRef> keys;
        std::set<std::string> names;
        for (size_t i = 0; i < idx.size() && static_cast<int>(keys.size()) < nkeys; ++i) {
            const ScopeColumn& c = scope.cols[idx[i]];
            if (c.src_alias.empty()) continue;
            if (!names.insert(c.src_column).second) continue;  // output names must differ
            keys.push_back({c.src_alias, c.src_column, c.type});
        }
        if (keys.empty()) return build_projection(plan, scope);

        std::vector<AggItem> aggs;
        int naggs = static_cast<int>(rng.range_i(0, params.max_aggs));
        std::vector<const ScopeColumn*> numeric;
        for (const auto& c : scope.cols) {
            if (c.type == ValueType::Integer || c.type == ValueType::Double)
                numeric.push_back(&c);
        }
        for (int i = 0; i < naggs; ++i) {
            std::string fn = prob.sample("agg_fn", rng);
            std::string alias = "agg" + std::to_string(i + 1);
            if (fn == "count") {
                aggs.push_back({AggCall{AggFn::Count, nullptr, true}, alias});
                continue;
            }
            AggFn f = fn == "avg"   ? AggFn::Avg
                      : fn == "sum" ? AggFn::Sum
                      : fn == "min" ? AggFn::Min
                                    : AggFn::Max;
            const ScopeColumn* arg = nullptr;
            if (f == AggFn::Avg || f == AggFn::Sum) {
                if (numeric.empty()) continue;
                arg = numeric[rng.below(numeric.size())];
            } else {
                const ScopeColumn& c = scope.cols[rng.below(scope.cols.size())];
                if (c.type == ValueType::Boolean) continue;
                arg = &c;
            }
            aggs.push_back({AggCall{f, scope_ref(*arg), false}, alias});
        }
        return aggregate(std::move(keys), std::move(aggs), std::move(plan));
    }

    PlanPtr build_projection(PlanPtr plan, const Scope& scope) {
        std::vector<size_t> idx(scope.cols.size());
        for (size_t i = 0; i < idx.size(); ++i) idx[i] = i;
        rng.shuffle(idx);
        size_t n = 1 + rng.below(scope.cols.size());
        idx.resize(n);
        std::sort(idx.begin(), idx.end());  // keep source order for readability

        std::vector<ProjItem> items;
        std::set<std::string> names;
        for (size_t i : idx) {
            const ScopeColumn& c = scope.cols[i];
            std::string alias = c.name;
            int suffix = 2;
            while (!names.insert(alias).second)
                alias = c.name + "_" + std::to_string(suffix++);
            items.push_back({scope_ref(c), alias});
        }
        if (prob.sample("scalar", rng) == "arith") {
            std::vector<const ScopeColumn*> numeric;
            for (const auto& c : scope.cols) {
                if (c.type == ValueType::Integer || c.type == ValueType::Double)
                    numeric.push_back(&c);
            }
            if (!numeric.empty()) {
                const ScopeColumn* c = numeric[rng.below(numeric.size())];
                std::string alias = "c1";
                int suffix = 2;
                while (!names.insert(alias).second) alias = "c" + std::to_string(suffix++);
                items.push_back({arith(rng.chance(0.5) ? ArithOp::Add : ArithOp::Mul,
                                       scope_ref(*c), lit_int(rng.range_i(1, 9))),
                                 alias});
            }
        }
        return project(std::move(items), std::move(plan));
    }

    // Second union arm: same output arity and types, fresh tables and
    // predicates. Type gaps are filled with literals.
    PlanPtr build_union_arm(const Scope& want) {
        PlanPtr plan = build_from();
        if (prob.sample("where", rng) == "yes") {
            ExprPtr pred = build_predicate(plan_scope(plan));
            if (pred) plan = filter(pred, plan);
        }
        Scope scope = plan_scope(plan);
        std::vector<ProjItem> items;
        std::set<std::string> names;
        for (const auto& out : want.cols) {
            std::string alias = out.name;
            int suffix = 2;
            while (!names.insert(alias).second) alias = out.name + "_" + std::to_string(suffix++);
            std::vector<const ScopeColumn*> candidates;
            for (const auto& c : scope.cols)
                if (c.type == out.type) candidates.push_back(&c);
            if (!candidates.empty() && rng.chance(0.85)) {
                items.push_back({scope_ref(*candidates[rng.below(candidates.size())]), alias});
            } else {
                items.push_back({synth_literal(out.type), alias});
            }
        }
        return project(std::move(items), std::move(plan));
    }

    PlanPtr build_plan() {
        std::string union_alt = prob.sample("union", rng);
        bool use_union = union_alt != "no";

        // Aggregates below a UNION would make the arms' shapes hard to align;
        // keep union arms to scan/filter/project pipelines.
        PlanPtr plan = build_body(!use_union);
        if (use_union) {
            PlanPtr armB = build_union_arm(plan_scope(plan));
            plan = set_union(union_alt == "union_all", plan, armB);
        }

        bool want_order = prob.sample("order_by", rng) == "yes";
        bool want_limit = prob.sample("limit", rng) == "yes";
        if (want_order || want_limit) {
            Scope out = plan_scope(plan);
            std::vector<SortKey> keys;
            std::set<int> used;
            if (want_order) {
                int nkeys = static_cast<int>(rng.range_i(1, 2));
                for (int i = 0; i < nkeys; ++i) {
                    int pick = static_cast<int>(rng.below(out.cols.size()));
                    if (!used.insert(pick).second) continue;
                    keys.push_back({scope_ref(out.cols[static_cast<size_t>(pick)]),
                                    rng.chance(0.7), false});
                }
            }
            // Tie-breakers make the order total so results are comparable
            // (and any LIMIT deterministic). Aggregate-computed doubles are
            // skipped: equivalent plans may produce them with last-bit
            // differences, which must not influence row order.
            for (size_t i = 0; i < out.cols.size(); ++i) {
                if (used.count(static_cast<int>(i))) continue;
                const ScopeColumn& c = out.cols[i];
                if (c.from_aggregate && c.type == ValueType::Double) continue;
                keys.push_back({scope_ref(c), true, true});
            }
            if (!keys.empty()) plan = sort(std::move(keys), plan);
        }
        if (want_limit) plan = limit(rng.range_i(1, params.max_limit), plan);
        return plan;
    }
};

void walk_expr_entities(const ExprPtr& e, EntitySet& out) {
    if (!e) return;
    std::visit(
        [&](const auto& n) {
            using T = std::decay_t<decltype(n)>;
            if constexpr (std::is_same_v<T, Comparison>) {
                if (n.op == CmpOp::Like || n.op == CmpOp::NotLike) {
                    out.insert({"predicate", "like"});
                } else {
                    out.insert({"predicate", "cmp"});
                    const char* tok = n.op == CmpOp::Eq   ? "eq"
                                      : n.op == CmpOp::Ne ? "ne"
                                      : n.op == CmpOp::Lt ? "lt"
                                      : n.op == CmpOp::Le ? "le"
                                      : n.op == CmpOp::Gt ? "gt"
                                      : n.op == CmpOp::Ge ? "ge"
                                                          : nullptr;
                    if (tok) out.insert({"cmp_op", tok});
                }
                walk_expr_entities(n.lhs, out);
                walk_expr_entities(n.rhs, out);
            } else if constexpr (std::is_same_v<T, IsTest>) {
                out.insert({"predicate", "is_test"});
                walk_expr_entities(n.operand, out);
            } else if constexpr (std::is_same_v<T, BoolExpr>) {
                out.insert({"bool_conn", n.conn == BoolConn::And ? "and" : "or"});
                for (const auto& op : n.operands) walk_expr_entities(op, out);
            } else if constexpr (std::is_same_v<T, NotExpr>) {
                walk_expr_entities(n.operand, out);
            } else if constexpr (std::is_same_v<T, ArithExpr>) {
                out.insert({"scalar", "arith"});
                walk_expr_entities(n.lhs, out);
                walk_expr_entities(n.rhs, out);
            } else if constexpr (std::is_same_v<T, ExtractExpr>) {
                out.insert({"scalar", "extract"});
                walk_expr_entities(n.arg, out);
            } else if constexpr (std::is_same_v<T, CastExpr>) {
                walk_expr_entities(n.arg, out);
            } else if constexpr (std::is_same_v<T, AggCall>) {
                if (!n.star) walk_expr_entities(n.arg, out);
            }
        },
        e->node);
}

void walk_plan_entities(const PlanPtr& p, EntitySet& out, bool& saw_join) {
    std::visit(
        [&](const auto& op) {
            using T = std::decay_t<decltype(op)>;
            if constexpr (std::is_same_v<T, JoinOp>) {
                saw_join = true;
                out.insert({"table_ref", op.type == JoinType::Left    ? "join_left"
                                         : op.type == JoinType::Cross ? "join_cross"
                                                                      : "join_inner"});
                if (op.condition) {
                    const auto* l = std::get_if<Literal>(&op.condition->node);
                    bool is_true = l && !l->is_null && l->spec.type == ValueType::Boolean &&
                                   l->bool_v;
                    out.insert({"join_cond", is_true ? "true_literal" : "bool_expr"});
                }
            } else if constexpr (std::is_same_v<T, FilterOp>) {
                out.insert({"where", "yes"});
                walk_expr_entities(op.predicate, out);
            } else if constexpr (std::is_same_v<T, AggregateOp>) {
                out.insert({"group_by", "yes"});
                for (const auto& a : op.aggs) {
                    const char* fn = a.call.fn == AggFn::Avg   ? "avg"
                                     : a.call.fn == AggFn::Sum ? "sum"
                                     : a.call.fn == AggFn::Min ? "min"
                                     : a.call.fn == AggFn::Max ? "max"
                                                               : "count";
                    out.insert({"agg_fn", fn});
                }
            } else if constexpr (std::is_same_v<T, DistinctOp>) {
                out.insert({"distinct", "yes"});
            } else if constexpr (std::is_same_v<T, SortOp>) {
                for (const auto& k : op.keys) {
                    if (!k.tie_breaker) {
                        out.insert({"order_by", "yes"});
                        break;
                    }
                }
            } else if constexpr (std::is_same_v<T, LimitOp>) {
                out.insert({"limit", "yes"});
            } else if constexpr (std::is_same_v<T, UnionOp>) {
                out.insert({"union", op.all ? "union_all" : "union"});
            } else if constexpr (std::is_same_v<T, ProjectOp>) {
                for (const auto& it : op.items) walk_expr_entities(it.expr, out);
            }
        },
        p->op);
    for (const auto& c : p->children) walk_plan_entities(c, out, saw_join);
}

}  // namespace

LogicalPlan build_specification(const SchemaMetadata& schema, const SampleSet& samples,
                                const ProbabilityTable& prob, Rng& rng,
                                const GenParams& params) {
    if (schema.tables.empty())
        throw Error(ErrorKind::GenerationExhausted, "schema has no tables");
    for (int attempt = 0; attempt < params.max_retries; ++attempt) {
        Builder b{schema, samples, prob, rng, params};
        LogicalPlan plan{b.build_plan()};
        if (type_check(plan, schema).ok) return plan;
    }
    throw Error(ErrorKind::GenerationExhausted,
                "no valid plan in " + std::to_string(params.max_retries) + " attempts");
}

EntitySet extract_entities(const LogicalPlan& plan) {
    EntitySet out;
    if (!plan.root) return out;
    bool saw_join = false;
    walk_plan_entities(plan.root, out, saw_join);
    if (!saw_join) out.insert({"table_ref", "table_simple"});
    return out;
}

}  // namespace eqperf
