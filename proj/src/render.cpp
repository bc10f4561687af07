#include "eqperf/render.hpp"

#include <cassert>
#include <charconv>
#include <map>
#include <set>

#include "eqperf/common.hpp"

namespace eqperf {

namespace {

// Precedence levels for minimal parenthesization. An operand is wrapped when
// its level is below what the context requires.
constexpr int LV_OR = 1;
constexpr int LV_AND = 2;
constexpr int LV_NOT = 3;
constexpr int LV_CMP = 4;
constexpr int LV_ADD = 5;
constexpr int LV_MUL = 6;
constexpr int LV_ATOM = 7;

std::string dbl_sql(double v) {
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof(buf), v);
    std::string s(buf, res.ptr);
    // Ensure the token stays a double literal for the parser.
    if (s.find('.') == std::string::npos && s.find('e') == std::string::npos &&
        s.find("inf") == std::string::npos && s.find("nan") == std::string::npos)
        s += ".0";
    return s;
}

std::string quote_str(const std::string& s) {
    std::string out = "'";
    for (char c : s) {
        out += c;
        if (c == '\'') out += '\'';
    }
    return out + "'";
}

std::string type_name_sql(const TypeSpec& t, const Dialect& d) {
    bool pg = d.family == DialectFamily::PostgresFamily;
    switch (t.type) {
        case ValueType::Integer: return "INTEGER";
        case ValueType::Double: return pg ? "DOUBLE PRECISION" : "REAL";
        case ValueType::String:
            if (pg)
                return t.varchar_len ? "VARCHAR(" + std::to_string(*t.varchar_len) + ")"
                                     : "VARCHAR";
            return "TEXT";
        case ValueType::Datetime: return pg ? "TIMESTAMP" : "TEXT";
        case ValueType::Boolean: return pg ? "BOOLEAN" : "INTEGER";
    }
    return "INTEGER";
}

// One column visible in a block's FROM scope. `qual` is what a qualified
// reference renders as (scan alias or generated subquery alias); src_* tie it
// back to the scan that introduced it so ColumnRef{alias, col} still resolves
// through subquery boundaries.
struct FromCol {
    std::string qual;
    std::string name;
    std::string src_alias;
    std::string src_column;
};

struct FromScope {
    std::vector<FromCol> cols;

    const FromCol* resolve(const ColumnRef& ref) const {
        for (const auto& c : cols) {
            if (ref.table.empty()) {
                if (c.name == ref.column) return &c;
            } else if (c.src_alias == ref.table && c.src_column == ref.column) {
                return &c;
            }
        }
        return nullptr;
    }

    bool name_unique(const std::string& n) const {
        int cnt = 0;
        for (const auto& c : cols)
            if (c.name == n) ++cnt;
        return cnt == 1;
    }
};

struct Renderer {
    const Dialect& d;
    int next_sq = 0;
    bool force_qual_refs_ = false;

    std::string fresh_alias() { return "sq" + std::to_string(next_sq++); }

    [[noreturn]] void unsupported(const std::string& what) {
        throw Error(ErrorKind::UnsupportedConstruct, what);
    }

    // ---- expressions -----------------------------------------------------

    std::string ref_sql(const ColumnRef& ref, const FromScope& scope,
                        const std::map<std::string, std::string>* virtual_outputs) {
        if (ref.table.empty() && virtual_outputs) {
            auto it = virtual_outputs->find(ref.column);
            if (it != virtual_outputs->end()) return it->second;
        }
        const FromCol* c = scope.resolve(ref);
        if (!c)
            unsupported("unresolvable column reference " +
                        (ref.table.empty() ? ref.column : ref.table + "." + ref.column));
        // Inside ORDER BY a bare name binds to a SELECT-list alias before an
        // input column, so references there stay qualified.
        if (!force_qual_refs_ && scope.name_unique(c->name)) return c->name;
        if (c->qual.empty()) return c->name;
        return c->qual + "." + c->name;
    }

    std::string expr_sql(const ExprPtr& e, const FromScope& scope, int need,
                         const std::map<std::string, std::string>* virtual_outputs = nullptr) {
        assert(e);
        int level = LV_ATOM;
        std::string text = std::visit(
            [&](const auto& n) -> std::string {
                using T = std::decay_t<decltype(n)>;
                if constexpr (std::is_same_v<T, ColumnRef>) {
                    return ref_sql(n, scope, virtual_outputs);
                } else if constexpr (std::is_same_v<T, Literal>) {
                    return literal_sql(n);
                } else if constexpr (std::is_same_v<T, Comparison>) {
                    level = LV_CMP;
                    return cmp_sql(n, scope, virtual_outputs);
                } else if constexpr (std::is_same_v<T, IsTest>) {
                    level = LV_CMP;
                    std::string op = expr_sql(n.operand, scope, LV_ADD, virtual_outputs);
                    switch (n.op) {
                        case IsOp::IsTrue: return op + " IS TRUE";
                        case IsOp::IsFalse: return op + " IS FALSE";
                        case IsOp::IsNull: return op + " IS NULL";
                        case IsOp::IsNotNull: return op + " IS NOT NULL";
                    }
                    return op;
                } else if constexpr (std::is_same_v<T, BoolExpr>) {
                    bool is_and = n.conn == BoolConn::And;
                    level = is_and ? LV_AND : LV_OR;
                    std::vector<std::string> parts;
                    for (const auto& op : n.operands)
                        parts.push_back(expr_sql(op, scope, level + 1, virtual_outputs));
                    return join(parts, is_and ? " AND " : " OR ");
                } else if constexpr (std::is_same_v<T, NotExpr>) {
                    level = LV_NOT;
                    return "NOT " + expr_sql(n.operand, scope, LV_ADD, virtual_outputs);
                } else if constexpr (std::is_same_v<T, ArithExpr>) {
                    bool addsub = n.op == ArithOp::Add || n.op == ArithOp::Sub;
                    level = addsub ? LV_ADD : LV_MUL;
                    const char* tok = n.op == ArithOp::Add   ? " + "
                                      : n.op == ArithOp::Sub ? " - "
                                      : n.op == ArithOp::Mul ? " * "
                                                             : " / ";
                    return expr_sql(n.lhs, scope, level, virtual_outputs) + tok +
                           expr_sql(n.rhs, scope, level + 1, virtual_outputs);
                } else if constexpr (std::is_same_v<T, ExtractExpr>) {
                    std::string arg = expr_sql(n.arg, scope, 0, virtual_outputs);
                    const char* pg_field = n.field == ExtractField::Year    ? "YEAR"
                                           : n.field == ExtractField::Month ? "MONTH"
                                                                            : "DAY";
                    if (d.family == DialectFamily::PostgresFamily)
                        return std::string("EXTRACT(") + pg_field + " FROM " + arg + ")";
                    const char* fmt = n.field == ExtractField::Year    ? "%Y"
                                      : n.field == ExtractField::Month ? "%m"
                                                                       : "%d";
                    return std::string("CAST(strftime('") + fmt + "', " + arg +
                           ") AS INTEGER)";
                } else if constexpr (std::is_same_v<T, CastExpr>) {
                    return "CAST(" + expr_sql(n.arg, scope, 0, virtual_outputs) + " AS " +
                           type_name_sql(n.to, d) + ")";
                } else if constexpr (std::is_same_v<T, AggCall>) {
                    return agg_sql(n, scope);
                }
            },
            e->node);
        if (level < need) return "(" + text + ")";
        return text;
    }

    std::string literal_sql(const Literal& l) {
        if (l.is_null) {
            if (d.family == DialectFamily::PostgresFamily)
                return "CAST(NULL AS " + type_name_sql(l.spec, d) + ")";
            return "NULL";
        }
        switch (l.spec.type) {
            case ValueType::Integer: return std::to_string(l.int_v);
            case ValueType::Double: return dbl_sql(l.dbl_v);
            case ValueType::String: return quote_str(l.str_v);
            case ValueType::Boolean: return l.bool_v ? "TRUE" : "FALSE";
            case ValueType::Datetime:
                if (d.family == DialectFamily::PostgresFamily)
                    return "TIMESTAMP " + quote_str(l.str_v);
                return quote_str(l.str_v);
        }
        return "NULL";
    }

    std::string cmp_sql(const Comparison& n, const FromScope& scope,
                        const std::map<std::string, std::string>* vo) {
        std::string l = expr_sql(n.lhs, scope, LV_ADD, vo);
        std::string r = expr_sql(n.rhs, scope, LV_ADD, vo);
        bool pg = d.family == DialectFamily::PostgresFamily;
        switch (n.op) {
            case CmpOp::Eq: return l + " = " + r;
            case CmpOp::Ne: return l + " <> " + r;
            case CmpOp::Lt: return l + " < " + r;
            case CmpOp::Le: return l + " <= " + r;
            case CmpOp::Gt: return l + " > " + r;
            case CmpOp::Ge: return l + " >= " + r;
            case CmpOp::Like: return l + " LIKE " + r;
            case CmpOp::NotLike: return l + " NOT LIKE " + r;
            case CmpOp::IsDistinct:
                return pg ? l + " IS DISTINCT FROM " + r : l + " IS NOT " + r;
            case CmpOp::IsNotDistinct:
                return pg ? l + " IS NOT DISTINCT FROM " + r : l + " IS " + r;
        }
        return l + " = " + r;
    }

    std::string agg_sql(const AggCall& call, const FromScope& scope) {
        if (call.star) return "COUNT(*)";
        const char* fn = call.fn == AggFn::Avg   ? "AVG"
                         : call.fn == AggFn::Sum ? "SUM"
                         : call.fn == AggFn::Min ? "MIN"
                         : call.fn == AggFn::Max ? "MAX"
                                                 : "COUNT";
        return std::string(fn) + "(" + expr_sql(call.arg, scope, 0) + ")";
    }

    // ---- FROM clause -----------------------------------------------------

    struct SqEntry {
        const PlanNode* node = nullptr;
        std::string alias;
        std::vector<std::string> renamed;  // empty: the block's own output names are usable
    };

    void collect_from_cols(const PlanPtr& p, FromScope& scope, std::vector<SqEntry>& sq_aliases) {
        if (const auto* sc = std::get_if<ScanOp>(&p->op)) {
            for (const auto& c : sc->columns)
                scope.cols.push_back({sc->alias, c.name, sc->alias, c.name});
            return;
        }
        if (std::holds_alternative<JoinOp>(p->op)) {
            collect_from_cols(p->children[0], scope, sq_aliases);
            collect_from_cols(p->children[1], scope, sq_aliases);
            return;
        }
        // Anything else becomes a derived table.
        std::string alias = fresh_alias();
        Scope s = plan_scope(p);
        std::set<std::string> seen;
        bool dup = false;
        for (const auto& c : s.cols) dup |= !seen.insert(c.name).second;
        if (!dup) {
            sq_aliases.push_back({p.get(), alias, {}});
            for (const auto& c : s.cols)
                scope.cols.push_back({alias, c.name, c.src_alias, c.src_column});
            return;
        }
        // Duplicate output names (a self-join exposed through a bare filter
        // or limit). A star block can take fresh aliases; a Project or
        // Aggregate with clashing aliases cannot be repaired here.
        BlockParts b = split_block(p);
        if (b.project || b.agg || std::holds_alternative<UnionOp>(b.from->op))
            unsupported("derived table with ambiguous output name");
        std::vector<std::string> names;
        for (size_t i = 0; i < s.cols.size(); ++i) {
            names.push_back("c" + std::to_string(i + 1));
            scope.cols.push_back({alias, names.back(), s.cols[i].src_alias, s.cols[i].src_column});
        }
        sq_aliases.push_back({p.get(), alias, std::move(names)});
    }

    std::string from_sql(const PlanPtr& p, const FromScope& scope,
                         const std::vector<SqEntry>& sq_aliases, bool parenthesize_joins) {
        if (const auto* sc = std::get_if<ScanOp>(&p->op)) {
            if (sc->alias == sc->table) return sc->table;
            return sc->table + " AS " + sc->alias;
        }
        if (const auto* jn = std::get_if<JoinOp>(&p->op)) {
            std::string l = from_sql(p->children[0], scope, sq_aliases, true);
            std::string r = from_sql(p->children[1], scope, sq_aliases, true);
            std::string text;
            if (jn->type == JoinType::Cross) {
                text = l + " CROSS JOIN " + r;
            } else {
                const char* tok = jn->type == JoinType::Inner ? " INNER JOIN " : " LEFT JOIN ";
                text = l + tok + r + " ON " + expr_sql(jn->condition, scope, 0);
            }
            if (parenthesize_joins) return "(" + text + ")";
            return text;
        }
        for (const auto& sq : sq_aliases) {
            if (sq.node == p.get())
                return "(" + block_sql(p, sq.renamed.empty() ? nullptr : &sq.renamed) + ") AS " +
                       sq.alias;
        }
        unsupported("unregistered derived table");
    }

    // ---- block assembly --------------------------------------------------

    struct BlockParts {
        const LimitOp* limit = nullptr;
        const SortOp* sort = nullptr;
        bool distinct = false;
        const ProjectOp* project = nullptr;
        const AggregateOp* agg = nullptr;
        std::vector<ExprPtr> where;
        PlanPtr from;
    };

    // Absorbs the topmost spine of `node` into SELECT-block slots. Filters
    // sitting above an Aggregate cannot share its block (WHERE runs before
    // grouping), so an Aggregate seen after any filter ends absorption and
    // the aggregate subtree becomes a derived table instead.
    static BlockParts split_block(PlanPtr node) {
        BlockParts b;
        PlanPtr cur = std::move(node);
        if (const auto* l = std::get_if<LimitOp>(&cur->op)) {
            b.limit = l;
            cur = cur->children[0];
        }
        if (const auto* s = std::get_if<SortOp>(&cur->op)) {
            b.sort = s;
            cur = cur->children[0];
        }
        if (std::holds_alternative<DistinctOp>(cur->op)) {
            b.distinct = true;
            cur = cur->children[0];
        }
        if (const auto* pr = std::get_if<ProjectOp>(&cur->op)) {
            b.project = pr;
            cur = cur->children[0];
        }
        while (true) {
            if (const auto* f = std::get_if<FilterOp>(&cur->op)) {
                b.where.push_back(f->predicate);
                cur = cur->children[0];
                continue;
            }
            if (std::holds_alternative<AggregateOp>(cur->op) && b.where.empty() && !b.agg) {
                b.agg = std::get_if<AggregateOp>(&cur->op);
                cur = cur->children[0];
                continue;
            }
            break;
        }
        b.from = cur;
        return b;
    }

    std::string order_by_sql(const SortOp& sort, const FromScope& scope,
                             const std::set<std::string>& output_aliases) {
        std::vector<std::string> keys;
        for (const auto& k : sort.keys) {
            std::string t;
            const auto* cr = std::get_if<ColumnRef>(&k.expr->node);
            if (cr && cr->table.empty() && output_aliases.count(cr->column)) {
                t = cr->column;
            } else {
                force_qual_refs_ = true;
                t = expr_sql(k.expr, scope, 0);
                force_qual_refs_ = false;
            }
            if (!k.asc) t += " DESC";
            keys.push_back(t);
        }
        return " ORDER BY " + join(keys, ", ");
    }

    // A union can render as a compound SELECT only when it is the whole block
    // body (nothing but an optional Sort/Limit above it).
    std::string compound_sql(const BlockParts& b) {
        const auto* un = std::get_if<UnionOp>(&b.from->op);
        std::string sep = un->all ? " UNION ALL " : " UNION ";
        std::string text =
            union_arm_sql(b.from->children[0]) + sep + union_arm_sql(b.from->children[1]);
        if (b.sort) {
            Scope s = plan_scope(b.from);
            std::set<std::string> names;
            FromScope fs;
            for (const auto& c : s.cols) {
                names.insert(c.name);
                fs.cols.push_back({"", c.name, c.src_alias, c.src_column});
            }
            text += order_by_sql(*b.sort, fs, names);
        }
        if (b.limit) text += " LIMIT " + std::to_string(b.limit->count);
        return text;
    }

    // Compound arms cannot carry their own ORDER BY/LIMIT and nested
    // compounds would change grouping, so such arms hide inside a derived
    // table.
    std::string union_arm_sql(const PlanPtr& arm) {
        bool wrap = std::holds_alternative<SortOp>(arm->op) ||
                    std::holds_alternative<LimitOp>(arm->op) ||
                    std::holds_alternative<UnionOp>(arm->op);
        if (!wrap) return block_sql(arm);
        Scope s = plan_scope(arm);
        std::set<std::string> seen;
        for (const auto& c : s.cols)
            if (!seen.insert(c.name).second)
                unsupported("derived table with ambiguous output name " + c.name);
        return "SELECT * FROM (" + block_sql(arm) + ") AS " + fresh_alias();
    }

    // `forced_output_names` renames a star block's output columns in scope
    // order; callers use it to give a derived table referenceable names when
    // the natural ones clash.
    std::string block_sql(const PlanPtr& node,
                          const std::vector<std::string>* forced_output_names = nullptr) {
        BlockParts b = split_block(node);
        if (std::holds_alternative<UnionOp>(b.from->op) && !b.distinct && !b.project && !b.agg &&
            b.where.empty())
            return compound_sql(b);

        FromScope scope;
        std::vector<SqEntry> sq_aliases;
        collect_from_cols(b.from, scope, sq_aliases);
        std::string from_text = from_sql(b.from, scope, sq_aliases, false);

        // Aggregate outputs referenced from the same block inline their call.
        std::map<std::string, std::string> virtual_outputs;
        std::vector<std::string> group_keys;
        if (b.agg) {
            for (const auto& a : b.agg->aggs) virtual_outputs[a.alias] = agg_sql(a.call, scope);
            for (const auto& k : b.agg->keys) group_keys.push_back(ref_sql(k, scope, nullptr));
        }

        std::vector<std::string> items;
        std::set<std::string> output_aliases;
        bool star = false;
        if (b.project) {
            for (const auto& it : b.project->items) {
                std::string t = expr_sql(it.expr, scope, 0, &virtual_outputs);
                output_aliases.insert(it.alias);
                items.push_back(t == it.alias ? t : t + " AS " + it.alias);
            }
            if (!b.agg && !b.distinct) {
                star = b.project->items.size() == scope.cols.size();
                for (size_t i = 0; star && i < b.project->items.size(); ++i) {
                    const auto* cr = std::get_if<ColumnRef>(&b.project->items[i].expr->node);
                    const FromCol* fc = cr ? scope.resolve(*cr) : nullptr;
                    star = fc && fc == &scope.cols[i] && b.project->items[i].alias == fc->name;
                }
            }
        } else if (b.agg) {
            for (size_t i = 0; i < b.agg->keys.size(); ++i) {
                output_aliases.insert(b.agg->keys[i].column);
                items.push_back(group_keys[i]);
            }
            for (const auto& a : b.agg->aggs) {
                output_aliases.insert(a.alias);
                items.push_back(agg_sql(a.call, scope) + " AS " + a.alias);
            }
        } else if (forced_output_names) {
            assert(forced_output_names->size() == scope.cols.size());
            for (size_t i = 0; i < scope.cols.size(); ++i) {
                const FromCol& c = scope.cols[i];
                output_aliases.insert((*forced_output_names)[i]);
                items.push_back(c.qual + "." + c.name + " AS " + (*forced_output_names)[i]);
            }
        } else {
            star = true;
            for (const auto& c : scope.cols) output_aliases.insert(c.name);
        }

        std::string sql = "SELECT ";
        if (b.distinct) sql += "DISTINCT ";
        sql += star ? "*" : join(items, ", ");
        sql += " FROM " + from_text;

        if (!b.where.empty()) {
            std::vector<std::string> conj;
            for (const auto& w : b.where) conj.push_back(expr_sql(w, scope, LV_AND + 1));
            sql += " WHERE " + join(conj, " AND ");
        }
        if (b.agg && !group_keys.empty()) sql += " GROUP BY " + join(group_keys, ", ");
        if (b.sort) sql += order_by_sql(*b.sort, scope, output_aliases);
        if (b.limit) sql += " LIMIT " + std::to_string(b.limit->count);
        return sql;
    }
};

}  // namespace

std::string render_sql(const LogicalPlan& plan, const Dialect& dialect) {
    if (!plan.root) throw Error(ErrorKind::UnsupportedConstruct, "empty plan");
    Renderer r{dialect};
    return r.block_sql(plan.root);
}

}  // namespace eqperf
