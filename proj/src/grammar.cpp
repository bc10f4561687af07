#include "eqperf/grammar.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>

namespace eqperf {

double ProbabilityTable::prob(const std::string& cp, const std::string& alt) const {
    const ChoicePoint* p = find(cp);
    if (!p) return 0.0;
    const Alternative* a = p->find(alt);
    return a ? a->prob : 0.0;
}

std::string ProbabilityTable::sample(const std::string& cp, Rng& rng) const {
    const ChoicePoint* p = find(cp);
    assert(p && !p->alts.empty());
    std::vector<double> w;
    w.reserve(p->alts.size());
    for (const auto& a : p->alts) w.push_back(a.prob);
    return p->alts[rng.weighted(w)].name;
}

namespace {

ChoicePoint uniform(const std::string& name, std::vector<std::string> alts) {
    ChoicePoint cp;
    cp.name = name;
    double p = 1.0 / static_cast<double>(alts.size());
    for (auto& a : alts) cp.alts.push_back({std::move(a), p});
    return cp;
}

}  // namespace

ProbabilityTable init_probability_table() {
    ProbabilityTable t;
    ChoicePoint table_ref;
    table_ref.name = "table_ref";
    table_ref.alts = {{"table_simple", 0.5},
                      {"join_left", 0.16},
                      {"join_cross", 0.17},
                      {"join_inner", 0.17}};
    t.points.push_back(table_ref);
    t.points.push_back({"join_cond", {{"bool_expr", 0.5}, {"true_literal", 0.5}}});
    t.points.push_back(uniform("where", {"no", "yes"}));
    t.points.push_back(uniform("predicate", {"cmp", "is_test", "like"}));
    t.points.push_back(uniform("cmp_op", {"eq", "ne", "lt", "le", "gt", "ge"}));
    t.points.push_back(uniform("cmp_rhs", {"literal", "column"}));
    t.points.push_back(uniform("bool_conn", {"single", "and", "or"}));
    t.points.push_back(uniform("group_by", {"no", "yes"}));
    t.points.push_back(uniform("agg_fn", {"avg", "sum", "min", "max", "count"}));
    t.points.push_back(uniform("distinct", {"no", "yes"}));
    t.points.push_back(uniform("order_by", {"no", "yes"}));
    t.points.push_back(uniform("limit", {"no", "yes"}));
    t.points.push_back(uniform("union", {"no", "union", "union_all"}));
    t.points.push_back(uniform("scalar", {"column", "arith", "extract"}));
    return t;
}

bool RuleFrequencyTable::lowest_quartile(int rule_id) const {
    auto it = counts.find(rule_id);
    if (it == counts.end() || counts.empty()) return false;
    std::vector<long> sorted;
    sorted.reserve(counts.size());
    for (const auto& [id, c] : counts) sorted.push_back(c);
    std::sort(sorted.begin(), sorted.end());
    long cutoff = sorted[(sorted.size() - 1) / 4];
    return it->second <= cutoff;
}

void shift_probability(ChoicePoint& cp, const std::string& alt, double delta, double p_min) {
    size_t k = cp.alts.size();
    if (k < 2) return;
    Alternative* target = nullptr;
    for (auto& a : cp.alts)
        if (a.name == alt) target = &a;
    if (!target) return;

    double ceiling = 1.0 - p_min * static_cast<double>(k - 1);
    double wanted = std::clamp(target->prob + delta, p_min, ceiling);
    if (wanted == target->prob) return;
    target->prob = wanted;

    // Rescale siblings proportionally, then lift any that fell through the
    // floor, taking the difference from those still above it.
    double sibling_sum = 0.0;
    for (const auto& a : cp.alts)
        if (&a != target) sibling_sum += a.prob;
    double want_sum = 1.0 - wanted;
    if (sibling_sum > 0.0) {
        double scale = want_sum / sibling_sum;
        for (auto& a : cp.alts)
            if (&a != target) a.prob *= scale;
    } else {
        for (auto& a : cp.alts)
            if (&a != target) a.prob = want_sum / static_cast<double>(k - 1);
    }
    for (int pass = 0; pass < static_cast<int>(k); ++pass) {
        double deficit = 0.0;
        double free_sum = 0.0;
        for (auto& a : cp.alts) {
            if (&a == target) continue;
            if (a.prob < p_min) {
                deficit += p_min - a.prob;
                a.prob = p_min;
            } else if (a.prob > p_min) {
                free_sum += a.prob - p_min;
            }
        }
        if (deficit <= 0.0 || free_sum <= 0.0) break;
        double shrink = deficit / free_sum;
        for (auto& a : cp.alts) {
            if (&a == target || a.prob <= p_min) continue;
            a.prob -= (a.prob - p_min) * shrink;
        }
    }
    double sum = 0.0;
    for (const auto& a : cp.alts) sum += a.prob;
    for (auto& a : cp.alts) a.prob /= sum;
}

void reward_entities(ProbabilityTable& table, const EntitySet& entities, double delta,
                     double p_min) {
    for (const auto& e : entities) {
        for (auto& cp : table.points) {
            if (cp.name == e.choice_point) shift_probability(cp, e.alternative, delta, p_min);
        }
    }
}

void update_from_mutator(ProbabilityTable& table, RuleFrequencyTable& freq,
                         const EntitySet& entities, const std::vector<int>& fired_rules,
                         bool produced_mutants, const FeedbackParams& params) {
    bool rare = false;
    for (int id : fired_rules) {
        if (freq.lowest_quartile(id)) rare = true;
    }
    for (int id : fired_rules) freq.record(id);
    if (produced_mutants) {
        double d = params.delta * (rare ? params.rare_rule_bonus : 1.0);
        reward_entities(table, entities, d, params.p_min);
    } else {
        reward_entities(table, entities, -params.delta, params.p_min);
    }
}

void update_from_validator(ProbabilityTable& table, const EntitySet& entities, bool bug_found,
                           const FeedbackParams& params) {
    if (!bug_found) return;
    reward_entities(table, entities, params.delta_validator, params.p_min);
}

bool probability_table_valid(const ProbabilityTable& table, double p_min, double eps) {
    for (const auto& cp : table.points) {
        double sum = 0.0;
        for (const auto& a : cp.alts) {
            if (a.prob < p_min - eps) return false;
            sum += a.prob;
        }
        if (std::fabs(sum - 1.0) > eps) return false;
    }
    return true;
}

}  // namespace eqperf
