#pragma once

#include <map>
#include <set>
#include <string>
#include <vector>

#include "eqperf/rng.hpp"

namespace eqperf {

// A grammar feature observed in (or chosen for) a query: one alternative of
// one choice point, e.g. {"table_ref", "join_left"}.
struct Entity {
    std::string choice_point;
    std::string alternative;

    auto operator<=>(const Entity&) const = default;
};

using EntitySet = std::set<Entity>;

struct Alternative {
    std::string name;
    double prob = 0.0;
};

struct ChoicePoint {
    std::string name;
    std::vector<Alternative> alts;

    const Alternative* find(const std::string& alt) const {
        for (const auto& a : alts)
            if (a.name == alt) return &a;
        return nullptr;
    }
};

// Weights for every decision the query builder makes. Per choice point the
// probabilities sum to one; feedback shifts mass between alternatives but
// never below the configured floor, so no alternative starves permanently.
struct ProbabilityTable {
    std::vector<ChoicePoint> points;

    const ChoicePoint* find(const std::string& cp) const {
        for (const auto& p : points)
            if (p.name == cp) return &p;
        return nullptr;
    }
    double prob(const std::string& cp, const std::string& alt) const;
    std::string sample(const std::string& cp, Rng& rng) const;
};

// Join-heavy choice points start biased toward plain table references; the
// rest start uniform.
ProbabilityTable init_probability_table();

struct FeedbackParams {
    double delta = 0.05;            // per-update shift from mutation feedback
    double delta_validator = 0.10;  // larger shift when a bug was confirmed
    double rare_rule_bonus = 2.0;   // multiplier on delta for rarely fired rules
    double p_min = 0.02;            // probability floor per alternative
};

// Fired-rule counters driving the rare-rule bonus.
struct RuleFrequencyTable {
    std::map<int, long> counts;

    void ensure(int rule_id) { counts.emplace(rule_id, 0); }
    void record(int rule_id) { ++counts[rule_id]; }
    // True when the rule's count sits in the lowest quartile of all counts.
    bool lowest_quartile(int rule_id) const;
};

// Shift probability mass toward (delta > 0) or away from (delta < 0) the
// given alternative, rescaling its siblings and keeping every probability
// within [p_min, 1 - p_min*(k-1)].
void shift_probability(ChoicePoint& cp, const std::string& alt, double delta, double p_min);

void reward_entities(ProbabilityTable& table, const EntitySet& entities, double delta,
                     double p_min);

// Mutation feedback: queries that yielded mutants get their entities
// rewarded (with a larger step when a rarely fired rule was involved);
// queries that resisted mutation get them penalized.
void update_from_mutator(ProbabilityTable& table, RuleFrequencyTable& freq,
                         const EntitySet& entities, const std::vector<int>& fired_rules,
                         bool produced_mutants, const FeedbackParams& params = {});

// Validation feedback: entities of bug-triggering queries get a larger
// reward. No-op when no bug was found.
void update_from_validator(ProbabilityTable& table, const EntitySet& entities, bool bug_found,
                           const FeedbackParams& params = {});

// Invariant check used by tests: per-point sums are 1 and no alternative is
// below the floor.
bool probability_table_valid(const ProbabilityTable& table, double p_min, double eps = 1e-9);

}  // namespace eqperf
