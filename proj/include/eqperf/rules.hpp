#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "eqperf/ir.hpp"

namespace eqperf {

// A rewrite rule: fires at a node when `condition` holds there, producing an
// equivalent node via `transform`. Structure rules fire at the first matching
// node (top-down); expression rules rewrite every matching site in one
// application.
struct MutationRule {
    int id = 0;
    std::string name;
    std::string summary;
    bool expression_rule = false;
    // Sound at a site only if nothing above references the site's outputs by
    // source column; the applier checks the whole tree and skips sites where
    // that fails instead of treating the failure as a rule bug.
    bool context_sensitive = false;
    std::function<bool(const PlanPtr&, const SchemaMetadata&)> condition;
    std::function<PlanPtr(const PlanPtr&, const SchemaMetadata&)> transform;
};

const std::vector<MutationRule>& rule_catalog();
const MutationRule* find_rule(int id);

// Applies one rule to the tree. Returns nothing when no site matched.
// A fired rule's output is re-validated; an invalid result raises
// Error{RuleProducedInvalidPlan} since that is a rule implementation bug.
std::optional<PlanPtr> apply_rule(const PlanPtr& plan, const MutationRule& rule,
                                  const SchemaMetadata& schema);

// Shared analysis helpers (also used by tests).
bool provably_empty(const PlanPtr& p);
bool provably_non_null(const ExprPtr& e, const Scope& scope);
std::vector<ExprPtr> conjuncts(const ExprPtr& e);
ExprPtr conjoin(std::vector<ExprPtr> parts);

}  // namespace eqperf
