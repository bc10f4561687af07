#pragma once

#include <vector>

#include "eqperf/ir.hpp"
#include "eqperf/rng.hpp"
#include "eqperf/rules.hpp"
#include "eqperf/schema.hpp"

namespace eqperf {

struct Mutant {
    PlanPtr plan;
    std::vector<int> fired_rule_ids;
};

struct MutatorParams {
    int attempts = 20;
};

// One pass over the tree: each rule in `order` is offered the current tree in
// turn, and a firing rule's output becomes the input of the next rule.
Mutant mutate_tree(const PlanPtr& origin, const std::vector<const MutationRule*>& order,
                   const SchemaMetadata& schema);

// Runs `attempts` passes, each with a freshly shuffled rule order, and keeps
// the distinct results (trees identical to the origin or to an earlier mutant
// are dropped).
std::vector<Mutant> mutate_query(const PlanPtr& origin, const SchemaMetadata& schema, Rng& rng,
                                 const MutatorParams& params = {});

// Splits the topmost filter into p / NOT p / p IS NULL branches and unions
// them back together; the three predicates partition every row, so the union
// restores the original result. Reported under this pseudo rule id.
constexpr int kTernaryPartitionRuleId = 999;

// Requires the filter to sit under projections (and at most a dedup) only;
// a Sort, Limit, Aggregate or Union above it does not distribute over the
// partition, and such plans raise Error{NotPartitionable}.
Mutant ternary_partition(const PlanPtr& origin, const SchemaMetadata& schema);

}  // namespace eqperf
