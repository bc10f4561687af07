#pragma once

#include "eqperf/grammar.hpp"
#include "eqperf/ir.hpp"
#include "eqperf/rng.hpp"
#include "eqperf/schema.hpp"

namespace eqperf {

struct GenParams {
    int max_join_depth = 3;  // join nodes per FROM tree
    int max_retries = 20;    // attempts before giving up on a valid plan
    int max_limit = 100;
    int max_group_keys = 2;
    int max_aggs = 2;
};

// Builds one random, type-correct logical plan. Sampling is driven entirely
// by `rng` and the probability table, so a fixed seed reproduces the same
// plan. Sorts are always made total (tie-breaker keys over the remaining
// output columns) so a LIMIT above them selects a deterministic row set.
// Throws Error{GenerationExhausted} when no valid plan emerges within the
// retry budget.
LogicalPlan build_specification(const SchemaMetadata& schema, const SampleSet& samples,
                                const ProbabilityTable& prob, Rng& rng,
                                const GenParams& params = {});

// Grammar features present in a plan, for probability-table feedback.
// Tie-breaker sort keys are ignored: they are plumbing, not query intent.
EntitySet extract_entities(const LogicalPlan& plan);

}  // namespace eqperf
