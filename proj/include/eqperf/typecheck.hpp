#pragma once

#include <string>
#include <vector>

#include "eqperf/ir.hpp"

namespace eqperf {

struct TypeCheckResult {
    bool ok = true;
    std::vector<std::string> diagnostics;  // "where: what", one per problem
};

// Full-tree validation: scans match the schema, every column reference
// resolves, operand types line up, aggregate calls stay inside Aggregate
// nodes, scan aliases are unique, union arms agree on arity and types.
TypeCheckResult type_check(const LogicalPlan& plan, const SchemaMetadata& schema);

}  // namespace eqperf
