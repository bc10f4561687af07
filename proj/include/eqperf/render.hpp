#pragma once

#include <string>

#include "eqperf/ir.hpp"

namespace eqperf {

enum class DialectFamily { Embedded, PostgresFamily };

// Concrete-syntax profile for one engine family. Differences live here:
// datetime literals, CAST type names, EXTRACT spelling, IS DISTINCT FROM,
// NULL typing, and how plans are explained.
struct Dialect {
    DialectFamily family = DialectFamily::Embedded;
    std::string name = "embedded";

    static Dialect embedded() { return {DialectFamily::Embedded, "embedded"}; }
    static Dialect postgres() { return {DialectFamily::PostgresFamily, "postgres-family"}; }
};

// Turns a logical plan into one executable SELECT statement (no trailing
// semicolon). Plans that cannot be expressed in the target dialect raise
// Error{UnsupportedConstruct}. Rendering is deterministic: same plan, same
// dialect, same text.
std::string render_sql(const LogicalPlan& plan, const Dialect& dialect);
inline std::string render_sql(const PlanPtr& plan, const Dialect& dialect) {
    return render_sql(LogicalPlan{plan}, dialect);
}

}  // namespace eqperf
