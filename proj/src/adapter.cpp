#include "eqperf/adapter.hpp"

#include "eqperf/common.hpp"

namespace eqperf {

SampleSet DbAdapter::sample_values(const SchemaMetadata& schema, int per_column, uint64_t seed) {
    SampleSet out;
    for (const auto& t : schema.tables) {
        for (const auto& c : t.columns) {
            // A sorted DISTINCT prefix makes the candidate pool engine
            // independent; the subsample below is seeded, not engine driven.
            std::string sql = "SELECT DISTINCT " + c.name + " FROM " + t.name + " WHERE " +
                              c.name + " IS NOT NULL ORDER BY " + c.name + " LIMIT 200";
            ExecResult r = execute(sql, 30000);
            if (r.timed_out) continue;
            std::vector<Value> vals;
            for (auto& row : r.rows) {
                if (!row.empty()) vals.push_back(std::move(row[0]));
            }
            Rng rng(seed ^ fnv1a64(t.name + "." + c.name));
            while (static_cast<int>(vals.size()) > per_column) {
                vals.erase(vals.begin() + static_cast<ptrdiff_t>(rng.below(vals.size())));
            }
            if (vals.empty()) continue;
            ColumnSamples cs;
            cs.table = t.name;
            cs.column = c.name;
            cs.values = std::move(vals);
            out.columns.push_back(std::move(cs));
        }
    }
    return out;
}

}  // namespace eqperf
