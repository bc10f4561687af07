#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "eqperf/render.hpp"
#include "eqperf/rng.hpp"
#include "eqperf/schema.hpp"
#include "eqperf/value.hpp"

namespace eqperf {

struct ExecResult {
    std::vector<std::vector<Value>> rows;
    std::vector<std::string> column_names;
    double duration_ms = 0.0;
    bool timed_out = false;  // rows are meaningless when set
};

struct PlanInfo {
    std::string raw;          // engine's own plan rendering
    std::string fingerprint;  // stable digest of the plan shape
    std::optional<double> cost;
};

class DbAdapter {
  public:
    virtual ~DbAdapter() = default;

    virtual const Dialect& dialect() const = 0;
    virtual std::string name() const = 0;
    virtual bool supports_cost_estimates() const = 0;

    virtual ExecResult execute(const std::string& sql, int timeout_ms) = 0;
    virtual PlanInfo explain(const std::string& sql, int timeout_ms) = 0;

    // Statement with no interesting result (DDL, ANALYZE).
    virtual void exec_raw(const std::string& sql) = 0;
    virtual void bulk_insert(const std::string& table, const std::vector<std::string>& columns,
                             const std::vector<std::vector<Value>>& rows) = 0;

    virtual SchemaMetadata retrieve_metadata() = 0;

    // Distinct non-null values per column, capped and deterministically
    // subsampled so generation stays reproducible across engines.
    SampleSet sample_values(const SchemaMetadata& schema, int per_column, uint64_t seed);
};

std::unique_ptr<DbAdapter> open_embedded(const std::string& path);

struct PgConnParams {
    std::string host = "127.0.0.1";
    int port = 5432;
    std::string user = "postgres";
    std::string password;
    std::string database = "postgres";
};

PgConnParams parse_pg_conn(const std::string& conn);
std::unique_ptr<DbAdapter> open_postgres_family(const PgConnParams& params);

}  // namespace eqperf
