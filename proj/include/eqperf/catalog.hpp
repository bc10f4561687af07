#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "eqperf/render.hpp"
#include "eqperf/schema.hpp"
#include "eqperf/value.hpp"

namespace eqperf {

class DbAdapter;

struct FixtureTable {
    TableInfo info;
    std::vector<std::vector<Value>> rows;
};

struct Fixture {
    std::vector<FixtureTable> tables;
    const FixtureTable* table(const std::string& name) const;
};

// Deterministic synthetic workload: a small department lookup table, a large
// employee fact table and a mid-sized bonus table. At scale 1.0 the CSV dump
// lands near 30 MB; scale 0 produces the schema with no rows. The same seed
// and scale always yield byte-identical data.
Fixture build_fixture(double scale, uint64_t seed);

// CREATE TABLE statements in dependency order.
std::vector<std::string> fixture_ddl(const Fixture& fixture, const Dialect& dialect);

// Refuses to touch a database that already contains any fixture table.
// Runs the DDL, bulk-loads every table and refreshes optimizer statistics.
void load_fixture(DbAdapter& db, const Fixture& fixture);

// One CSV file per table (RFC 4180, header row, empty field for NULL).
void write_fixture_csv(const Fixture& fixture, const std::filesystem::path& dir);

// Size of the CSV dump without writing it.
size_t fixture_csv_bytes(const Fixture& fixture);

}  // namespace eqperf
