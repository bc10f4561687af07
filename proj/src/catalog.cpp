#include "eqperf/catalog.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>

#include "eqperf/adapter.hpp"
#include "eqperf/common.hpp"
#include "eqperf/rng.hpp"

namespace eqperf {

namespace {

const char* kDeptNames[] = {"ACCT",      "RESEARCH",  "SALES",       "OPERATIONS",
                            "MARKETING", "SUPPORT",   "LOGISTICS",   "FINANCE",
                            "HR",        "LEGAL",     "IT",          "FACILITIES",
                            "QA",        "PROCUREMENT", "DESIGN",    "SECURITY"};

const char* kJobs[] = {"Technical", "CLERK",     "SALESMAN", "MANAGER",
                       "ANALYST",   "PRESIDENT", "ENGINEER", "INTERN"};

const char* kNames[] = {"SMITH",  "ALLEN", "WARD",  "JONES", "MARTIN", "BLAKE", "CLARK", "SCOTT",
                        "KING",   "TURNER", "ADAMS", "JAMES", "FORD",  "MILLER", "HUNT",  "REED",
                        "COLE",   "PAGE",  "LANE",  "BOND",  "GRAY",   "HALE",  "NASH",  "YORK",
                        "DEAN",   "RHODES", "SLOAN", "TATE",  "VANCE", "WOLF",  "BARNES", "CRUZ",
                        "DIAZ",   "ELLIS", "FOX",   "GATES", "HAYES",  "IRWIN", "JOYCE", "KEATS"};

std::string random_timestamp(Rng& rng) {
    char buf[24];
    std::snprintf(buf, sizeof(buf), "%04d-%02d-%02d %02d:%02d:00",
                  static_cast<int>(rng.range_i(2015, 2023)), static_cast<int>(rng.range_i(1, 12)),
                  static_cast<int>(rng.range_i(1, 28)), static_cast<int>(rng.range_i(0, 23)),
                  static_cast<int>(rng.range_i(0, 59)));
    return buf;
}

// Salaries move in quarter steps so equality filters actually hit.
double random_salary(Rng& rng) { return static_cast<double>(rng.range_i(3200, 40000)) * 0.25; }

ColumnInfo column(std::string name, ValueType type, bool nullable, bool unique,
                  std::optional<int> len = std::nullopt) {
    ColumnInfo c;
    c.name = std::move(name);
    c.type = type;
    c.nullable = nullable;
    c.unique = unique;
    c.varchar_len = len;
    return c;
}

std::string csv_double(double v) {
    char buf[32];
    auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    std::string s(buf, end);
    if (s.find('.') == std::string::npos && s.find('e') == std::string::npos &&
        s.find("inf") == std::string::npos && s.find("nan") == std::string::npos)
        s += ".0";
    return s;
}

std::string csv_field(const Value& v) {
    std::string text;
    if (std::holds_alternative<std::monostate>(v)) return text;
    if (const auto* i = std::get_if<int64_t>(&v)) {
        text = std::to_string(*i);
    } else if (const auto* d = std::get_if<double>(&v)) {
        text = csv_double(*d);
    } else {
        text = std::get<std::string>(v);
    }
    if (text.find_first_of(",\"\n\r") != std::string::npos) {
        std::string quoted = "\"";
        for (char c : text) {
            if (c == '"') quoted += '"';
            quoted += c;
        }
        quoted += '"';
        return quoted;
    }
    return text;
}

std::string csv_row(const std::vector<Value>& row) {
    std::string out;
    for (size_t i = 0; i < row.size(); ++i) {
        if (i) out += ',';
        out += csv_field(row[i]);
    }
    out += '\n';
    return out;
}

std::string csv_header(const TableInfo& info) {
    std::string out;
    for (size_t i = 0; i < info.columns.size(); ++i) {
        if (i) out += ',';
        out += info.columns[i].name;
    }
    out += '\n';
    return out;
}

}  // namespace

const FixtureTable* Fixture::table(const std::string& name) const {
    for (const auto& t : tables)
        if (t.info.name == name) return &t;
    return nullptr;
}

Fixture build_fixture(double scale, uint64_t seed) {
    if (scale < 0.0) throw Error(ErrorKind::ConfigError, "fixture scale must be >= 0");
    Rng rng(seed);
    int64_t emp_rows = std::llround(490000.0 * scale);
    int64_t bonus_rows = std::llround(70000.0 * scale);
    int dept_rows = 0;
    if (scale > 0.0) {
        dept_rows = static_cast<int>(
            std::clamp<int64_t>(std::llround(16.0 * scale), 4, 16));
    }

    Fixture fx;

    FixtureTable dept;
    dept.info.name = "dept";
    dept.info.columns = {column("deptno", ValueType::Integer, false, true),
                         column("name", ValueType::String, true, false, 14)};
    dept.info.primary_key = "deptno";
    for (int i = 0; i < dept_rows; ++i) {
        dept.rows.push_back({int64_t{10} * (i + 1), std::string(kDeptNames[i])});
    }
    dept.info.row_count = static_cast<int64_t>(dept.rows.size());

    FixtureTable emp;
    emp.info.name = "emp";
    emp.info.columns = {column("empno", ValueType::Integer, false, true),
                        column("emp_pk", ValueType::Integer, false, true),
                        column("ename", ValueType::String, true, false, 10),
                        column("job", ValueType::String, true, false, 10),
                        column("hiredate", ValueType::Datetime, true, false),
                        column("sal", ValueType::Double, true, false),
                        column("deptno", ValueType::Integer, true, false)};
    emp.info.primary_key = "empno";
    emp.info.foreign_keys = {{"deptno", "dept", "deptno"}};
    for (int64_t i = 1; i <= emp_rows; ++i) {
        std::vector<Value> row;
        row.emplace_back(i);
        row.emplace_back(i);
        row.emplace_back(rng.chance(0.01) ? Value{} : Value{std::string(rng.pick(kNames))});
        row.emplace_back(rng.chance(0.01) ? Value{} : Value{std::string(rng.pick(kJobs))});
        row.emplace_back(rng.chance(0.005) ? Value{} : Value{random_timestamp(rng)});
        row.emplace_back(rng.chance(0.01) ? Value{} : Value{random_salary(rng)});
        if (dept_rows == 0 || rng.chance(0.02)) {
            row.emplace_back(Value{});
        } else {
            row.emplace_back(int64_t{10} * rng.range_i(1, dept_rows));
        }
        emp.rows.push_back(std::move(row));
    }
    emp.info.row_count = static_cast<int64_t>(emp.rows.size());

    FixtureTable bonus;
    bonus.info.name = "bonus";
    bonus.info.columns = {column("ename", ValueType::String, true, false, 10),
                          column("job", ValueType::String, true, false, 10),
                          column("sal", ValueType::Double, true, false)};
    for (int64_t i = 0; i < bonus_rows; ++i) {
        bonus.rows.push_back({std::string(rng.pick(kNames)), std::string(rng.pick(kJobs)),
                              rng.chance(0.10) ? Value{} : Value{random_salary(rng)}});
    }
    bonus.info.row_count = static_cast<int64_t>(bonus.rows.size());

    fx.tables.push_back(std::move(dept));
    fx.tables.push_back(std::move(emp));
    fx.tables.push_back(std::move(bonus));
    return fx;
}

std::vector<std::string> fixture_ddl(const Fixture& fixture, const Dialect&) {
    // INTEGER, DOUBLE PRECISION, VARCHAR(n) and TIMESTAMP parse identically
    // in both supported dialects.
    auto type_name = [](const ColumnInfo& c) -> std::string {
        switch (c.type) {
            case ValueType::Integer: return "INTEGER";
            case ValueType::Double: return "DOUBLE PRECISION";
            case ValueType::String:
                return c.varchar_len ? "VARCHAR(" + std::to_string(*c.varchar_len) + ")" : "TEXT";
            case ValueType::Datetime: return "TIMESTAMP";
            case ValueType::Boolean: return "BOOLEAN";
        }
        return "TEXT";
    };
    std::vector<std::string> out;
    for (const auto& t : fixture.tables) {
        std::string sql = "CREATE TABLE " + t.info.name + " (";
        bool first = true;
        for (const auto& c : t.info.columns) {
            if (!first) sql += ", ";
            first = false;
            sql += c.name + " " + type_name(c);
            if (!c.nullable) sql += " NOT NULL";
        }
        if (t.info.primary_key) {
            sql += ", PRIMARY KEY (" + *t.info.primary_key + ")";
        }
        for (const auto& c : t.info.columns) {
            bool in_pk = t.info.primary_key && *t.info.primary_key == c.name;
            if (c.unique && !in_pk) sql += ", UNIQUE (" + c.name + ")";
        }
        for (const auto& fk : t.info.foreign_keys) {
            sql += ", FOREIGN KEY (" + fk.column + ") REFERENCES " + fk.ref_table + " (" +
                   fk.ref_column + ")";
        }
        sql += ")";
        out.push_back(std::move(sql));
    }
    return out;
}

void load_fixture(DbAdapter& db, const Fixture& fixture) {
    SchemaMetadata existing = db.retrieve_metadata();
    for (const auto& t : fixture.tables) {
        if (existing.table(t.info.name)) {
            throw Error(ErrorKind::NonEmptyDatabase,
                        "table '" + t.info.name + "' already exists; refusing to load");
        }
    }
    for (const auto& stmt : fixture_ddl(fixture, db.dialect())) db.exec_raw(stmt);
    for (const auto& t : fixture.tables) {
        if (t.rows.empty()) continue;
        std::vector<std::string> cols;
        for (const auto& c : t.info.columns) cols.push_back(c.name);
        db.bulk_insert(t.info.name, cols, t.rows);
    }
    db.exec_raw("ANALYZE");
}

void write_fixture_csv(const Fixture& fixture, const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    for (const auto& t : fixture.tables) {
        std::ofstream out(dir / (t.info.name + ".csv"), std::ios::binary);
        if (!out) {
            throw Error(ErrorKind::IoError, "cannot write " + (dir / t.info.name).string());
        }
        out << csv_header(t.info);
        for (const auto& row : t.rows) out << csv_row(row);
    }
}

size_t fixture_csv_bytes(const Fixture& fixture) {
    size_t total = 0;
    for (const auto& t : fixture.tables) {
        total += csv_header(t.info).size();
        for (const auto& row : t.rows) total += csv_row(row).size();
    }
    return total;
}

}  // namespace eqperf
