#pragma once

// Shared helpers for the test suites. Include after doctest.h.

#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "eqperf/adapter.hpp"
#include "eqperf/catalog.hpp"
#include "eqperf/common.hpp"
#include "eqperf/ir.hpp"

namespace testutil {

using namespace eqperf;

// Schema of the synthetic workload without any rows.
inline SchemaMetadata fixture_schema() {
    Fixture fx = build_fixture(0.0, 1);
    SchemaMetadata md;
    for (const auto& t : fx.tables) md.tables.push_back(t.info);
    return md;
}

// Two small tables with datetime columns, for EXTRACT-based rule tests.
inline SchemaMetadata two_datetime_tables() {
    SchemaMetadata md;
    TableInfo t1;
    t1.name = "t1";
    t1.columns = {{"c1", ValueType::Datetime, true, false, std::nullopt},
                  {"k1", ValueType::Integer, false, true, std::nullopt}};
    t1.primary_key = "k1";
    TableInfo t2;
    t2.name = "t2";
    t2.columns = {{"c2", ValueType::Datetime, true, false, std::nullopt},
                  {"k2", ValueType::Integer, false, true, std::nullopt}};
    t2.primary_key = "k2";
    md.tables = {t1, t2};
    return md;
}

inline std::unique_ptr<DbAdapter> loaded_db(double scale, uint64_t seed = 1) {
    auto db = open_embedded(":memory:");
    load_fixture(*db, build_fixture(scale, seed));
    return db;
}

class TmpDir {
  public:
    TmpDir() {
        std::random_device rd;
        path_ = std::filesystem::temp_directory_path() /
                ("eqperf_test_" + std::to_string(rd()) + "_" + std::to_string(rd()));
        std::filesystem::create_directories(path_);
    }
    ~TmpDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    const std::filesystem::path& path() const { return path_; }

  private:
    std::filesystem::path path_;
};

// Scripted adapter: fixed duration and plan per statement, no real database.
class FakeAdapter : public DbAdapter {
  public:
    struct Script {
        double duration_ms = 1.0;
        std::string fingerprint = "plan";
        std::optional<double> cost;
        bool timed_out = false;
    };

    std::map<std::string, Script> scripts;
    // Optional override: (sql, zero-based execute index) -> duration.
    std::function<double(const std::string&, int)> duration_hook;
    std::vector<std::string> exec_log;
    std::vector<std::string> explain_log;
    bool with_costs = false;

    const Dialect& dialect() const override { return dia_; }
    std::string name() const override { return "scripted"; }
    bool supports_cost_estimates() const override { return with_costs; }

    ExecResult execute(const std::string& sql, int) override {
        const Script& s = script_for(sql);
        ExecResult r;
        r.duration_ms = duration_hook ? duration_hook(sql, static_cast<int>(exec_log.size())) :
                                        s.duration_ms;
        r.timed_out = s.timed_out;
        exec_log.push_back(sql);
        return r;
    }

    PlanInfo explain(const std::string& sql, int) override {
        const Script& s = script_for(sql);
        explain_log.push_back(sql);
        return {s.fingerprint, s.fingerprint, s.cost};
    }

    void exec_raw(const std::string&) override {}
    void bulk_insert(const std::string&, const std::vector<std::string>&,
                     const std::vector<std::vector<Value>>&) override {
        throw Error(ErrorKind::ExecutionError, "scripted adapter holds no data");
    }
    SchemaMetadata retrieve_metadata() override { return {}; }

  private:
    const Script& script_for(const std::string& sql) {
        auto it = scripts.find(sql);
        if (it == scripts.end())
            throw Error(ErrorKind::ExecutionError, "no script for: " + sql);
        return it->second;
    }

    Dialect dia_ = Dialect::embedded();
};

// Decorator that forwards everything and tampers with reported durations:
// the first `perturb_calls` executions appear `factor` times slower.
class PerturbShim : public DbAdapter {
  public:
    PerturbShim(DbAdapter& inner, int perturb_calls, double factor)
        : inner_(inner), remaining_(perturb_calls), factor_(factor) {}

    int execute_calls = 0;
    int explain_calls = 0;

    const Dialect& dialect() const override { return inner_.dialect(); }
    std::string name() const override { return inner_.name(); }
    bool supports_cost_estimates() const override { return inner_.supports_cost_estimates(); }

    ExecResult execute(const std::string& sql, int timeout_ms) override {
        ++execute_calls;
        ExecResult r = inner_.execute(sql, timeout_ms);
        if (remaining_ > 0) {
            --remaining_;
            r.duration_ms *= factor_;
        }
        return r;
    }
    PlanInfo explain(const std::string& sql, int timeout_ms) override {
        ++explain_calls;
        return inner_.explain(sql, timeout_ms);
    }
    void exec_raw(const std::string& sql) override { inner_.exec_raw(sql); }
    void bulk_insert(const std::string& t, const std::vector<std::string>& c,
                     const std::vector<std::vector<Value>>& r) override {
        inner_.bulk_insert(t, c, r);
    }
    SchemaMetadata retrieve_metadata() override { return inner_.retrieve_metadata(); }

  private:
    DbAdapter& inner_;
    int remaining_;
    double factor_;
};

}  // namespace testutil
