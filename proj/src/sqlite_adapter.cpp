#include <sqlite3.h>

#include <algorithm>
#include <chrono>
#include <cctype>

#include "eqperf/adapter.hpp"
#include "eqperf/common.hpp"

namespace eqperf {

namespace {

using Clock = std::chrono::steady_clock;

struct TimeoutCtl {
    Clock::time_point deadline;
    bool expired = false;
};

int progress_cb(void* ud) {
    auto* ctl = static_cast<TimeoutCtl*>(ud);
    if (Clock::now() >= ctl->deadline) {
        ctl->expired = true;
        return 1;  // interrupt the statement
    }
    return 0;
}

ValueType parse_declared_type(const std::string& declared, std::optional<int>& varchar_len) {
    std::string up;
    for (char c : declared) up += static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
    auto has = [&](const char* s) { return up.find(s) != std::string::npos; };
    if (has("TIMESTAMP") || has("DATE")) return ValueType::Datetime;
    if (has("BOOL")) return ValueType::Boolean;
    if (has("INT")) return ValueType::Integer;
    if (has("CHAR") || has("CLOB") || has("TEXT")) {
        auto lp = up.find('(');
        auto rp = up.find(')');
        if (lp != std::string::npos && rp != std::string::npos && rp > lp + 1) {
            try {
                varchar_len = std::stoi(up.substr(lp + 1, rp - lp - 1));
            } catch (...) {
            }
        }
        return ValueType::String;
    }
    if (has("DOUB") || has("REAL") || has("FLOA")) return ValueType::Double;
    throw Error(ErrorKind::UnsupportedType, "column type '" + declared + "' is not supported");
}

class SqliteAdapter final : public DbAdapter {
  public:
    explicit SqliteAdapter(const std::string& path) : dialect_(Dialect::embedded()) {
        if (sqlite3_open(path.c_str(), &db_) != SQLITE_OK) {
            std::string msg = db_ ? sqlite3_errmsg(db_) : "out of memory";
            if (db_) sqlite3_close(db_);
            db_ = nullptr;
            throw Error(ErrorKind::ConnectionError, "cannot open '" + path + "': " + msg);
        }
    }

    ~SqliteAdapter() override {
        if (db_) sqlite3_close(db_);
    }

    const Dialect& dialect() const override { return dialect_; }
    std::string name() const override { return "embedded"; }
    bool supports_cost_estimates() const override { return false; }

    ExecResult execute(const std::string& sql, int timeout_ms) override {
        TimeoutCtl ctl{Clock::now() + std::chrono::milliseconds(timeout_ms)};
        sqlite3_progress_handler(db_, 4000, progress_cb, &ctl);
        auto t0 = Clock::now();

        sqlite3_stmt* stmt = nullptr;
        int rc = sqlite3_prepare_v2(db_, sql.c_str(), -1, &stmt, nullptr);
        if (rc != SQLITE_OK) {
            std::string msg = sqlite3_errmsg(db_);
            sqlite3_progress_handler(db_, 0, nullptr, nullptr);
            throw Error(ErrorKind::SyntaxError, "prepare failed: " + msg + " in: " + sql);
        }

        ExecResult res;
        int ncol = sqlite3_column_count(stmt);
        for (int i = 0; i < ncol; ++i) {
            const char* cn = sqlite3_column_name(stmt, i);
            res.column_names.push_back(cn ? cn : "");
        }
        while ((rc = sqlite3_step(stmt)) == SQLITE_ROW) {
            std::vector<Value> row;
            row.reserve(ncol);
            for (int i = 0; i < ncol; ++i) {
                switch (sqlite3_column_type(stmt, i)) {
                    case SQLITE_INTEGER:
                        row.emplace_back(static_cast<int64_t>(sqlite3_column_int64(stmt, i)));
                        break;
                    case SQLITE_FLOAT: row.emplace_back(sqlite3_column_double(stmt, i)); break;
                    case SQLITE_NULL: row.emplace_back(); break;
                    default: {
                        const unsigned char* txt = sqlite3_column_text(stmt, i);
                        int n = sqlite3_column_bytes(stmt, i);
                        row.emplace_back(std::string(reinterpret_cast<const char*>(txt),
                                                     static_cast<size_t>(n)));
                        break;
                    }
                }
            }
            res.rows.push_back(std::move(row));
        }
        sqlite3_finalize(stmt);
        sqlite3_progress_handler(db_, 0, nullptr, nullptr);
        res.duration_ms =
            std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
        if (rc != SQLITE_DONE) {
            if (ctl.expired) {
                res.rows.clear();
                res.timed_out = true;
                return res;
            }
            throw Error(ErrorKind::ExecutionError,
                        std::string("execution failed: ") + sqlite3_errmsg(db_));
        }
        return res;
    }

    PlanInfo explain(const std::string& sql, int timeout_ms) override {
        ExecResult r;
        try {
            r = execute("EXPLAIN QUERY PLAN " + sql, timeout_ms);
        } catch (const Error& e) {
            throw Error(ErrorKind::ExplainFailed, std::string("explain failed: ") + e.what());
        }
        if (r.timed_out) throw Error(ErrorKind::ExplainFailed, "explain timed out");
        PlanInfo info;
        std::vector<std::string> details;
        for (const auto& row : r.rows) {
            // id, parent, notused, detail
            std::string line;
            if (row.size() >= 4) {
                if (const auto* s = std::get_if<std::string>(&row[3])) line = *s;
            }
            if (!line.empty()) details.push_back(line);
        }
        info.fingerprint = join(details, "\n");
        info.raw = info.fingerprint;
        return info;
    }

    void exec_raw(const std::string& sql) override {
        char* errmsg = nullptr;
        if (sqlite3_exec(db_, sql.c_str(), nullptr, nullptr, &errmsg) != SQLITE_OK) {
            std::string msg = errmsg ? errmsg : "unknown error";
            sqlite3_free(errmsg);
            throw Error(ErrorKind::ExecutionError, "statement failed: " + msg + " in: " + sql);
        }
    }

    void bulk_insert(const std::string& table, const std::vector<std::string>& columns,
                     const std::vector<std::vector<Value>>& rows) override {
        std::string sql = "INSERT INTO " + table + " (" + join(columns, ", ") + ") VALUES (";
        for (size_t i = 0; i < columns.size(); ++i) sql += i ? ",?" : "?";
        sql += ")";
        sqlite3_stmt* stmt = nullptr;
        if (sqlite3_prepare_v2(db_, sql.c_str(), -1, &stmt, nullptr) != SQLITE_OK) {
            throw Error(ErrorKind::ExecutionError,
                        std::string("insert prepare failed: ") + sqlite3_errmsg(db_));
        }
        exec_raw("BEGIN");
        for (const auto& row : rows) {
            for (size_t i = 0; i < row.size(); ++i) {
                int idx = static_cast<int>(i) + 1;
                std::visit(
                    [&](const auto& v) {
                        using T = std::decay_t<decltype(v)>;
                        if constexpr (std::is_same_v<T, int64_t>) {
                            sqlite3_bind_int64(stmt, idx, v);
                        } else if constexpr (std::is_same_v<T, double>) {
                            sqlite3_bind_double(stmt, idx, v);
                        } else if constexpr (std::is_same_v<T, std::string>) {
                            sqlite3_bind_text(stmt, idx, v.c_str(), static_cast<int>(v.size()),
                                              SQLITE_TRANSIENT);
                        } else {
                            sqlite3_bind_null(stmt, idx);
                        }
                    },
                    row[i]);
            }
            if (sqlite3_step(stmt) != SQLITE_DONE) {
                std::string msg = sqlite3_errmsg(db_);
                sqlite3_finalize(stmt);
                exec_raw("ROLLBACK");
                throw Error(ErrorKind::ExecutionError, "insert failed: " + msg);
            }
            sqlite3_reset(stmt);
        }
        sqlite3_finalize(stmt);
        exec_raw("COMMIT");
    }

    SchemaMetadata retrieve_metadata() override {
        SchemaMetadata md;
        ExecResult tables = execute(
            "SELECT name FROM sqlite_master WHERE type='table' AND name NOT LIKE 'sqlite_%' "
            "ORDER BY name",
            30000);
        for (const auto& trow : tables.rows) {
            const std::string& tname = std::get<std::string>(trow[0]);
            TableInfo info;
            info.name = tname;

            ExecResult cols = execute("PRAGMA table_info(" + tname + ")", 30000);
            int pk_cols = 0;
            std::string pk_name;
            for (const auto& crow : cols.rows) {
                // cid, name, type, notnull, dflt_value, pk
                ColumnInfo c;
                c.name = std::get<std::string>(crow[1]);
                c.type = parse_declared_type(std::get<std::string>(crow[2]), c.varchar_len);
                c.nullable = std::get<int64_t>(crow[3]) == 0;
                if (std::get<int64_t>(crow[5]) > 0) {
                    ++pk_cols;
                    pk_name = c.name;
                }
                info.columns.push_back(std::move(c));
            }
            if (pk_cols == 1) {
                info.primary_key = pk_name;
                for (auto& c : info.columns) {
                    if (c.name == pk_name) {
                        c.unique = true;
                        c.nullable = false;
                    }
                }
            }

            ExecResult idx = execute("PRAGMA index_list(" + tname + ")", 30000);
            for (const auto& irow : idx.rows) {
                // seq, name, unique, origin, partial
                if (std::get<int64_t>(irow[2]) != 1) continue;
                const std::string& iname = std::get<std::string>(irow[1]);
                ExecResult icols = execute("PRAGMA index_info(" + iname + ")", 30000);
                if (icols.rows.size() != 1) continue;  // composite: no single column is unique
                const std::string& cname = std::get<std::string>(icols.rows[0][2]);
                for (auto& c : info.columns) {
                    if (c.name == cname) c.unique = true;
                }
            }

            ExecResult fks = execute("PRAGMA foreign_key_list(" + tname + ")", 30000);
            for (const auto& frow : fks.rows) {
                // id, seq, table, from, to, ...
                ForeignKey fk;
                fk.ref_table = std::get<std::string>(frow[2]);
                fk.column = std::get<std::string>(frow[3]);
                if (const auto* to = std::get_if<std::string>(&frow[4])) fk.ref_column = *to;
                info.foreign_keys.push_back(std::move(fk));
            }

            ExecResult cnt = execute("SELECT COUNT(*) FROM " + tname, 30000);
            if (!cnt.rows.empty()) info.row_count = std::get<int64_t>(cnt.rows[0][0]);

            md.tables.push_back(std::move(info));
        }
        return md;
    }

  private:
    sqlite3* db_ = nullptr;
    Dialect dialect_;
};

}  // namespace

std::unique_ptr<DbAdapter> open_embedded(const std::string& path) {
    return std::make_unique<SqliteAdapter>(path);
}

}  // namespace eqperf
