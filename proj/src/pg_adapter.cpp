#include <netdb.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <sys/socket.h>
#include <unistd.h>

#include <chrono>
#include <cstring>
#include <regex>

#include "eqperf/adapter.hpp"
#include "eqperf/common.hpp"
#include "eqperf/pg_proto.hpp"

namespace eqperf {

namespace {

using Clock = std::chrono::steady_clock;

// Type oids that arrive as numeric text in the simple query protocol.
bool oid_is_integer(int32_t oid) { return oid == 20 || oid == 21 || oid == 23 || oid == 26; }
bool oid_is_float(int32_t oid) { return oid == 700 || oid == 701 || oid == 1700; }
bool oid_is_bool(int32_t oid) { return oid == 16; }

Value text_to_value(const std::string& text, int32_t oid) {
    if (oid_is_integer(oid)) {
        try {
            return static_cast<int64_t>(std::stoll(text));
        } catch (...) {
            return text;
        }
    }
    if (oid_is_float(oid)) {
        try {
            return std::stod(text);
        } catch (...) {
            return text;
        }
    }
    if (oid_is_bool(oid)) return static_cast<int64_t>(text == "t" ? 1 : 0);
    return text;
}

struct QueryResponse {
    std::vector<pgwire::FieldDesc> fields;
    std::vector<std::vector<std::optional<std::string>>> rows;
    std::map<char, std::string> error;  // empty when the query succeeded
};

class PgAdapter final : public DbAdapter {
  public:
    explicit PgAdapter(const PgConnParams& params)
        : params_(params), dialect_(Dialect::postgres()) {
        connect_socket();
        handshake();
    }

    ~PgAdapter() override {
        if (fd_ >= 0) {
            auto bye = pgwire::build_terminate();
            (void)::send(fd_, bye.data(), bye.size(), MSG_NOSIGNAL);
            ::close(fd_);
        }
    }

    const Dialect& dialect() const override { return dialect_; }
    std::string name() const override { return "postgres-family"; }
    bool supports_cost_estimates() const override { return true; }

    ExecResult execute(const std::string& sql, int timeout_ms) override {
        set_statement_timeout(timeout_ms);
        auto t0 = Clock::now();
        QueryResponse qr = simple_query(sql);
        double ms = std::chrono::duration<double, std::milli>(Clock::now() - t0).count();

        ExecResult res;
        res.duration_ms = ms;
        if (!qr.error.empty()) {
            std::string state = qr.error.count('C') ? qr.error.at('C') : "";
            std::string message = qr.error.count('M') ? qr.error.at('M') : "query failed";
            if (state == "57014") {  // query_canceled: statement_timeout fired
                res.timed_out = true;
                return res;
            }
            if (state.rfind("42", 0) == 0) {
                throw Error(ErrorKind::SyntaxError, message + " in: " + sql);
            }
            throw Error(ErrorKind::ExecutionError, message + " [" + state + "] in: " + sql);
        }
        for (const auto& f : qr.fields) res.column_names.push_back(f.name);
        for (const auto& raw : qr.rows) {
            std::vector<Value> row;
            row.reserve(raw.size());
            for (size_t i = 0; i < raw.size(); ++i) {
                if (!raw[i]) {
                    row.emplace_back();
                } else {
                    int32_t oid = i < qr.fields.size() ? qr.fields[i].type_oid : 25;
                    row.push_back(text_to_value(*raw[i], oid));
                }
            }
            res.rows.push_back(std::move(row));
        }
        return res;
    }

    PlanInfo explain(const std::string& sql, int timeout_ms) override {
        set_statement_timeout(timeout_ms);
        QueryResponse qr = simple_query("EXPLAIN " + sql);
        if (!qr.error.empty()) {
            std::string message = qr.error.count('M') ? qr.error.at('M') : "explain failed";
            throw Error(ErrorKind::ExplainFailed, message);
        }
        std::vector<std::string> lines;
        for (const auto& row : qr.rows) {
            if (!row.empty() && row[0]) lines.push_back(*row[0]);
        }
        PlanInfo info;
        info.raw = join(lines, "\n");
        // First line carries the plan total: "... (cost=N.NN..M.MM rows=...)"
        static const std::regex cost_re(R"(cost=([0-9.]+)\.\.([0-9.]+))");
        std::smatch m;
        if (!lines.empty() && std::regex_search(lines[0], m, cost_re)) {
            try {
                info.cost = std::stod(m[2]);
            } catch (...) {
            }
        }
        // Shape digest: drop volatile per-node estimates.
        static const std::regex annot_re(R"(\s*\((cost|actual)[^)]*\))");
        std::vector<std::string> stripped;
        for (const auto& l : lines) stripped.push_back(std::regex_replace(l, annot_re, ""));
        info.fingerprint = join(stripped, "\n");
        return info;
    }

    void exec_raw(const std::string& sql) override {
        QueryResponse qr = simple_query(sql);
        if (!qr.error.empty()) {
            std::string message = qr.error.count('M') ? qr.error.at('M') : "statement failed";
            throw Error(ErrorKind::ExecutionError, message + " in: " + sql);
        }
    }

    void bulk_insert(const std::string& table, const std::vector<std::string>& columns,
                     const std::vector<std::vector<Value>>& rows) override {
        const size_t batch = 500;
        for (size_t start = 0; start < rows.size(); start += batch) {
            std::string sql = "INSERT INTO " + table + " (" + join(columns, ", ") + ") VALUES ";
            size_t end = std::min(rows.size(), start + batch);
            for (size_t r = start; r < end; ++r) {
                if (r > start) sql += ",";
                sql += "(";
                for (size_t i = 0; i < rows[r].size(); ++i) {
                    if (i) sql += ",";
                    sql += literal_sql(rows[r][i]);
                }
                sql += ")";
            }
            exec_raw(sql);
        }
    }

    SchemaMetadata retrieve_metadata() override {
        SchemaMetadata md;
        ExecResult tables = execute(
            "SELECT table_name FROM information_schema.tables "
            "WHERE table_schema='public' AND table_type='BASE TABLE' ORDER BY table_name",
            60000);
        for (const auto& trow : tables.rows) {
            const std::string& tname = std::get<std::string>(trow[0]);
            TableInfo info;
            info.name = tname;

            ExecResult cols = execute(
                "SELECT column_name, data_type, is_nullable, character_maximum_length "
                "FROM information_schema.columns WHERE table_schema='public' AND table_name='" +
                    tname + "' ORDER BY ordinal_position",
                60000);
            for (const auto& crow : cols.rows) {
                ColumnInfo c;
                c.name = std::get<std::string>(crow[0]);
                c.type = map_pg_type(std::get<std::string>(crow[1]), tname + "." + c.name);
                c.nullable = std::get<std::string>(crow[2]) == "YES";
                if (const auto* len = std::get_if<int64_t>(&crow[3])) {
                    c.varchar_len = static_cast<int>(*len);
                }
                info.columns.push_back(std::move(c));
            }

            ExecResult keys = execute(
                "SELECT tc.constraint_name, tc.constraint_type, kcu.column_name "
                "FROM information_schema.table_constraints tc "
                "JOIN information_schema.key_column_usage kcu "
                "ON tc.constraint_name = kcu.constraint_name AND tc.table_schema = kcu.table_schema "
                "WHERE tc.table_schema='public' AND tc.table_name='" +
                    tname +
                    "' AND tc.constraint_type IN ('PRIMARY KEY','UNIQUE') "
                    "ORDER BY tc.constraint_name, kcu.ordinal_position",
                60000);
            std::map<std::string, std::vector<std::pair<std::string, std::string>>> by_constraint;
            for (const auto& krow : keys.rows) {
                by_constraint[std::get<std::string>(krow[0])].push_back(
                    {std::get<std::string>(krow[1]), std::get<std::string>(krow[2])});
            }
            for (const auto& [cname, members] : by_constraint) {
                if (members.size() != 1) continue;  // composite keys give no single-column guarantee
                const auto& [ctype, colname] = members[0];
                for (auto& c : info.columns) {
                    if (c.name != colname) continue;
                    c.unique = true;
                    if (ctype == "PRIMARY KEY") {
                        c.nullable = false;
                        info.primary_key = colname;
                    }
                }
            }

            ExecResult fks = execute(
                "SELECT kcu.column_name, ccu.table_name, ccu.column_name "
                "FROM information_schema.table_constraints tc "
                "JOIN information_schema.key_column_usage kcu "
                "ON tc.constraint_name = kcu.constraint_name AND tc.table_schema = kcu.table_schema "
                "JOIN information_schema.constraint_column_usage ccu "
                "ON tc.constraint_name = ccu.constraint_name AND tc.table_schema = ccu.table_schema "
                "WHERE tc.table_schema='public' AND tc.table_name='" +
                    tname + "' AND tc.constraint_type='FOREIGN KEY'",
                60000);
            for (const auto& frow : fks.rows) {
                info.foreign_keys.push_back({std::get<std::string>(frow[0]),
                                             std::get<std::string>(frow[1]),
                                             std::get<std::string>(frow[2])});
            }

            ExecResult cnt = execute("SELECT COUNT(*) FROM " + tname, 60000);
            if (!cnt.rows.empty()) info.row_count = std::get<int64_t>(cnt.rows[0][0]);
            md.tables.push_back(std::move(info));
        }
        return md;
    }

  private:
    void connect_socket() {
        struct addrinfo hints;
        std::memset(&hints, 0, sizeof(hints));
        hints.ai_family = AF_UNSPEC;
        hints.ai_socktype = SOCK_STREAM;
        struct addrinfo* res = nullptr;
        std::string port = std::to_string(params_.port);
        int rc = ::getaddrinfo(params_.host.c_str(), port.c_str(), &hints, &res);
        if (rc != 0 || !res) {
            throw Error(ErrorKind::ConnectionError,
                        "cannot resolve " + params_.host + ": " + gai_strerror(rc));
        }
        int fd = -1;
        for (auto* ai = res; ai; ai = ai->ai_next) {
            fd = ::socket(ai->ai_family, ai->ai_socktype, ai->ai_protocol);
            if (fd < 0) continue;
            if (::connect(fd, ai->ai_addr, ai->ai_addrlen) == 0) break;
            ::close(fd);
            fd = -1;
        }
        ::freeaddrinfo(res);
        if (fd < 0) {
            throw Error(ErrorKind::ConnectionError,
                        "cannot connect to " + params_.host + ":" + port);
        }
        int one = 1;
        ::setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof(one));
        struct timeval tv{120, 0};  // stall guard; statement timeouts are server-side
        ::setsockopt(fd, SOL_SOCKET, SO_RCVTIMEO, &tv, sizeof(tv));
        fd_ = fd;
    }

    void send_all(const std::vector<uint8_t>& data) {
        size_t sent = 0;
        while (sent < data.size()) {
            ssize_t n = ::send(fd_, data.data() + sent, data.size() - sent, MSG_NOSIGNAL);
            if (n <= 0) throw Error(ErrorKind::ConnectionError, "connection lost while sending");
            sent += static_cast<size_t>(n);
        }
    }

    pgwire::Message read_message() {
        while (true) {
            if (auto m = reader_.next()) return *m;
            uint8_t buf[65536];
            ssize_t n = ::recv(fd_, buf, sizeof(buf), 0);
            if (n <= 0) {
                throw Error(ErrorKind::ConnectionError, "connection lost while reading");
            }
            reader_.feed(buf, static_cast<size_t>(n));
        }
    }

    void handshake() {
        send_all(pgwire::build_startup(params_.user, params_.database));
        while (true) {
            pgwire::Message m = read_message();
            if (m.type == 'R') {
                uint8_t salt[4] = {0, 0, 0, 0};
                int32_t code = pgwire::parse_auth_request(m.payload, salt);
                if (code == 0) continue;
                if (code == 3) {
                    send_all(pgwire::build_password(params_.password));
                } else if (code == 5) {
                    send_all(pgwire::build_password(
                        pgwire::md5_password_response(params_.user, params_.password, salt)));
                } else {
                    throw Error(ErrorKind::ConnectionError,
                                "unsupported authentication method " + std::to_string(code));
                }
            } else if (m.type == 'E') {
                auto fields = pgwire::parse_error_fields(m.payload);
                throw Error(ErrorKind::ConnectionError,
                            "server refused connection: " +
                                (fields.count('M') ? fields.at('M') : "unknown error"));
            } else if (m.type == 'Z') {
                return;  // ReadyForQuery
            }
            // ParameterStatus, BackendKeyData, notices: ignore.
        }
    }

    QueryResponse simple_query(const std::string& sql) {
        send_all(pgwire::build_query(sql));
        QueryResponse qr;
        while (true) {
            pgwire::Message m = read_message();
            switch (m.type) {
                case 'T': qr.fields = pgwire::parse_row_description(m.payload); break;
                case 'D': qr.rows.push_back(pgwire::parse_data_row(m.payload)); break;
                case 'E':
                    if (qr.error.empty()) qr.error = pgwire::parse_error_fields(m.payload);
                    break;
                case 'Z': return qr;
                default: break;  // CommandComplete, notices, EmptyQueryResponse
            }
        }
    }

    void set_statement_timeout(int timeout_ms) {
        if (timeout_ms == current_timeout_ms_) return;
        QueryResponse qr =
            simple_query("SET statement_timeout = " + std::to_string(timeout_ms));
        if (!qr.error.empty()) {
            throw Error(ErrorKind::ExecutionError, "cannot set statement_timeout");
        }
        current_timeout_ms_ = timeout_ms;
    }

    static ValueType map_pg_type(const std::string& data_type, const std::string& where) {
        if (data_type == "integer" || data_type == "bigint" || data_type == "smallint")
            return ValueType::Integer;
        if (data_type == "double precision" || data_type == "real" || data_type == "numeric")
            return ValueType::Double;
        if (data_type == "character varying" || data_type == "character" || data_type == "text")
            return ValueType::String;
        if (data_type.rfind("timestamp", 0) == 0 || data_type == "date")
            return ValueType::Datetime;
        if (data_type == "boolean") return ValueType::Boolean;
        throw Error(ErrorKind::UnsupportedType,
                    "column type '" + data_type + "' at " + where + " is not supported");
    }

    static std::string literal_sql(const Value& v) {
        if (std::holds_alternative<std::monostate>(v)) return "NULL";
        if (const auto* i = std::get_if<int64_t>(&v)) return std::to_string(*i);
        if (const auto* d = std::get_if<double>(&v)) {
            char buf[32];
            int n = std::snprintf(buf, sizeof(buf), "%.17g", *d);
            return std::string(buf, static_cast<size_t>(n));
        }
        const std::string& s = std::get<std::string>(v);
        std::string out = "'";
        for (char c : s) {
            if (c == '\'') out += '\'';
            out += c;
        }
        out += "'";
        return out;
    }

    PgConnParams params_;
    Dialect dialect_;
    int fd_ = -1;
    int current_timeout_ms_ = -1;
    pgwire::Reader reader_;
};

}  // namespace

PgConnParams parse_pg_conn(const std::string& conn) {
    // key=value pairs separated by whitespace: host, port, user, password, dbname.
    PgConnParams p;
    size_t pos = 0;
    while (pos < conn.size()) {
        while (pos < conn.size() && std::isspace(static_cast<unsigned char>(conn[pos]))) ++pos;
        size_t eq = conn.find('=', pos);
        if (eq == std::string::npos) break;
        std::string key = conn.substr(pos, eq - pos);
        size_t end = eq + 1;
        while (end < conn.size() && !std::isspace(static_cast<unsigned char>(conn[end]))) ++end;
        std::string value = conn.substr(eq + 1, end - eq - 1);
        if (key == "host") {
            p.host = value;
        } else if (key == "port") {
            try {
                p.port = std::stoi(value);
            } catch (...) {
                throw Error(ErrorKind::ConfigError, "bad port in connection string: " + value);
            }
        } else if (key == "user") {
            p.user = value;
        } else if (key == "password") {
            p.password = value;
        } else if (key == "dbname" || key == "database") {
            p.database = value;
        } else {
            throw Error(ErrorKind::ConfigError, "unknown connection option: " + key);
        }
        pos = end;
    }
    return p;
}

std::unique_ptr<DbAdapter> open_postgres_family(const PgConnParams& params) {
    return std::make_unique<PgAdapter>(params);
}

}  // namespace eqperf
