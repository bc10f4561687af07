#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

// Message-level codec for PostgreSQL frontend/backend protocol v3. Kept free
// of sockets so it can be exercised on captured byte sequences.
namespace eqperf::pgwire {

std::vector<uint8_t> build_startup(const std::string& user, const std::string& database);
std::vector<uint8_t> build_query(const std::string& sql);
std::vector<uint8_t> build_password(const std::string& password);
std::vector<uint8_t> build_terminate();

// Response for AuthenticationMD5Password: "md5" + hex(md5(hex(md5(pw+user)) + salt)).
std::string md5_password_response(const std::string& user, const std::string& password,
                                  const uint8_t salt[4]);

struct Message {
    char type = 0;
    std::vector<uint8_t> payload;
};

// Incremental frame splitter. Feed raw bytes as they arrive; next() yields
// complete messages and leaves partial ones buffered.
class Reader {
  public:
    void feed(const uint8_t* data, size_t n);
    std::optional<Message> next();

  private:
    std::vector<uint8_t> buf_;
    size_t pos_ = 0;
};

struct FieldDesc {
    std::string name;
    int32_t type_oid = 0;
};

std::vector<FieldDesc> parse_row_description(const std::vector<uint8_t>& payload);

// One entry per column; nullopt for SQL NULL, raw text bytes otherwise.
std::vector<std::optional<std::string>> parse_data_row(const std::vector<uint8_t>& payload);

// ErrorResponse / NoticeResponse fields keyed by code byte
// ('C' SQLSTATE, 'M' message, 'S' severity, ...).
std::map<char, std::string> parse_error_fields(const std::vector<uint8_t>& payload);

// Authentication request code (0 ok, 3 cleartext, 5 md5). Fills `salt` for
// code 5.
int32_t parse_auth_request(const std::vector<uint8_t>& payload, uint8_t salt[4]);

}  // namespace eqperf::pgwire
