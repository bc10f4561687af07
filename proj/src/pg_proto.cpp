#include "eqperf/pg_proto.hpp"

#include <openssl/evp.h>

#include <cstring>

#include "eqperf/common.hpp"

namespace eqperf::pgwire {

namespace {

void put_u32(std::vector<uint8_t>& out, uint32_t v) {
    out.push_back(static_cast<uint8_t>(v >> 24));
    out.push_back(static_cast<uint8_t>(v >> 16));
    out.push_back(static_cast<uint8_t>(v >> 8));
    out.push_back(static_cast<uint8_t>(v));
}

void put_cstr(std::vector<uint8_t>& out, const std::string& s) {
    out.insert(out.end(), s.begin(), s.end());
    out.push_back(0);
}

uint32_t get_u32(const uint8_t* p) {
    return (static_cast<uint32_t>(p[0]) << 24) | (static_cast<uint32_t>(p[1]) << 16) |
           (static_cast<uint32_t>(p[2]) << 8) | static_cast<uint32_t>(p[3]);
}

uint16_t get_u16(const uint8_t* p) {
    return static_cast<uint16_t>((static_cast<uint16_t>(p[0]) << 8) | p[1]);
}

// Writes the length placeholder back once the body is complete. `skip` bytes
// at the front (the type byte, if any) are not counted.
void patch_length(std::vector<uint8_t>& msg, size_t skip) {
    uint32_t len = static_cast<uint32_t>(msg.size() - skip);
    msg[skip + 0] = static_cast<uint8_t>(len >> 24);
    msg[skip + 1] = static_cast<uint8_t>(len >> 16);
    msg[skip + 2] = static_cast<uint8_t>(len >> 8);
    msg[skip + 3] = static_cast<uint8_t>(len);
}

std::string md5_hex(const std::string& input) {
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    if (EVP_Digest(input.data(), input.size(), digest, &len, EVP_md5(), nullptr) != 1) {
        throw Error(ErrorKind::ConnectionError, "md5 digest failed");
    }
    static const char* hex = "0123456789abcdef";
    std::string out;
    for (unsigned int i = 0; i < len; ++i) {
        out += hex[digest[i] >> 4];
        out += hex[digest[i] & 0xf];
    }
    return out;
}

}  // namespace

std::vector<uint8_t> build_startup(const std::string& user, const std::string& database) {
    std::vector<uint8_t> out;
    put_u32(out, 0);       // length placeholder
    put_u32(out, 196608);  // protocol 3.0
    put_cstr(out, "user");
    put_cstr(out, user);
    put_cstr(out, "database");
    put_cstr(out, database);
    out.push_back(0);
    patch_length(out, 0);
    return out;
}

std::vector<uint8_t> build_query(const std::string& sql) {
    std::vector<uint8_t> out;
    out.push_back('Q');
    put_u32(out, 0);
    put_cstr(out, sql);
    patch_length(out, 1);
    return out;
}

std::vector<uint8_t> build_password(const std::string& password) {
    std::vector<uint8_t> out;
    out.push_back('p');
    put_u32(out, 0);
    put_cstr(out, password);
    patch_length(out, 1);
    return out;
}

std::vector<uint8_t> build_terminate() {
    std::vector<uint8_t> out;
    out.push_back('X');
    put_u32(out, 4);
    return out;
}

std::string md5_password_response(const std::string& user, const std::string& password,
                                  const uint8_t salt[4]) {
    std::string inner = md5_hex(password + user);
    std::string salted = inner + std::string(reinterpret_cast<const char*>(salt), 4);
    return "md5" + md5_hex(salted);
}

void Reader::feed(const uint8_t* data, size_t n) {
    buf_.insert(buf_.end(), data, data + n);
}

std::optional<Message> Reader::next() {
    // type byte + 4-byte length (which counts itself but not the type byte)
    if (buf_.size() - pos_ < 5) return std::nullopt;
    uint32_t len = get_u32(buf_.data() + pos_ + 1);
    if (len < 4) {
        // Corrupt frame; drop the buffer rather than loop forever.
        buf_.clear();
        pos_ = 0;
        return std::nullopt;
    }
    size_t total = 1 + static_cast<size_t>(len);
    if (buf_.size() - pos_ < total) return std::nullopt;
    Message m;
    m.type = static_cast<char>(buf_[pos_]);
    m.payload.assign(buf_.begin() + pos_ + 5, buf_.begin() + pos_ + total);
    pos_ += total;
    if (pos_ == buf_.size()) {
        buf_.clear();
        pos_ = 0;
    } else if (pos_ > 1 << 20) {
        buf_.erase(buf_.begin(), buf_.begin() + static_cast<ptrdiff_t>(pos_));
        pos_ = 0;
    }
    return m;
}

std::vector<FieldDesc> parse_row_description(const std::vector<uint8_t>& payload) {
    std::vector<FieldDesc> out;
    if (payload.size() < 2) return out;
    size_t pos = 2;
    uint16_t nfields = get_u16(payload.data());
    for (uint16_t i = 0; i < nfields && pos < payload.size(); ++i) {
        FieldDesc fd;
        while (pos < payload.size() && payload[pos] != 0) {
            fd.name += static_cast<char>(payload[pos++]);
        }
        ++pos;                          // NUL
        if (pos + 18 > payload.size()) break;
        pos += 6;                       // table oid + attnum
        fd.type_oid = static_cast<int32_t>(get_u32(payload.data() + pos));
        pos += 12;                      // type oid + typlen + typmod + format
        out.push_back(std::move(fd));
    }
    return out;
}

std::vector<std::optional<std::string>> parse_data_row(const std::vector<uint8_t>& payload) {
    std::vector<std::optional<std::string>> out;
    if (payload.size() < 2) return out;
    uint16_t ncols = get_u16(payload.data());
    size_t pos = 2;
    for (uint16_t i = 0; i < ncols; ++i) {
        if (pos + 4 > payload.size()) break;
        int32_t len = static_cast<int32_t>(get_u32(payload.data() + pos));
        pos += 4;
        if (len < 0) {
            out.emplace_back(std::nullopt);
            continue;
        }
        if (pos + static_cast<size_t>(len) > payload.size()) break;
        out.emplace_back(std::string(payload.begin() + static_cast<ptrdiff_t>(pos),
                                     payload.begin() + static_cast<ptrdiff_t>(pos) + len));
        pos += static_cast<size_t>(len);
    }
    return out;
}

std::map<char, std::string> parse_error_fields(const std::vector<uint8_t>& payload) {
    std::map<char, std::string> out;
    size_t pos = 0;
    while (pos < payload.size() && payload[pos] != 0) {
        char code = static_cast<char>(payload[pos++]);
        std::string value;
        while (pos < payload.size() && payload[pos] != 0) {
            value += static_cast<char>(payload[pos++]);
        }
        ++pos;  // NUL
        out[code] = std::move(value);
    }
    return out;
}

int32_t parse_auth_request(const std::vector<uint8_t>& payload, uint8_t salt[4]) {
    if (payload.size() < 4) return -1;
    int32_t code = static_cast<int32_t>(get_u32(payload.data()));
    if (code == 5 && payload.size() >= 8) {
        std::memcpy(salt, payload.data() + 4, 4);
    }
    return code;
}

}  // namespace eqperf::pgwire
