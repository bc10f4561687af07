#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace eqperf {

// Error taxonomy shared across modules. Classified errors let call sites
// distinguish tool bugs (escalated) from expected operational failures
// (logged and skipped).
enum class ErrorKind {
    ConnectionError,
    SyntaxError,
    ExplainFailed,
    ExecutionError,
    NonEmptyDatabase,
    UnsupportedType,
    UnsupportedConstruct,
    GenerationExhausted,
    RuleProducedInvalidPlan,
    NotPartitionable,
    MalformedReport,
    IoError,
    ConfigError,
};

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& msg) : std::runtime_error(msg), kind_(kind) {}
    ErrorKind kind() const { return kind_; }

private:
    ErrorKind kind_;
};

inline const char* error_kind_name(ErrorKind k) {
    switch (k) {
        case ErrorKind::ConnectionError: return "ConnectionError";
        case ErrorKind::SyntaxError: return "SyntaxError";
        case ErrorKind::ExplainFailed: return "ExplainFailed";
        case ErrorKind::ExecutionError: return "ExecutionError";
        case ErrorKind::NonEmptyDatabase: return "NonEmptyDatabase";
        case ErrorKind::UnsupportedType: return "UnsupportedType";
        case ErrorKind::UnsupportedConstruct: return "UnsupportedConstruct";
        case ErrorKind::GenerationExhausted: return "GenerationExhausted";
        case ErrorKind::RuleProducedInvalidPlan: return "RuleProducedInvalidPlan";
        case ErrorKind::NotPartitionable: return "NotPartitionable";
        case ErrorKind::MalformedReport: return "MalformedReport";
        case ErrorKind::IoError: return "IoError";
        case ErrorKind::ConfigError: return "ConfigError";
    }
    return "Error";
}

// FNV-1a. Used for report content hashes; must be stable across runs and
// platforms, which rules out std::hash.
inline uint64_t fnv1a64(std::string_view data, uint64_t seed = 14695981039346656037ull) {
    uint64_t h = seed;
    for (unsigned char c : data) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

inline std::string to_hex(uint64_t v) {
    static const char* digits = "0123456789abcdef";
    std::string out(16, '0');
    for (int i = 15; i >= 0; --i) {
        out[i] = digits[v & 0xf];
        v >>= 4;
    }
    return out;
}

inline std::string join(const std::vector<std::string>& parts, const std::string& sep) {
    std::string out;
    for (size_t i = 0; i < parts.size(); ++i) {
        if (i) out += sep;
        out += parts[i];
    }
    return out;
}

}  // namespace eqperf
