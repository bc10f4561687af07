#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <variant>

namespace eqperf {

// A single cell of a result set. monostate is SQL NULL. Datetimes travel as
// their canonical text form ("YYYY-MM-DD HH:MM:SS"), which compares correctly
// as a string.
using Value = std::variant<std::monostate, int64_t, double, std::string>;

inline bool value_is_null(const Value& v) { return std::holds_alternative<std::monostate>(v); }

// Equality for result comparison. NULLs compare equal to each other (we are
// comparing result multisets, not evaluating SQL predicates). Doubles get a
// small relative tolerance so that re-associated arithmetic still matches;
// int/double cross-type numerics compare by value.
inline bool value_equal(const Value& a, const Value& b, double rel_tol = 1e-9) {
    if (value_is_null(a) || value_is_null(b)) return value_is_null(a) && value_is_null(b);
    if (std::holds_alternative<std::string>(a) || std::holds_alternative<std::string>(b)) {
        return std::holds_alternative<std::string>(a) && std::holds_alternative<std::string>(b) &&
               std::get<std::string>(a) == std::get<std::string>(b);
    }
    if (std::holds_alternative<int64_t>(a) && std::holds_alternative<int64_t>(b)) {
        return std::get<int64_t>(a) == std::get<int64_t>(b);
    }
    double x = std::holds_alternative<int64_t>(a) ? static_cast<double>(std::get<int64_t>(a))
                                                  : std::get<double>(a);
    double y = std::holds_alternative<int64_t>(b) ? static_cast<double>(std::get<int64_t>(b))
                                                  : std::get<double>(b);
    if (x == y) return true;
    if (std::isnan(x) || std::isnan(y)) return std::isnan(x) && std::isnan(y);
    double scale = std::max(std::fabs(x), std::fabs(y));
    return std::fabs(x - y) <= rel_tol * scale;
}

// Total order used to sort rows before order-insensitive comparison.
// NULL < numbers < strings; cross-type numerics order by value.
inline int value_order(const Value& a, const Value& b) {
    auto rank = [](const Value& v) -> int {
        if (value_is_null(v)) return 0;
        if (std::holds_alternative<std::string>(v)) return 2;
        return 1;
    };
    int ra = rank(a), rb = rank(b);
    if (ra != rb) return ra < rb ? -1 : 1;
    if (ra == 0) return 0;
    if (ra == 2) {
        const auto& x = std::get<std::string>(a);
        const auto& y = std::get<std::string>(b);
        return x < y ? -1 : (x == y ? 0 : 1);
    }
    double x = std::holds_alternative<int64_t>(a) ? static_cast<double>(std::get<int64_t>(a))
                                                  : std::get<double>(a);
    double y = std::holds_alternative<int64_t>(b) ? static_cast<double>(std::get<int64_t>(b))
                                                  : std::get<double>(b);
    if (x < y) return -1;
    if (x > y) return 1;
    return 0;
}

}  // namespace eqperf
