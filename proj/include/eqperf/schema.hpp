#pragma once

#include <optional>
#include <string>
#include <vector>

#include "eqperf/value.hpp"

namespace eqperf {

enum class ValueType { Integer, Double, String, Datetime, Boolean };

inline const char* value_type_name(ValueType t) {
    switch (t) {
        case ValueType::Integer: return "integer";
        case ValueType::Double: return "double";
        case ValueType::String: return "string";
        case ValueType::Datetime: return "datetime";
        case ValueType::Boolean: return "boolean";
    }
    return "?";
}

struct ColumnInfo {
    std::string name;
    ValueType type = ValueType::Integer;
    bool nullable = true;
    bool unique = false;                 // backed by a unique index or PK
    std::optional<int> varchar_len;      // declared length for string columns
};

struct ForeignKey {
    std::string column;
    std::string ref_table;
    std::string ref_column;
};

struct TableInfo {
    std::string name;
    std::vector<ColumnInfo> columns;
    std::optional<std::string> primary_key;
    std::vector<ForeignKey> foreign_keys;
    int64_t row_count = -1;  // -1 when unknown

    const ColumnInfo* column(const std::string& n) const {
        for (const auto& c : columns)
            if (c.name == n) return &c;
        return nullptr;
    }
};

// Schema snapshot taken from a live database. Everything the generator and
// the mutation guards need to know about tables.
struct SchemaMetadata {
    std::vector<TableInfo> tables;

    const TableInfo* table(const std::string& n) const {
        for (const auto& t : tables)
            if (t.name == n) return &t;
        return nullptr;
    }
};

// Per-column sample pool used to build predicates that actually select rows.
struct ColumnSamples {
    std::string table;
    std::string column;
    std::vector<Value> values;  // distinct non-null samples
};

struct SampleSet {
    std::vector<ColumnSamples> columns;

    const ColumnSamples* find(const std::string& table, const std::string& column) const {
        for (const auto& c : columns)
            if (c.table == table && c.column == column) return &c;
        return nullptr;
    }
};

}  // namespace eqperf
