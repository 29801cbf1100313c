#pragma once

#include <charconv>
#include <fstream>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

#include "crisis/common.hpp"

#include <json.hpp>

namespace crisis {

using json = nlohmann::json;

// ---------------------------------------------------------------------------
// Delimited tables (RFC-4180-style quoting, comma separated).
// ---------------------------------------------------------------------------

struct Table {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;  // line numbers = index + 2

    int column(const std::string& name) const {
        for (size_t i = 0; i < header.size(); ++i)
            if (header[i] == name) return static_cast<int>(i);
        return -1;
    }
};

// Parses one CSV record starting at *pos; advances *pos past the record.
// Handles quoted fields with embedded separators, quotes and newlines.
inline std::vector<std::string> csv_record(const std::string& text, size_t& pos) {
    std::vector<std::string> fields;
    std::string field;
    bool quoted = false;
    while (pos < text.size()) {
        char c = text[pos];
        if (quoted) {
            if (c == '"') {
                if (pos + 1 < text.size() && text[pos + 1] == '"') {
                    field += '"';
                    ++pos;
                } else {
                    quoted = false;
                }
            } else {
                field += c;
            }
        } else if (c == '"' && field.empty()) {
            quoted = true;
        } else if (c == ',') {
            fields.push_back(std::move(field));
            field.clear();
        } else if (c == '\n' || c == '\r') {
            if (c == '\r' && pos + 1 < text.size() && text[pos + 1] == '\n') ++pos;
            ++pos;
            fields.push_back(std::move(field));
            return fields;
        } else {
            field += c;
        }
        ++pos;
    }
    fields.push_back(std::move(field));
    return fields;
}

inline Table read_csv(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error(concat("cannot open file: ", path));
    std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    Table t;
    size_t pos = 0;
    if (pos < text.size()) t.header = csv_record(text, pos);
    while (pos < text.size()) {
        auto row = csv_record(text, pos);
        if (row.size() == 1 && row[0].empty()) continue;  // trailing blank line
        t.rows.push_back(std::move(row));
    }
    return t;
}

inline std::string csv_escape(const std::string& field) {
    bool needs = field.find_first_of(",\"\n\r") != std::string::npos;
    if (!needs) return field;
    std::string out = "\"";
    for (char c : field) {
        if (c == '"') out += "\"\"";
        else out += c;
    }
    out += '"';
    return out;
}

inline void write_csv_row(std::ostream& os, const std::vector<std::string>& row) {
    for (size_t i = 0; i < row.size(); ++i) {
        if (i) os << ',';
        os << csv_escape(row[i]);
    }
    os << '\n';
}

inline void write_csv(const std::string& path, const Table& t) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error(concat("cannot write file: ", path));
    write_csv_row(out, t.header);
    for (const auto& row : t.rows) write_csv_row(out, row);
}

// ---------------------------------------------------------------------------
// Line-delimited JSON.
// ---------------------------------------------------------------------------

inline void for_each_jsonl(const std::string& path,
                           const std::function<void(const json&, size_t)>& fn) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error(concat("cannot open file: ", path));
    std::string line;
    size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        std::string body = trim(line);
        if (body.empty()) continue;
        json j = json::parse(body, nullptr, false);
        if (j.is_discarded())
            throw std::runtime_error(concat(path, ":", lineno, ": malformed JSON record"));
        fn(j, lineno);
    }
}

// Shortest decimal representation that round-trips the exact double.
inline std::string format_double(double v) {
    char buf[32];
    auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

inline std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error(concat("cannot open file: ", path));
    return std::string((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
}

inline void write_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error(concat("cannot write file: ", path));
    out << content;
}

}  // namespace crisis
