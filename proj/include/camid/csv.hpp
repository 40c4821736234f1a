#pragma once

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "camid/error.hpp"

namespace camid {

// Plain comma-separated values, no quoting: none of the interchange formats
// here ever carries a comma inside a field.

inline std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> fields;
    std::string cur;
    for (const char c : line) {
        if (c == ',') {
            fields.push_back(cur);
            cur.clear();
        } else if (c != '\r') {
            cur.push_back(c);
        }
    }
    fields.push_back(cur);
    return fields;
}

inline std::vector<std::vector<std::string>> read_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open CSV file: " + path.string());
    std::vector<std::vector<std::string>> rows;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        rows.push_back(split_csv_line(line));
    }
    return rows;
}

inline std::string join_csv(const std::vector<std::string>& fields) {
    std::string out;
    for (std::size_t i = 0; i < fields.size(); ++i) {
        if (i) out.push_back(',');
        out += fields[i];
    }
    return out;
}

// Round-trippable double: 17 significant digits always re-parse to the
// identical bit pattern, so write -> read -> write is byte-stable.
inline std::string format_full(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

inline std::string format_fixed(double v, int decimals) {
    char buf[48];
    std::snprintf(buf, sizeof buf, "%.*f", decimals, v);
    return buf;
}

// >= 6 significant digits, never rounding a small p-value to 0.
inline std::string format_pvalue(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.6g", v);
    return buf;
}

inline double parse_double(const std::string& s) {
    try {
        std::size_t pos = 0;
        const double v = std::stod(s, &pos);
        if (pos != s.size()) throw DataError("trailing characters in number: '" + s + "'");
        return v;
    } catch (const std::invalid_argument&) {
        throw DataError("not a number: '" + s + "'");
    } catch (const std::out_of_range&) {
        throw DataError("number out of range: '" + s + "'");
    }
}

inline long parse_long(const std::string& s) {
    try {
        std::size_t pos = 0;
        const long v = std::stol(s, &pos);
        if (pos != s.size()) throw DataError("trailing characters in integer: '" + s + "'");
        return v;
    } catch (const std::invalid_argument&) {
        throw DataError("not an integer: '" + s + "'");
    } catch (const std::out_of_range&) {
        throw DataError("integer out of range: '" + s + "'");
    }
}

// Overloads that name the file (or other context) in the error.
inline double parse_double(const std::string& s, const std::string& where) {
    try {
        return parse_double(s);
    } catch (const DataError& e) {
        throw DataError(std::string(e.what()) + " in " + where);
    }
}

inline long parse_long(const std::string& s, const std::string& where) {
    try {
        return parse_long(s);
    } catch (const DataError& e) {
        throw DataError(std::string(e.what()) + " in " + where);
    }
}

inline void write_text_file(const std::filesystem::path& path, const std::string& content) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write file: " + path.string());
    out << content;
    if (!out) throw DataError("write failed: " + path.string());
}

inline std::string read_text_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open file: " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

}  // namespace camid
