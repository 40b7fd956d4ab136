#pragma once

#include "tariffcge/types.hpp"

#include <fmt/format.h>

#include <cerrno>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

namespace tariffcge::csv {

/// Splits one CSV line. Double-quoted fields may contain commas; "" is an
/// escaped quote.
inline std::vector<std::string> split_line(std::string_view line)
{
    std::vector<std::string> out;
    std::string field;
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        const char ch = line[i];
        if (quoted) {
            if (ch == '"') {
                if (i + 1 < line.size() && line[i + 1] == '"') {
                    field += '"';
                    ++i;
                } else {
                    quoted = false;
                }
            } else {
                field += ch;
            }
        } else if (ch == '"') {
            quoted = true;
        } else if (ch == ',') {
            out.push_back(std::move(field));
            field.clear();
        } else {
            field += ch;
        }
    }
    out.push_back(std::move(field));
    return out;
}

struct Table {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;
    std::vector<std::size_t> line_numbers;
};

/// Parses CSV text whose header must equal `expected` exactly.
inline Table parse(std::istream& in, const std::vector<std::string>& expected, const std::string& source)
{
    Table t;
    std::string line;
    std::size_t lineno = 0;
    bool have_header = false;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (lineno == 1 && line.size() >= 3 && line.compare(0, 3, "\xEF\xBB\xBF") == 0) line.erase(0, 3);
        if (line.empty()) continue;
        auto fields = split_line(line);
        if (!have_header) {
            if (fields != expected) {
                std::string want;
                for (std::size_t i = 0; i < expected.size(); ++i) want += (i ? "," : "") + expected[i];
                throw InputError(source + ": expected header '" + want + "'");
            }
            t.header = std::move(fields);
            have_header = true;
            continue;
        }
        if (fields.size() != expected.size())
            throw InputError(source + ":" + std::to_string(lineno) + ": expected " + std::to_string(expected.size()) +
                             " fields, got " + std::to_string(fields.size()));
        t.rows.push_back(std::move(fields));
        t.line_numbers.push_back(lineno);
    }
    if (!have_header) throw InputError(source + ": empty CSV file");
    return t;
}

inline Table read_file(const std::string& path, const std::vector<std::string>& expected)
{
    std::ifstream in(path);
    if (!in) throw InputError("cannot open " + path);
    return parse(in, expected, path);
}

inline double parse_double(const std::string& s, const std::string& where)
{
    if (s.empty()) throw InputError(where + ": empty numeric field");
    errno = 0;
    char* end = nullptr;
    const double v = std::strtod(s.c_str(), &end);
    if (end != s.c_str() + s.size() || errno == ERANGE || !std::isfinite(v))
        throw InputError(where + ": invalid number '" + s + "'");
    return v;
}

/// Canonical numeric rendering: 12 significant digits, '.' decimal, no
/// negative zero.
inline std::string fmt_num(double v)
{
    if (std::isnan(v)) return "NA";
    if (v == 0.0) return "0";
    std::string s = fmt::format("{:.12g}", v);
    if (s == "-0") return "0";
    return s;
}

/// Full-precision rendering for data files that are read back.
inline std::string fmt_exact(double v)
{
    if (v == 0.0) return "0";
    return fmt::format("{}", v);
}

inline std::string quote_if_needed(const std::string& s)
{
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string q = "\"";
    for (char c : s) {
        if (c == '"') q += '"';
        q += c;
    }
    return q + "\"";
}

/// Accumulates rows with LF line endings.
class Writer {
public:
    explicit Writer(const std::vector<std::string>& header) { row(header); }

    void row(const std::vector<std::string>& fields)
    {
        for (std::size_t i = 0; i < fields.size(); ++i) {
            if (i) out_ += ',';
            out_ += quote_if_needed(fields[i]);
        }
        out_ += '\n';
    }

    const std::string& str() const { return out_; }

private:
    std::string out_;
};

}  // namespace tariffcge::csv
