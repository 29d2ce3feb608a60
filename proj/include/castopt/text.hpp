#pragma once

// Text helpers: deterministic number formatting, small string utilities,
// CSV reading/writing, and content hashing for stage fingerprints.
//
// All floating point output goes through fmt_double (shortest round-trip
// form via std::to_chars) or fmt_double_hex (exact hexfloat), so repeated
// runs produce byte-identical files.

#include <charconv>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include "castopt/common.hpp"

namespace castopt {

/// Shortest decimal string that round-trips to the same double.
inline std::string fmt_double(double v) {
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

/// Exact hexadecimal float form (used in model files).
inline std::string fmt_double_hex(double v) {
    char buf[64];
    int n = std::snprintf(buf, sizeof(buf), "%a", v);
    return std::string(buf, buf + n);
}

inline double parse_double(std::string_view s, const std::string& what = "number") {
    double v = 0.0;
    // Accept both decimal and hexfloat forms; strtod handles "0x1.8p+1".
    std::string tmp(s);
    char* end = nullptr;
    v = std::strtod(tmp.c_str(), &end);
    if (end == tmp.c_str() || *end != '\0')
        throw ParseError("could not parse " + what + " from '" + tmp + "'");
    return v;
}

inline long long parse_int(std::string_view s, const std::string& what = "integer") {
    long long v = 0;
    auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc() || res.ptr != s.data() + s.size())
        throw ParseError("could not parse " + what + " from '" + std::string(s) + "'");
    return v;
}

inline std::string_view trim(std::string_view s) {
    const char* ws = " \t\r\n";
    auto b = s.find_first_not_of(ws);
    if (b == std::string_view::npos) return {};
    auto e = s.find_last_not_of(ws);
    return s.substr(b, e - b + 1);
}

inline std::vector<std::string> split(std::string_view s, char sep) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (true) {
        auto pos = s.find(sep, start);
        if (pos == std::string_view::npos) {
            out.emplace_back(s.substr(start));
            break;
        }
        out.emplace_back(s.substr(start, pos - start));
        start = pos + 1;
    }
    return out;
}

inline std::string join(const std::vector<std::string>& parts, char sep) {
    std::string out;
    for (std::size_t i = 0; i < parts.size(); ++i) {
        if (i) out.push_back(sep);
        out += parts[i];
    }
    return out;
}

/// FNV-1a over raw bytes; the pipeline fingerprints stage inputs with this.
inline std::uint64_t fnv1a(std::string_view bytes, std::uint64_t h = 0xcbf29ce484222325ULL) {
    for (char c : bytes) {
        h ^= static_cast<unsigned char>(c);
        h *= 1099511628211ULL;
    }
    return h;
}

inline std::string hex_u64(std::uint64_t v) {
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
    return std::string(buf);
}

inline std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ParseError("cannot open file: " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

inline void write_file(const std::string& path, std::string_view content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ParseError("cannot write file: " + path);
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
}

/// Buffered CSV writer; rows are joined with ',' and terminated with '\n'.
class CsvWriter {
  public:
    void header(const std::vector<std::string>& names) { raw_line(join(names, ',')); }

    void row(const std::vector<std::string>& fields) { raw_line(join(fields, ',')); }

    void raw_line(std::string_view line) {
        buf_.append(line);
        buf_.push_back('\n');
    }

    /// Comment line ("# key=value ..."); readers skip lines starting with '#'.
    void comment(std::string_view text) {
        buf_.append("# ");
        buf_.append(text);
        buf_.push_back('\n');
    }

    const std::string& str() const { return buf_; }
    void save(const std::string& path) const { write_file(path, buf_); }

  private:
    std::string buf_;
};

/// Parsed CSV table: header names plus string cells. Lines starting with '#'
/// and blank lines are skipped.
struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;

    std::size_t column(const std::string& name) const {
        for (std::size_t i = 0; i < header.size(); ++i)
            if (header[i] == name) return i;
        throw ParseError("CSV column not found: " + name);
    }
};

inline CsvTable read_csv(const std::string& path) {
    CsvTable t;
    std::istringstream in(read_file(path));
    std::string line;
    bool have_header = false;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        auto trimmed = trim(line);
        if (trimmed.empty() || trimmed.front() == '#') continue;
        auto fields = split(trimmed, ',');
        if (!have_header) {
            t.header = std::move(fields);
            have_header = true;
            continue;
        }
        if (fields.size() != t.header.size())
            throw ParseError(path + ":" + std::to_string(lineno) + ": expected " +
                             std::to_string(t.header.size()) + " fields, got " +
                             std::to_string(fields.size()));
        t.rows.push_back(std::move(fields));
    }
    if (!have_header) throw ParseError(path + ": missing CSV header");
    return t;
}

}  // namespace castopt
