#pragma once

// RFC 4180 field quoting; doubles printed as shortest round-trip strings so
// output files are byte-stable.

#include <charconv>
#include <cstdint>
#include <ostream>
#include <span>
#include <string>
#include <vector>

namespace mdclt {

inline std::string csv_escape(const std::string& s) {
    const bool needs_quotes = s.find_first_of(",\"\r\n") != std::string::npos;
    if (!needs_quotes) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += "\"\"";
        else out += c;
    }
    out += '"';
    return out;
}

inline std::string fmt_double(double v) {
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    (void)ec;
    return std::string(buf, ptr);
}

inline std::string fmt_int(std::int64_t v) { return std::to_string(v); }

class CsvWriter {
public:
    explicit CsvWriter(std::ostream& os) : os_(os) {}
    void row(std::span<const std::string> fields) {
        for (std::size_t i = 0; i < fields.size(); ++i) {
            if (i) os_ << ',';
            os_ << csv_escape(fields[i]);
        }
        os_ << '\n';
    }
    void row(std::initializer_list<std::string> fields) {
        row(std::span<const std::string>(fields.begin(), fields.size()));
    }

private:
    std::ostream& os_;
};

} // namespace mdclt
