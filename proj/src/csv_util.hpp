#pragma once

// Small CSV helpers shared by the file readers. RFC4180-style: fields may be
// quoted, embedded quotes are doubled. No multi-line fields.

#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace gcsvr::csv {

inline std::vector<std::string> split_line(std::string_view line, std::size_t line_no) {
    std::vector<std::string> out;
    std::string field;
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        const char c = line[i];
        if (quoted) {
            if (c == '"') {
                if (i + 1 < line.size() && line[i + 1] == '"') {
                    field += '"';
                    ++i;
                } else {
                    quoted = false;
                }
            } else {
                field += c;
            }
        } else if (c == '"') {
            quoted = true;
        } else if (c == ',') {
            out.push_back(std::move(field));
            field.clear();
        } else if (c == '\r') {
            // tolerate CRLF
        } else {
            field += c;
        }
    }
    if (quoted) {
        throw std::invalid_argument("csv: unterminated quote at line " + std::to_string(line_no));
    }
    out.push_back(std::move(field));
    return out;
}

inline std::string quote_field(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += "\"\"";
        else out += c;
    }
    out += '"';
    return out;
}

}  // namespace gcsvr::csv
