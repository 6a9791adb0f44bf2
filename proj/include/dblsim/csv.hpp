#pragma once

#include <string>
#include <vector>

#include "dblsim/text.hpp"

namespace dblsim {

struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;
};

/// RFC-4180-style CSV: '\n' line endings, header row first, cells quoted
/// only when they contain a separator, quote or newline. Numeric cells are
/// expected to come through format_double so values round-trip bit-exact.
inline std::string write_csv(const CsvTable& t) {
    auto cell = [](const std::string& s) {
        if (s.find_first_of(",\"\n") == std::string::npos) return s;
        std::string q = "\"";
        for (char c : s) {
            if (c == '"') q += "\"\"";
            else q += c;
        }
        q += '"';
        return q;
    };
    std::string out;
    auto emit_row = [&](const std::vector<std::string>& r) {
        for (size_t i = 0; i < r.size(); ++i) {
            if (i) out += ',';
            out += cell(r[i]);
        }
        out += '\n';
    };
    emit_row(t.header);
    for (const auto& r : t.rows) emit_row(r);
    return out;
}

}  // namespace dblsim
