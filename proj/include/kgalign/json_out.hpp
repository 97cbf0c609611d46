#pragma once

#include <cstddef>
#include <cstdint>
#include <cstdio>
#include <span>
#include <string>
#include <string_view>

#include "kgalign/numfmt.hpp"

namespace kgalign {

// Minimal JSON emission helpers. Output files must be byte-reproducible and
// carry doubles at 17 significant digits, so documents are composed by hand
// with a fixed key order; nlohmann/json is used for parsing only.

inline std::string json_str(std::string_view s) {
    std::string out;
    out.reserve(s.size() + 2);
    out.push_back('"');
    for (unsigned char c : s) {
        switch (c) {
            case '"': out += "\\\""; break;
            case '\\': out += "\\\\"; break;
            case '\b': out += "\\b"; break;
            case '\f': out += "\\f"; break;
            case '\n': out += "\\n"; break;
            case '\r': out += "\\r"; break;
            case '\t': out += "\\t"; break;
            default:
                if (c < 0x20) {
                    char buf[8];
                    std::snprintf(buf, sizeof(buf), "\\u%04x", c);
                    out += buf;
                } else {
                    out.push_back(static_cast<char>(c));
                }
        }
    }
    out.push_back('"');
    return out;
}

inline std::string json_num(double v) { return format_double17(v); }

inline std::string json_array(std::span<const double> values) {
    std::string out = "[";
    for (std::size_t i = 0; i < values.size(); ++i) {
        if (i) out.push_back(',');
        out += json_num(values[i]);
    }
    out.push_back(']');
    return out;
}

}  // namespace kgalign
