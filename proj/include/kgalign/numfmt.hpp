#pragma once

#include <charconv>
#include <cmath>
#include <string>
#include <string_view>
#include <system_error>

#include "kgalign/error.hpp"

namespace kgalign {

/// Locale-independent decimal formatting at 17 significant digits,
/// enough to round-trip any double exactly.
inline std::string format_double17(double v) {
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof(buf), v, std::chars_format::general, 17);
    return std::string(buf, res.ptr);
}

/// Locale-independent parse of a full token as a double. Returns false when
/// the token is not a complete finite-or-infinite decimal number.
inline bool parse_double(std::string_view token, double& out) {
    if (token.empty()) return false;
    const char* first = token.data();
    const char* last = token.data() + token.size();
    auto res = std::from_chars(first, last, out);
    if (res.ec == std::errc::result_out_of_range) {
        // Treat overflow as an (infinite) parse success; callers reject
        // non-finite values with a dedicated message.
        out = token.front() == '-' ? -HUGE_VAL : HUGE_VAL;
        return res.ptr == last;
    }
    return res.ec == std::errc() && res.ptr == last;
}

/// Parse a full token as a non-negative integer.
inline bool parse_size(std::string_view token, std::size_t& out) {
    if (token.empty()) return false;
    auto res = std::from_chars(token.data(), token.data() + token.size(), out);
    return res.ec == std::errc() && res.ptr == token.data() + token.size();
}

}  // namespace kgalign
