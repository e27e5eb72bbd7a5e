#pragma once

#include <charconv>
#include <cstdio>
#include <string>

namespace fungate {

/// Shortest decimal text that parses back to exactly `v`.
inline std::string shortest(double v) {
    char buf[32];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, ptr);
}

/// printf-style "%.{digits}g".
inline std::string general(double v, int digits) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*g", digits, v);
    return buf;
}

} // namespace fungate
