#pragma once

#include <charconv>
#include <cstdint>
#include <string>
#include <system_error>

#include "symopt/error.hpp"

namespace symopt {

/// Doubles with 17 significant digits: lossless round-trip, fixed byte
/// representation, locale-independent. Used everywhere machines read
/// the output back (structured reports, CSV, scene files).
inline std::string float17(double v) {
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof(buf), v, std::chars_format::general, 17);
    if (res.ec != std::errc{}) throw Error("float17: formatting failed");
    return std::string(buf, res.ptr);
}

/// Shortest representation that round-trips exactly; used in
/// human-facing text where 17 digits would be noise. Still
/// deterministic and locale-independent.
inline std::string float_short(double v) {
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof(buf), v);
    if (res.ec != std::errc{}) throw Error("float_short: formatting failed");
    return std::string(buf, res.ptr);
}

inline std::string json_escape(const std::string& s) {
    std::string out;
    out.reserve(s.size() + 2);
    for (char ch : s) {
        switch (ch) {
            case '"': out += "\\\""; break;
            case '\\': out += "\\\\"; break;
            case '\n': out += "\\n"; break;
            case '\t': out += "\\t"; break;
            case '\r': out += "\\r"; break;
            default:
                if (static_cast<unsigned char>(ch) < 0x20) {
                    static const char* hex = "0123456789abcdef";
                    out += "\\u00";
                    out += hex[(ch >> 4) & 0xf];
                    out += hex[ch & 0xf];
                } else {
                    out += ch;
                }
        }
    }
    return out;
}

} // namespace symopt
