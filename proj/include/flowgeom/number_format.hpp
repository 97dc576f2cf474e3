#ifndef FLOWGEOM_NUMBER_FORMAT_HPP
#define FLOWGEOM_NUMBER_FORMAT_HPP

#include <charconv>
#include <cmath>
#include <string>

namespace flowgeom {

/// Shortest round-trip decimal form; "nan"/"inf"/"-inf" for non-finite values.
inline std::string format_number(double x) {
    if (std::isnan(x)) return "nan";
    if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
    char buf[32];
    const auto res = std::to_chars(buf, buf + sizeof(buf), x);
    return std::string(buf, res.ptr);
}

}  // namespace flowgeom

#endif  // FLOWGEOM_NUMBER_FORMAT_HPP
