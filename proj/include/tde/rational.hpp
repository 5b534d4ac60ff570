#pragma once

// Exact rational scalar used for all series coefficients.

#include <boost/multiprecision/cpp_int.hpp>

#include <stdexcept>
#include <string>

namespace tde {

using Int = boost::multiprecision::cpp_int;
using Rational = boost::multiprecision::cpp_rational;

/// Serialize as "p/q" with an explicit denominator, e.g. "5/1", "-3/4".
inline std::string rational_to_string(const Rational& r) {
    return numerator(r).str() + "/" + denominator(r).str();
}

/// Accepts "p/q" as well as bare integers "p".
inline Rational rational_from_string(const std::string& s) {
    if (s.empty()) throw std::invalid_argument("empty rational literal");
    return Rational(s);
}

inline Int int_pow(Int base, unsigned exp) {
    Int out = 1;
    while (exp) {
        if (exp & 1u) out *= base;
        base *= base;
        exp >>= 1u;
    }
    return out;
}

} // namespace tde
