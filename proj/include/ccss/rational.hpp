#pragma once

#include <gmpxx.h>

#include <string>

#include "ccss/diag.hpp"

namespace ccss {

// Exact rational probabilities. All probability computations in the engine
// are exact; nothing is ever rounded to floating point.
using Rational = mpq_class;

inline Rational rat(long num, long den = 1) {
    Rational r(num, den);
    r.canonicalize();
    return r;
}

// Canonical "num/den" text; integers print without the "/1".
inline std::string rat_str(const Rational& r) { return r.get_str(); }

inline Rational rat_parse(const std::string& text) {
    Rational r;
    if (r.set_str(text, 10) != 0) throw Error("bad rational literal: '" + text + "'");
    if (r.get_den() == 0) throw Error("zero denominator in rational: '" + text + "'");
    r.canonicalize();
    return r;
}

inline std::size_t rat_hash(const Rational& r) {
    return std::hash<std::string>{}(r.get_str());
}

}  // namespace ccss
