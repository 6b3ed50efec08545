#pragma once

#include <gmpxx.h>

#include <string>
#include <string_view>

namespace hmmon {

// Exact rational number. Values produced by this library are always kept in
// canonical form (lowest terms, positive denominator).
using Rational = mpq_class;

// Parses "p/q" or "p" (optionally signed). Decimal notation is rejected.
// Throws std::invalid_argument on malformed input or a zero denominator.
Rational parse_rational(std::string_view text);

// "p/q", or "p" when the denominator is 1.
std::string to_string(const Rational& value);

inline Rational make_rational(long num, long den = 1) {
  Rational r(num, den);
  r.canonicalize();
  return r;
}

}  // namespace hmmon
