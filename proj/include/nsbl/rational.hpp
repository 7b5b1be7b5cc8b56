#pragma once

#include <gmpxx.h>

#include <string>
#include <string_view>

namespace nsbl {

/// Exact fraction of arbitrary-precision integers. Arithmetic on mpq_class
/// keeps the value canonical (positive denominator, lowest terms).
using Rational = mpq_class;

/// Builds num/den in lowest terms. Throws DomainError on a zero denominator.
Rational make_rational(long num, long den = 1);

/// Parses "p", "p/q", or a finite decimal such as "-1.25" or "1e-3".
Rational parse_rational(std::string_view text);

/// "p/q", or "p" when the denominator is one.
std::string to_string(const Rational& x);

/// Decimal rendering rounded to `digits` significant figures (display only).
std::string to_decimal(const Rational& x, int digits = 17);

double to_double(const Rational& x);

/// x^e for integer e (e < 0 requires x != 0).
Rational pow(const Rational& x, long e);

inline bool is_integer(const Rational& x) { return x.get_den() == 1; }

}  // namespace nsbl
