#pragma once

#include <compare>
#include <optional>

#include "nsbl/rational.hpp"

namespace nsbl {

/// Closed interval [lo, hi] with rational endpoints that is guaranteed to
/// contain some real value. lo == hi marks an exactly known value.
struct Enclosure {
  Rational lo;
  Rational hi;

  static Enclosure exact(const Rational& x) { return {x, x}; }

  Rational width() const { return hi - lo; }
  bool is_exact() const { return lo == hi; }
  bool contains(const Rational& x) const { return lo <= x && x <= hi; }
  Rational midpoint() const { return (lo + hi) / 2; }
};

/// Certified enclosure of sqrt(x), x >= 0, with width at most `max_width`.
/// Perfect rational squares come back exact.
Enclosure sqrt_enclosure(const Rational& x, const Rational& max_width);

/// Ordering of an exact rational against an enclosure, or nullopt while the
/// enclosure still straddles the value.
std::optional<std::strong_ordering> compare(const Rational& x, const Enclosure& e);

}  // namespace nsbl
