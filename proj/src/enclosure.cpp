#include "nsbl/enclosure.hpp"

#include "nsbl/errors.hpp"

namespace nsbl {

Enclosure sqrt_enclosure(const Rational& x, const Rational& max_width) {
  if (x < 0) throw DomainError("square root of a negative rational");
  if (max_width <= 0) throw DomainError("enclosure width must be positive");
  if (x == 0) return Enclosure::exact(Rational(0));

  // sqrt(a/b) = sqrt(a*b)/b; scale by 10^d until 1/(b*10^d) <= max_width.
  const mpz_class& a = x.get_num();
  const mpz_class& b = x.get_den();
  mpz_class radicand = a * b;

  mpz_class root;
  mpz_sqrt(root.get_mpz_t(), radicand.get_mpz_t());
  if (root * root == radicand) return Enclosure::exact(Rational(root, b));

  mpz_class scale = 1;
  while (Rational(1, 1) / (Rational(b) * Rational(scale)) > max_width) scale *= 10;
  mpz_class scaled = radicand * scale * scale;
  mpz_sqrt(root.get_mpz_t(), scaled.get_mpz_t());
  mpz_class den = b * scale;
  Rational lo(root, den);
  Rational hi(root + 1, den);
  lo.canonicalize();
  hi.canonicalize();
  return {lo, hi};
}

std::optional<std::strong_ordering> compare(const Rational& x, const Enclosure& e) {
  if (e.is_exact()) return cmp(x, e.lo) <=> 0;
  if (x < e.lo) return std::strong_ordering::less;
  if (x > e.hi) return std::strong_ordering::greater;
  return std::nullopt;
}

}  // namespace nsbl
