#include "nsbl/rational.hpp"

#include <cctype>
#include <sstream>

#include "nsbl/errors.hpp"

namespace nsbl {

Rational make_rational(long num, long den) {
  if (den == 0) throw DomainError("rational with zero denominator");
  Rational r(num, den);
  r.canonicalize();
  return r;
}

namespace {

mpz_class parse_integer(std::string_view s) {
  if (s.empty()) throw DomainError("empty integer literal");
  std::size_t i = (s[0] == '+' || s[0] == '-') ? 1 : 0;
  if (i == s.size()) throw DomainError("bad integer literal");
  for (std::size_t k = i; k < s.size(); ++k)
    if (!std::isdigit(static_cast<unsigned char>(s[k])))
      throw DomainError("bad integer literal: " + std::string(s));
  std::string digits(s[0] == '+' ? s.substr(1) : s);
  return mpz_class(digits, 10);
}

}  // namespace

Rational parse_rational(std::string_view text) {
  while (!text.empty() && std::isspace(static_cast<unsigned char>(text.front())))
    text.remove_prefix(1);
  while (!text.empty() && std::isspace(static_cast<unsigned char>(text.back())))
    text.remove_suffix(1);
  if (text.empty()) throw DomainError("empty rational literal");

  if (auto slash = text.find('/'); slash != std::string_view::npos) {
    mpz_class num = parse_integer(text.substr(0, slash));
    mpz_class den = parse_integer(text.substr(slash + 1));
    if (den == 0) throw DomainError("rational with zero denominator");
    Rational r(num, den);
    r.canonicalize();
    return r;
  }

  // decimal with optional exponent
  long exponent = 0;
  std::string_view mantissa = text;
  if (auto e = text.find_first_of("eE"); e != std::string_view::npos) {
    mantissa = text.substr(0, e);
    exponent = parse_integer(text.substr(e + 1)).get_si();
  }
  std::string digits;
  bool negative = false;
  std::size_t i = 0;
  if (!mantissa.empty() && (mantissa[0] == '-' || mantissa[0] == '+')) {
    negative = mantissa[0] == '-';
    i = 1;
  }
  bool seen_point = false;
  for (; i < mantissa.size(); ++i) {
    char c = mantissa[i];
    if (c == '.') {
      if (seen_point) throw DomainError("bad decimal literal");
      seen_point = true;
    } else if (std::isdigit(static_cast<unsigned char>(c))) {
      digits.push_back(c);
      if (seen_point) --exponent;
    } else {
      throw DomainError("bad rational literal: " + std::string(text));
    }
  }
  if (digits.empty()) throw DomainError("bad rational literal");
  Rational r{mpz_class(digits, 10)};
  mpz_class ten_pow;
  mpz_ui_pow_ui(ten_pow.get_mpz_t(), 10, static_cast<unsigned long>(exponent < 0 ? -exponent : exponent));
  if (exponent >= 0) {
    r *= ten_pow;
  } else {
    r /= ten_pow;
  }
  r.canonicalize();
  return negative ? Rational(-r) : r;
}

std::string to_string(const Rational& x) {
  if (x.get_den() == 1) return x.get_num().get_str();
  return x.get_num().get_str() + "/" + x.get_den().get_str();
}

std::string to_decimal(const Rational& x, int digits) {
  mpf_class f(x, 256);
  mp_exp_t exp = 0;
  std::string s = f.get_str(exp, 10, static_cast<std::size_t>(digits));
  if (s.empty() || s == "0") return "0";
  bool neg = s[0] == '-';
  if (neg) s.erase(0, 1);
  std::ostringstream out;
  if (neg) out << '-';
  out << s[0];
  if (s.size() > 1) out << '.' << s.substr(1);
  if (exp - 1 != 0) out << 'e' << (exp - 1);
  return out.str();
}

double to_double(const Rational& x) { return x.get_d(); }

Rational pow(const Rational& x, long e) {
  if (e == 0) return Rational(1);
  if (x == 0) {
    if (e < 0) throw DomainError("zero to a negative power");
    return Rational(0);
  }
  unsigned long m = static_cast<unsigned long>(e < 0 ? -e : e);
  mpz_class num, den;
  mpz_pow_ui(num.get_mpz_t(), x.get_num_mpz_t(), m);
  mpz_pow_ui(den.get_mpz_t(), x.get_den_mpz_t(), m);
  Rational r = e > 0 ? Rational(num, den) : Rational(den, num);
  r.canonicalize();
  return r;
}

}  // namespace nsbl
