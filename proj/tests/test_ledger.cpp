#include <random>

#include "doctest.h"
#include "nsbl/errors.hpp"
#include "nsbl/exponent_ledger.hpp"

using namespace nsbl;
using namespace nsbl::ledger;

namespace {

Rational Q(long n, long d = 1) { return make_rational(n, d); }

const ConstraintReport& find(const std::vector<ConstraintReport>& v, const std::string& id) {
  for (const auto& c : v)
    if (c.id == id) return c;
  FAIL("missing report " << id);
  return v.front();
}

}  // namespace

TEST_CASE("alpha and lambda_z closed forms") {
  CHECK(alpha(3, Q(10)) == Q(1, 5));
  CHECK(alpha(4, Q(12)) == Q(1, 6));
  CHECK_THROWS_AS(alpha(3, Q(5)), DomainError);
  CHECK(lambda_z(3) == Q(5, 3));
  CHECK(lambda_z(4) == Q(3, 2));
  CHECK(lambda_z(6) == Q(4, 3));
  CHECK_THROWS_AS(lambda_z(2), DomainError);
}

TEST_CASE("alpha is positive and increasing in q") {
  std::mt19937_64 rng(7);
  for (int i = 0; i < 200; ++i) {
    int N = 3 + int(rng() % 6);
    Rational q = N + 2 + Q(long(rng() % 1000) + 1, long(rng() % 50) + 1);
    Rational dq = Q(long(rng() % 100) + 1, long(rng() % 7) + 1);
    CHECK(alpha(N, q) > 0);
    CHECK(alpha(N, q + dq) > alpha(N, q));
  }
}

TEST_CASE("b exponent values and sign boundary") {
  CHECK(b_exponent(3, Q(10), Q(0)) == Q(8, 5));
  CHECK(b_exponent(3, Q(10), Q(10, 3)) == 0);
  auto forms = b_exponent_forms(3, Q(10), Q(5));
  CHECK(forms[0] < 0);
  CHECK(forms[0] == forms[1]);
  CHECK(forms[1] == forms[2]);
  CHECK_THROWS_AS(b_exponent(3, Q(10), Q(-1)), DomainError);
}

TEST_CASE("M closed forms") {
  CHECK(big_m(3, Q(10), Q(0)) == Q(40, 7));
  CHECK(big_m(3, Q(10), Q(5, 2)) == Q(70, 11));
  CHECK(big_m_expanded(3, Q(10), Q(5, 2)) == Q(70, 11));
  CHECK(big_m(3, Q(10), Q(0)) > 5);
  for (const auto& f : big_m_at_zero_forms(3, Q(10))) CHECK(f == Q(40, 7));
  // alpha j beyond the admissible interval
  CHECK_THROWS_AS(big_m(3, Q(10), Q(1000)), DomainError);
}

TEST_CASE("M_delta bounds and large-q limit") {
  CHECK(m_delta(3, Q(10), Q(1, 2)) == Q(70, 11));
  Rational m = m_delta(3, Q(1000000), Q(1, 2));
  CHECK(m > 5);
  CHECK(m - 5 < Q(1, 10000));
  CHECK_THROWS_AS(m_delta(3, Q(10), Q(1)), DomainError);
  for (const auto& line : m_delta_chain(3, Q(10), Q(1, 2))) CHECK(line == Q(70, 11));
}

TEST_CASE("random samples: every displayed form agrees exactly") {
  std::mt19937_64 rng(2024);
  int checked = 0;
  for (int i = 0; i < 1000; ++i) {
    int N = 3 + int(rng() % 6);
    Rational q = N + 2 + Q(long(rng() % 1000) + 1, long(rng() % 50) + 1);
    Rational j = Q(long(rng() % 400), long(rng() % 30) + 1);
    auto b = b_exponent_forms(N, q, j);
    REQUIRE(b[0] == b[1]);
    REQUIRE(b[1] == b[2]);

    Rational delta = Q(long(rng() % 99) + 1, 100);
    auto chain = m_delta_chain(N, q, delta);
    for (const auto& line : chain) REQUIRE(line == chain[0]);
    REQUIRE(chain[0] > N + 2);
    REQUIRE(chain[0] < 2 * q);

    auto m0 = big_m_at_zero_forms(N, q);
    REQUIRE(m0[0] == m0[1]);
    REQUIRE(m0[1] == m0[2]);
    REQUIRE(m0[0] == big_m(N, q, Q(0)));

    if (alpha(N, q) * j < alpha_j_upper(N, q)) {
      REQUIRE(big_m(N, q, j) == big_m_expanded(N, q, j));
      ++checked;
    }
  }
  CHECK(checked > 100);
}

TEST_CASE("M increases with alpha j") {
  std::mt19937_64 rng(11);
  for (int i = 0; i < 300; ++i) {
    int N = 3 + int(rng() % 4);
    Rational q = N + 2 + Q(long(rng() % 500) + 1, long(rng() % 9) + 1);
    Rational top = alpha_j_upper(N, q) / alpha(N, q);
    Rational j1 = top * Q(long(rng() % 1000), 1001);
    Rational j2 = top * Q(long(rng() % 1000), 1001);
    if (j1 == j2) continue;
    if (j1 > j2) std::swap(j1, j2);
    CHECK(big_m(N, q, j1) < big_m(N, q, j2));
  }
}

TEST_CASE("Hoelder exponent identity") {
  std::mt19937_64 rng(5);
  for (int i = 0; i < 200; ++i) {
    Rational r = Q(long(rng() % 100) + 1, long(rng() % 9) + 1);
    Rational ell = r + Q(long(rng() % 100) + 1, long(rng() % 9) + 1);
    CHECK((1 - r / ell) * (1 + r / (ell - r)) == 1);
  }
}

TEST_CASE("K interval endpoint enclosure") {
  CHECK_THROWS_AS(k_interval(3, Q(10, 3)), DomainError);
  KInterval iv = k_interval(3, Q(10));
  CHECK(iv.lower == 1);
  CHECK(iv.upper.width() <= Q(1, 1000000));
  CHECK(to_double(iv.upper.lo) == doctest::Approx(1.81650).epsilon(1e-4));
  // endpoint is 1 + sqrt(200/3)/10, so (10(K-1))^2 brackets 200/3
  CHECK(100 * (iv.upper.lo - 1) * (iv.upper.lo - 1) <= Q(200, 3));
  CHECK(100 * (iv.upper.hi - 1) * (iv.upper.hi - 1) >= Q(200, 3));

  KInterval big = k_interval(3, Q(1000000));
  CHECK(abs(big.upper.midpoint() - 2) < Q(1, 1000));

  CHECK(k_in_interval(3, Q(10), Q(6, 5)));
  CHECK_FALSE(k_in_interval(3, Q(10), Q(2)));
  CHECK_FALSE(k_in_interval(3, Q(10), Q(1)));
}

TEST_CASE("j lower bounds") {
  auto p = make_params(3, Q(10), Q(10), Q(6, 5), Q(1, 2), Q(4), Q(12));
  auto reps = j_lower_bounds(p);
  const auto& jl4 = find(reps, "j_b_negative");
  CHECK(jl4.rhs == Q(10, 3));
  CHECK(jl4.satisfied);
  CHECK(jl4.margin == Q(2, 3));

  p = make_params(3, Q(10), Q(10), Q(6, 5), Q(1, 2), Q(3), Q(12));
  CHECK_FALSE(find(j_lower_bounds(p), "j_b_negative").satisfied);
}

TEST_CASE("large-q limit of the printed j threshold") {
  CHECK(qlim_ratio(3, Q(10), Q(1)) == Q(1, 10));
  Rational q = Q(1000000000);
  auto R = printed_r_threshold(3, q, Q(10), Q(1));
  REQUIRE(R);
  CHECK(abs(*R / q - Q(1, 10)) < Q(1, 1000000));
}

TEST_CASE("quadratic in r against its linear-in-j rewriting") {
  std::mt19937_64 rng(3);
  for (int i = 0; i < 200; ++i) {
    int N = 3 + int(rng() % 3);
    Rational q = N + 2 + Q(long(rng() % 400) + 1, long(rng() % 5) + 1);
    Rational B = Q(N) + Q(long(rng() % 50) + 1, 3);
    Rational K = 1 + Q(long(rng() % 80) + 1, 100);
    Rational j = Q(long(rng() % 300), long(rng() % 5) + 1);
    auto p = make_params(N, q, B, K, Q(1, 2), j, K * q);
    LinearInJ c = quadratic_in_j(N, q, B, K);
    CHECK(quadratic_in_r(p) * (q - p.lambda_z) / 2 == c.a1 * j + c.a2);
    // the printed slope differs unless K = 1
    LinearInJ pr = quadratic_in_j_printed(N, q, B, K);
    CHECK(pr.a2 == c.a2);
    CHECK(pr.a1 != c.a1);
  }
}

TEST_CASE("two forms of the r lower bound") {
  auto p = make_params(3, Q(200), Q(10), Q(6, 5), Q(1, 2), Q(100), Q(240));
  auto first = r_lower_bound(p);
  REQUIRE(first);
  // first form re-expanded with the signs derived from it
  const Rational& q = p.q;
  const Rational& lz = p.lambda_z;
  const Rational& a = p.alpha;
  const Rational& Md = p.M_delta;
  Rational den = ((2 * lz + 2 * p.B - Md) * q - 2 * p.B * lz) * a * p.j - 2 * (1 - lz * a) * q * q -
                 (2 * lz * lz * a - Md - 4 * lz) * q - 2 * lz * Md;
  CHECK(*first == 2 * a * (q + p.B) * (q - lz) * lz * p.j / den);
  auto printed = r_lower_bound_printed(p);
  REQUIRE(printed);
  CHECK(*printed != *first);
}

TEST_CASE("third form of the r upper bound reads the undefined symbol as q") {
  auto p = make_params(3, Q(200), Q(10), Q(6, 5), Q(1, 2), Q(100), Q(240));
  REQUIRE(p.b < 0);
  CHECK(*r_upper_bound(p) == *r_upper_bound_third_form(p, p.q));
}

TEST_CASE("strict r constraints at their boundaries") {
  auto p = make_params(3, Q(200), Q(10), Q(6, 5), Q(1, 2), Q(100), Q(200));
  auto rf = r_feasible(p);
  CHECK_FALSE(find(rf.parts, "r_above_2j").satisfied);
  CHECK_FALSE(find(rf.parts, "r_above_q").satisfied);
  CHECK_FALSE(rf.summary.satisfied);
}

TEST_CASE("the example tuple violates the quadratic in r") {
  // (N, B, K, q, j, r) = (3, 10, 6/5, 200, 100, 240): every linear bound holds,
  // the quadratic does not (its value is about +6.5e4).
  auto p = make_params(3, Q(200), Q(10), Q(6, 5), Q(1, 2), Q(100), Q(240));
  auto rf = r_feasible(p);
  CHECK(find(rf.parts, "r_above_2j").satisfied);
  CHECK(find(rf.parts, "r_above_q").satisfied);
  CHECK(find(rf.parts, "r_below_j2_negative").satisfied);
  CHECK(find(rf.parts, "k_interval").satisfied);
  const auto& quad = find(rf.parts, "r_quadratic");
  CHECK_FALSE(quad.satisfied);
  CHECK(to_double(quad.lhs) == doctest::Approx(65035.63).epsilon(1e-6));
}

TEST_CASE("certificate structure") {
  auto p = make_params(3, Q(200), Q(10), Q(6, 5), Q(1, 2), Q(100), Q(240));
  Certificate c = certify(p);
  CHECK(c.reports.size() >= 14);
  for (const auto& r : c.reports) {
    if (r.relation == "<") CHECK(r.margin == r.rhs - r.lhs);
    else CHECK(r.margin == r.lhs - r.rhs);
  }
  CHECK(c.status == (c.feasible ? "feasible" : "infeasible"));
}

TEST_CASE("search below the q ceiling is exhausted") {
  SearchOptions opts;
  opts.q_max = Q(10);
  CHECK_THROWS_AS(select_parameters(3, opts), SearchExhausted);
  SearchResult r = search_parameters(3, opts);
  CHECK_FALSE(r.params);
  CHECK(r.last_candidate.status == "search_exhausted");
}

TEST_CASE("search is deterministic") {
  SearchOptions opts;
  opts.q_max = Q(1 << 12);
  SearchResult a = search_parameters(3, opts);
  SearchResult b = search_parameters(3, opts);
  CHECK(a.candidates_examined == b.candidates_examined);
  CHECK(a.failure_counts == b.failure_counts);
  CHECK(a.candidates_examined > 0);
  CHECK(a.last_candidate.params.j == a.last_candidate.params.q / 2);
  CHECK(a.last_candidate.params.r == a.last_candidate.params.K * a.last_candidate.params.q);
}

TEST_CASE("sigma solve") {
  auto s = sigma_solve(3, Q(1), Q(1), Q(1, 2));
  CHECK(s.sigma == 2);
  CHECK(s.delta0 == 2);
  s = sigma_solve(4, Q(2), Q(1), Q(1, 2));
  CHECK(s.sigma == 1);
  // substitute back
  Rational lhs = s.sigma * (Q(2) / Q(1, 2) - Q(1) / Q(1, 2) + 1) - 1;
  CHECK(lhs == Rational(4 - 2) * Q(1) / (2 * Q(1, 2)));
  CHECK_THROWS_AS(sigma_solve(3, Q(1, 2), Q(1), Q(1, 2)), DegenerateCoefficient);
}

TEST_CASE("recursion at, above and below the threshold") {
  auto at = recursion_limit(Q(1), Q(2), Q(1), Q(1, 2), 6);
  REQUIRE(at.values.size() == 7);
  for (int n = 0; n <= 6; ++n) CHECK(at.values[n].lo == Q(1, 1L << (n + 1)));
  CHECK(at.values[3].lo == Q(1, 16));
  CHECK(at.values[3].is_exact());

  auto above = recursion_limit(Q(1), Q(2), Q(1), Q(1), 30);
  CHECK(above.values[1].lo == 1);
  CHECK(above.values[2].lo == 2);
  CHECK(above.values[3].lo == 16);
  CHECK(above.verdict == RecursionVerdict::Diverges);

  auto zero = recursion_limit(Q(1), Q(2), Q(1), Q(0), 10);
  for (const auto& v : zero.values) CHECK(v.lo == 0);

  Enclosure th = recursion_threshold(Q(1), Q(2), Q(1));
  CHECK(th.contains(Q(1, 2)));
}

TEST_CASE("recursion below threshold falls under any epsilon") {
  auto below = recursion_limit(Q(1), Q(2), Q(1), Q(1, 4), 200);
  CHECK(below.verdict == RecursionVerdict::ToZero);
  const Rational eps = Q(1, 1) / pow(Q(10), 30);
  bool reached = false;
  for (size_t n = 1; n < below.values.size(); ++n) {
    CHECK(below.values[n].hi < below.values[n - 1].lo);
    if (below.values[n].hi < eps) reached = true;
  }
  CHECK(reached);
}

TEST_CASE("non-integer alpha uses interval enclosures") {
  // threshold c^{-1/a} b^{-1/a^2} = 2^{-4} for c = 1, b = 2, a = 1/2
  Enclosure th = recursion_threshold(Q(1), Q(2), Q(1, 2));
  CHECK(th.contains(Q(1, 16)));
  auto below = recursion_limit(Q(1), Q(2), Q(1, 2), Q(1, 32), 400);
  CHECK(below.verdict == RecursionVerdict::ToZero);
  CHECK(below.precision_bits >= 128);
  for (const auto& v : below.values) CHECK(v.lo <= v.hi);
  auto above = recursion_limit(Q(1), Q(2), Q(1, 2), Q(1, 8), 400);
  CHECK(above.verdict == RecursionVerdict::Diverges);
  CHECK_THROWS_AS(recursion_limit(Q(1), Q(1), Q(1), Q(1), 5), DomainError);
}
