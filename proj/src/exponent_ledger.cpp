#include "nsbl/exponent_ledger.hpp"

#include <mpfr.h>

#include <algorithm>
#include <map>
#include <utility>

#include "nsbl/errors.hpp"

namespace nsbl::ledger {

namespace {

Rational R(long n, long d = 1) { return make_rational(n, d); }

void require_dimension(int N) {
  if (N < 3) throw DomainError("dimension N must be >= 3");
}

void require_q(int N, const Rational& q) {
  require_dimension(N);
  if (q <= N + 2) throw DomainError("q must exceed N+2 (alpha would be <= 0)");
}

}  // namespace

ConstraintReport greater_than(std::string id, const Rational& lhs, const Rational& rhs,
                              std::string note) {
  ConstraintReport c;
  c.id = std::move(id);
  c.lhs = lhs;
  c.rhs = rhs;
  c.relation = ">";
  c.margin = lhs - rhs;
  c.satisfied = c.margin > 0;
  c.note = std::move(note);
  return c;
}

ConstraintReport less_than(std::string id, const Rational& lhs, const Rational& rhs,
                           std::string note) {
  ConstraintReport c;
  c.id = std::move(id);
  c.lhs = lhs;
  c.rhs = rhs;
  c.relation = "<";
  c.margin = rhs - lhs;
  c.satisfied = c.margin > 0;
  c.note = std::move(note);
  return c;
}

Rational lambda_z(int N) {
  require_dimension(N);
  return R(N + 2, N);
}

Rational alpha(int N, const Rational& q) {
  require_q(N, q);
  Rational a = 2 * (q - (N + 2)) / (q * (N + 2));
  return a;
}

std::array<Rational, 3> b_exponent_forms(int N, const Rational& q, const Rational& j) {
  require_q(N, q);
  if (j < 0) throw DomainError("j must be >= 0");
  const Rational a = alpha(N, q);
  const Rational nq = N * q;
  const Rational den = nq - N - 2;
  Rational f1 = 4 - 2 * (j * a + 1) * nq / den;
  Rational f2 = 2 * (nq - 2 * (N + 2)) / den - 2 * nq * a * j / den;
  Rational f3 = (2 * nq / den) * ((nq - 2 * (N + 2)) / nq - a * j);
  return {f1, f2, f3};
}

Rational b_exponent(int N, const Rational& q, const Rational& j) {
  return b_exponent_forms(N, q, j)[0];
}

Rational alpha_j_upper(int N, const Rational& q) {
  const Rational a = alpha(N, q);
  const Rational nq = N * q;
  return (nq - 2 * (N + 2) + q * a * (nq - N - 2)) / nq;
}

namespace {

void require_alpha_j(int N, const Rational& q, const Rational& j) {
  const Rational aj = alpha(N, q) * j;
  if (aj < 0 || aj >= alpha_j_upper(N, q))
    throw DomainError("alpha*j outside the admissible interval for M");
}

}  // namespace

Rational big_m(int N, const Rational& q, const Rational& j) {
  require_alpha_j(N, q, j);
  const Rational a = alpha(N, q);
  const Rational b = b_exponent(N, q, j);
  const Rational den = b + 2 * q * a;
  if (den == 0) throw DomainError("b + 2 q alpha vanishes");
  return 2 * q * (2 * a * j + b) / den;
}

Rational big_m_expanded(int N, const Rational& q, const Rational& j) {
  require_alpha_j(N, q, j);
  const Rational a = alpha(N, q);
  const Rational nq = N * q;
  Rational num = 2 * (N + 2) * ((nq - 2 * (N + 2)) / (N + 2) - a * j);
  Rational den = N * ((nq - 2 * (N + 2) + q * a * (nq - N - 2)) / nq - a * j);
  if (den == 0) throw DomainError("expanded M denominator vanishes");
  return num / den;
}

std::array<Rational, 3> big_m_at_zero_forms(int N, const Rational& q) {
  const Rational a = alpha(N, q);
  const Rational nq = N * q;
  const Rational c = nq - 2 * (N + 2);
  Rational f1 = 2 * q * c / (c + q * a * (nq - N - 2));
  Rational f2 = 2 * c / (N - 2 + a * q * N);
  Rational f3 = 2 * (N + 2) * c / (2 * nq - (N + 2) * (N + 2));
  return {f1, f2, f3};
}

Rational m_delta(int N, const Rational& q, const Rational& delta) {
  require_q(N, q);
  if (delta <= 0 || delta >= 1) throw DomainError("delta must lie in (0, 1)");
  return big_m(N, q, delta * (N + 2));
}

std::array<Rational, 6> m_delta_chain(int N, const Rational& q, const Rational& d) {
  require_q(N, q);
  if (d <= 0 || d >= 1) throw DomainError("delta must lie in (0, 1)");
  const Rational a = alpha(N, q);
  const Rational n2 = N + 2;
  const Rational nq = N * q;
  const Rational j = d * n2;

  Rational l0 = big_m(N, q, j);
  Rational l1 = 2 * n2 * ((nq - 2 * n2) / n2 - a * j) /
                (N * ((nq - 2 * n2 + q * a * (nq - N - 2)) / nq - a * j));
  Rational l2 = (2 * (nq - 2 * n2) - 2 * a * d * n2 * n2) / (N * a * (q - d * n2) + N - 2);
  Rational l3 = (2 * n2 * q * (nq - 2 * n2) - 4 * (q - n2) * d * n2 * n2) /
                (2 * N * (q - n2) * (q - d * n2) + (N - 2) * n2 * q);
  const Rational den45 = 2 * N * q * q - n2 * ((1 + 2 * d) * N + 2) * q + 2 * N * d * n2 * n2;
  Rational l4 = n2 * (2 * N * q * q - 4 * n2 * (1 + d) * q + 4 * d * n2 * n2) / den45;
  Rational l5 = n2 + n2 * n2 * (N - 2) * ((1 + 2 * d) * q - 2 * d * n2) / den45;
  return {l0, l1, l2, l3, l4, l5};
}

KInterval k_interval(int N, const Rational& B, const Rational& max_width) {
  const Rational lz = lambda_z(N);
  const Rational disc = B * (B - (N - 1) * lz);
  if (B <= (N - 1) * lz) throw DomainError("B must exceed (N-1) lambda_z");
  // (2B + sqrt(4B[B-(N-1)lz]))/(2B) = 1 + sqrt(B[B-(N-1)lz])/B
  Enclosure root = sqrt_enclosure(disc, max_width * B);
  Enclosure upper{1 + root.lo / B, 1 + root.hi / B};
  return {Rational(1), upper};
}

bool k_in_interval(int N, const Rational& B, const Rational& K) {
  if (K <= 1) return false;
  Rational width(1, 1000000);
  for (int i = 0; i < 64; ++i) {
    KInterval iv = k_interval(N, B, width);
    if (auto ord = compare(K, iv.upper)) return *ord == std::strong_ordering::less;
    width /= 1000000;
  }
  throw DomainError("could not decide K against the interval endpoint");
}

std::array<Rational, 3> b_selection_ratios(int N, const Rational& B) {
  const Rational lz = lambda_z(N);
  return {(N - 2) * lz / (2 * (B - lz)), (N - 2) * lz / (2 * B - (N - 2) * lz),
          (N - 1) * lz / (2 * B - (N - 2) * lz)};
}

Rational qlim_ratio(int N, const Rational& B, const Rational& K) {
  const Rational lz = lambda_z(N);
  const Rational den = 2 * (-B * K * K + 2 * B * K - lz);
  if (den == 0) throw DomainError("qlim ratio denominator vanishes");
  return (N - 2) * lz * K / den;
}

LinearInJ quadratic_in_j(int N, const Rational& q, const Rational& B, const Rational& K) {
  const Rational lz = lambda_z(N);
  const Rational a = alpha(N, q);
  const Rational bracket = -B * K * K * q + K * (q + 2 * B) * q - lz * (q + B);
  Rational a1 = a * q * (B * K * K * q - K * (q + 2 * B) * q + lz * (q + B) + K * (q + B) * (q - lz));
  Rational a2 = bracket * (q - 2 * lz) - lz * a * (q + B) * K * (q - lz) * q;
  return {a1, a2};
}

LinearInJ quadratic_in_j_printed(int N, const Rational& q, const Rational& B, const Rational& K) {
  const Rational lz = lambda_z(N);
  const Rational a = alpha(N, q);
  LinearInJ out = quadratic_in_j(N, q, B, K);
  out.a1 = a * q * ((B * K * K - 2 * B * K + lz) * q - (K - 1) * lz * B);
  return out;
}

std::optional<Rational> printed_r_threshold(int N, const Rational& q, const Rational& B,
                                            const Rational& K) {
  LinearInJ c = quadratic_in_j_printed(N, q, B, K);
  if (c.a1 >= 0) return std::nullopt;
  return c.a2 / (-c.a1);
}

Rational quadratic_in_r(const ExponentParams& p) {
  const Rational& q = p.q;
  const Rational& r = p.r;
  const Rational D = (2 * p.A - 1) * p.b * q + 2 * p.A * p.alpha * q * p.j -
                     2 * p.lambda_z * p.A * p.alpha * q;
  return -(p.A - 1) * p.b * r * r + D * r - p.lambda_z * p.A * p.b * q;
}

std::optional<Rational> r_lower_bound(const ExponentParams& p) {
  const Rational& q = p.q;
  const Rational& lz = p.lambda_z;
  const Rational& a = p.alpha;
  const Rational den = -(2 - p.A) * p.j + lz -
                       (q - 2 * lz - a * q * p.j) * (2 * q - p.M_delta) / (2 * a * q * (q - lz));
  if (den <= 0) return std::nullopt;
  return lz * p.A * p.j / den;
}

std::optional<Rational> r_lower_bound_printed(const ExponentParams& p) {
  const Rational& q = p.q;
  const Rational& lz = p.lambda_z;
  const Rational& a = p.alpha;
  const Rational& Md = p.M_delta;
  const Rational den = ((2 * lz + 2 * p.B - Md) * q - 2 * p.B * lz) * a * p.j -
                       2 * (1 - lz * a) * q * q + (2 * lz * lz * a - Md - 4 * lz) * q + 2 * lz * Md;
  if (den <= 0) return std::nullopt;
  return 2 * a * (q + p.B) * (q - lz) * lz * p.j / den;
}

std::optional<Rational> r_upper_bound(const ExponentParams& p) {
  if (p.b >= 0) return std::nullopt;
  return p.q + 2 * p.A * p.alpha * p.q * p.j / (-(p.A - 1) * p.b);
}

std::optional<Rational> r_upper_bound_third_form(const ExponentParams& p, const Rational& a_sym) {
  if (p.b >= 0) return std::nullopt;
  const Rational& q = p.q;
  const Rational& lz = p.lambda_z;
  const Rational den = p.B * (p.alpha * a_sym * p.j - q + 2 * lz);
  if (den == 0) return std::nullopt;
  return q + (q + p.B) * (q - lz) / p.B + (q + p.B) * (q - lz) * (q - 2 * lz) / den;
}

void populate(ExponentParams& p) {
  require_q(p.N, p.q);
  if (p.delta <= 0 || p.delta >= 1) throw DomainError("delta must lie in (0, 1)");
  if (p.j < 0) throw DomainError("j must be >= 0");
  p.lambda_z = lambda_z(p.N);
  p.alpha = alpha(p.N, p.q);
  p.b = b_exponent(p.N, p.q, p.j);
  const Rational aj = p.alpha * p.j;
  p.M = (aj < alpha_j_upper(p.N, p.q)) ? big_m(p.N, p.q, p.j) : Rational(0);
  p.M_delta = m_delta(p.N, p.q, p.delta);
  p.A = (p.q + p.B) / p.q;
  if (p.r != 2 * p.j) {
    p.s1 = (p.N + 2) * (1 + p.j * p.alpha) /
           ((p.q * p.N - p.N - 2) * p.alpha * (p.r - 2 * p.j));
  } else {
    p.s1.reset();
  }
  if (p.ell && *p.ell != p.r && p.r != 2 * p.j) {
    p.beta1 = p.j * *p.ell / ((p.r - 2 * p.j) * (*p.ell - p.r));
  } else {
    p.beta1.reset();
  }
  p.populated = true;
}

ExponentParams make_params(int N, const Rational& q, const Rational& B, const Rational& K,
                           const Rational& delta, const Rational& j, const Rational& r) {
  ExponentParams p;
  p.N = N;
  p.q = q;
  p.B = B;
  p.K = K;
  p.delta = delta;
  p.j = j;
  p.r = r;
  populate(p);
  return p;
}

std::vector<ConstraintReport> j_lower_bounds(const ExponentParams& p) {
  if (!p.populated) throw DomainError("parameters not populated");
  std::vector<ConstraintReport> out;
  const Rational& q = p.q;
  const Rational& lz = p.lambda_z;
  const Rational& a = p.alpha;
  const Rational& Md = p.M_delta;

  out.push_back(greater_than("j_b_negative", p.j, (q - 2 * lz) / (q * a),
                             "b < 0 exactly when j exceeds this"));

  const Rational jl_den = a * (2 * lz + 2 * p.B - Md) * q - 2 * p.B * a * lz;
  const Rational jl_num = 2 * (1 - lz * a) * q * q + (2 * lz * lz * a - Md - 4 * lz) * q + 2 * lz * Md;
  if (jl_den > 0) {
    out.push_back(greater_than("j_alpha3_below_one", p.j, jl_num / jl_den,
                               "coefficient of j in the alpha_3 condition is negative"));
  } else {
    auto rep = greater_than("j_alpha3_below_one", p.j, jl_den,
                            "coefficient of j is not negative; bound undefined");
    rep.satisfied = false;
    out.push_back(rep);
  }

  if (auto R = printed_r_threshold(p.N, q, p.B, p.K)) {
    auto rep = greater_than("j_quadratic_printed", p.j, *R,
                            "threshold from the printed linear-in-j coefficients");
    rep.gating = false;
    out.push_back(rep);
  } else {
    auto rep = greater_than("j_quadratic_printed", p.j, Rational(0),
                            "printed coefficient of j is not negative; no threshold");
    rep.satisfied = false;
    rep.gating = false;
    out.push_back(rep);
  }

  LinearInJ c = quadratic_in_j(p.N, q, p.B, p.K);
  out.push_back(less_than("j_quadratic", c.a1 * p.j + c.a2, Rational(0),
                          "a1 j + a2 < 0 with coefficients re-derived from the quadratic in r"));
  return out;
}

RFeasibility r_feasible(const ExponentParams& p) {
  if (!p.populated) throw DomainError("parameters not populated");
  RFeasibility out;
  auto& parts = out.parts;

  if (auto lb = r_lower_bound(p)) {
    parts.push_back(greater_than("r_alpha3_below_one", p.r, *lb));
  } else {
    auto rep = greater_than("r_alpha3_below_one", p.r, Rational(0),
                            "denominator of the r bound is not positive");
    rep.satisfied = false;
    parts.push_back(rep);
  }
  parts.push_back(less_than("r_quadratic", quadratic_in_r(p), Rational(0),
                            "quadratic in r evaluated at r"));
  parts.push_back(greater_than("r_above_2j", p.r, 2 * p.j));
  parts.push_back(greater_than("r_above_q", p.r, p.q));
  if (auto ub = r_upper_bound(p)) {
    parts.push_back(less_than("r_below_j2_negative", p.r, *ub));
  } else {
    auto rep = less_than("r_below_j2_negative", p.r, Rational(0), "requires b < 0");
    rep.satisfied = false;
    parts.push_back(rep);
  }

  bool k_ok = false;
  std::string k_note;
  Rational k_upper_mid;
  try {
    k_ok = k_in_interval(p.N, p.B, p.K);
    KInterval iv = k_interval(p.N, p.B);
    k_upper_mid = iv.upper.midpoint();
    k_note = "upper end in [" + to_decimal(iv.upper.lo, 10) + ", " + to_decimal(iv.upper.hi, 10) + "]";
  } catch (const DomainError& e) {
    k_note = e.what();
  }
  auto krep = less_than("k_interval", p.K, k_upper_mid, k_note);
  krep.satisfied = k_ok;
  parts.push_back(krep);

  bool all = std::all_of(parts.begin(), parts.end(),
                         [](const ConstraintReport& c) { return !c.gating || c.satisfied; });
  long failing = std::count_if(parts.begin(), parts.end(),
                               [](const ConstraintReport& c) { return c.gating && !c.satisfied; });
  out.summary = less_than("r_feasible", Rational(failing), Rational(1),
                          "number of failing r constraints");
  out.summary.satisfied = all;
  return out;
}

Certificate certify(const ExponentParams& p) {
  Certificate cert;
  cert.params = p;
  if (!cert.params.populated) populate(cert.params);
  const ExponentParams& q = cert.params;

  for (auto& rep : j_lower_bounds(q)) cert.reports.push_back(rep);
  RFeasibility rf = r_feasible(q);
  for (auto& rep : rf.parts) cert.reports.push_back(rep);

  auto ratios = b_selection_ratios(q.N, q.B);
  for (int i = 0; i < 3; ++i)
    cert.reports.push_back(less_than("b_ratio_" + std::to_string(i + 1), ratios[i], Rational(1, 2)));
  try {
    cert.reports.push_back(less_than("k_qlim_ratio", qlim_ratio(q.N, q.B, q.K), Rational(1, 2)));
  } catch (const DomainError& e) {
    auto rep = less_than("k_qlim_ratio", Rational(0), Rational(1, 2), e.what());
    rep.satisfied = false;
    cert.reports.push_back(rep);
  }
  // the qlim ratio is only meaningful with a positive denominator
  auto& last = cert.reports.back();
  if (last.satisfied && last.lhs <= 0) {
    last.satisfied = false;
    last.note = "qlim ratio denominator is not positive";
  }

  cert.feasible = std::all_of(cert.reports.begin(), cert.reports.end(),
                              [](const ConstraintReport& c) { return !c.gating || c.satisfied; });
  cert.status = cert.feasible ? "feasible" : "infeasible";
  return cert;
}

namespace {

Rational smallest_admissible_b(int N) {
  const Rational lz = lambda_z(N);
  // ratios below 1/2 and B > (N-1) lz; smallest integer strictly above all bounds
  std::array<Rational, 4> bounds = {
      lz + (N - 2) * lz,                   // (N-2)lz/(2(B-lz)) < 1/2
      Rational(N - 2) * lz,                // (N-2)lz/(2B-(N-2)lz) < 1/2  <=> B > (N-2)lz
      ((N - 1) * lz * 2 + (N - 2) * lz) / 2,
      (N - 1) * lz};
  Rational m = *std::max_element(bounds.begin(), bounds.end());
  mpz_class f;
  mpz_fdiv_q(f.get_mpz_t(), m.get_num_mpz_t(), m.get_den_mpz_t());
  return Rational(f + 1);
}

}  // namespace

SearchResult search_parameters(int N, const SearchOptions& opts) {
  require_dimension(N);
  SearchResult result;
  std::map<std::string, long> failures;
  const Rational b0 = smallest_admissible_b(N);

  for (Rational q = 2 * (N + 2); q <= opts.q_max; q *= 2) {
    for (int m = 0; m <= opts.b_doublings; ++m) {
      const Rational B = b0 * Rational(1L << m);
      const KInterval iv = k_interval(N, B);
      for (int t = 1; t < opts.k_steps; ++t) {
        const Rational K = 1 + (iv.upper.lo - 1) * Rational(t, opts.k_steps);
        Rational ratio;
        try {
          ratio = qlim_ratio(N, B, K);
        } catch (const DomainError&) {
          continue;
        }
        if (ratio <= 0 || ratio >= Rational(1, 2)) continue;

        ExponentParams p = make_params(N, q, B, K, opts.delta, q / 2, K * q);
        Certificate cert = certify(p);
        ++result.candidates_examined;
        for (const auto& rep : cert.reports)
          if (rep.gating && !rep.satisfied) ++failures[rep.id];
        result.last_candidate = cert;
        if (cert.feasible) {
          result.params = cert.params;
          result.last_candidate.status = "feasible";
          result.failure_counts.assign(failures.begin(), failures.end());
          return result;
        }
      }
    }
  }
  result.last_candidate.status = "search_exhausted";
  result.failure_counts.assign(failures.begin(), failures.end());
  return result;
}

ExponentParams select_parameters(int N, const SearchOptions& opts) {
  SearchResult res = search_parameters(N, opts);
  if (!res.params) {
    std::string msg = "no certified parameter tuple with q <= " + nsbl::to_string(opts.q_max) +
                      " after " + std::to_string(res.candidates_examined) + " candidates";
    throw SearchExhausted(msg);
  }
  return *res.params;
}

SigmaSolution sigma_solve(int N, const Rational& sigma0, const Rational& s3, const Rational& theta) {
  require_dimension(N);
  if (sigma0 <= 0 || s3 <= 0) throw DomainError("sigma0 and s3 must be positive");
  if (theta <= 0 || theta >= 1) throw DomainError("theta must lie in (0, 1)");
  const Rational coef = sigma0 / theta - s3 / theta + 1;
  if (coef == 0) throw DegenerateCoefficient("sigma0/theta - s3/theta + 1 vanishes");
  SigmaSolution s;
  s.sigma = (1 + (N - 2) * s3 / (2 * theta)) / coef;
  s.delta0 = s3 / theta;
  return s;
}

SigmaSolution sigma_solve(const ExponentParams& p, const Rational& sigma0, const Rational& s3,
                          const Rational& theta) {
  return sigma_solve(p.N, sigma0, s3, theta);
}

// ---------------------------------------------------------------------------
// Recursion

namespace {

/// [lo, hi] with MPFR endpoints rounded outward.
class MpInterval {
 public:
  explicit MpInterval(long prec) {
    mpfr_init2(lo_, prec);
    mpfr_init2(hi_, prec);
    mpfr_set_zero(lo_, 1);
    mpfr_set_zero(hi_, 1);
  }
  MpInterval(const Rational& x, long prec) : MpInterval(prec) {
    mpfr_set_q(lo_, x.get_mpq_t(), MPFR_RNDD);
    mpfr_set_q(hi_, x.get_mpq_t(), MPFR_RNDU);
  }
  MpInterval(const MpInterval& o) : MpInterval(mpfr_get_prec(o.lo_)) {
    mpfr_set(lo_, o.lo_, MPFR_RNDD);
    mpfr_set(hi_, o.hi_, MPFR_RNDU);
  }
  MpInterval& operator=(const MpInterval& o) {
    if (this != &o) {
      mpfr_set(lo_, o.lo_, MPFR_RNDD);
      mpfr_set(hi_, o.hi_, MPFR_RNDU);
    }
    return *this;
  }
  ~MpInterval() {
    mpfr_clear(lo_);
    mpfr_clear(hi_);
  }

  long prec() const { return mpfr_get_prec(lo_); }

  // positive intervals only below
  MpInterval log() const {
    MpInterval r(prec());
    mpfr_log(r.lo_, lo_, MPFR_RNDD);
    mpfr_log(r.hi_, hi_, MPFR_RNDU);
    return r;
  }
  MpInterval exp() const {
    MpInterval r(prec());
    mpfr_exp(r.lo_, lo_, MPFR_RNDD);
    mpfr_exp(r.hi_, hi_, MPFR_RNDU);
    return r;
  }
  MpInterval operator+(const MpInterval& o) const {
    MpInterval r(prec());
    mpfr_add(r.lo_, lo_, o.lo_, MPFR_RNDD);
    mpfr_add(r.hi_, hi_, o.hi_, MPFR_RNDU);
    return r;
  }
  MpInterval operator-() const {
    MpInterval r(prec());
    mpfr_neg(r.lo_, hi_, MPFR_RNDD);
    mpfr_neg(r.hi_, lo_, MPFR_RNDU);
    return r;
  }
  MpInterval operator*(const MpInterval& o) const {
    MpInterval r(prec());
    mpfr_t t;
    mpfr_init2(t, prec());
    const mpfr_srcptr a[2] = {lo_, hi_};
    const mpfr_srcptr b[2] = {o.lo_, o.hi_};
    bool first = true;
    for (auto x : a) {
      for (auto y : b) {
        mpfr_mul(t, x, y, MPFR_RNDD);
        if (first || mpfr_less_p(t, r.lo_)) mpfr_set(r.lo_, t, MPFR_RNDD);
        mpfr_mul(t, x, y, MPFR_RNDU);
        if (first || mpfr_greater_p(t, r.hi_)) mpfr_set(r.hi_, t, MPFR_RNDU);
        first = false;
      }
    }
    mpfr_clear(t);
    return r;
  }

  bool is_zero() const { return mpfr_zero_p(lo_) && mpfr_zero_p(hi_); }
  bool below_pow2(long e) const { return mpfr_cmp_si_2exp(hi_, 1, e) < 0; }
  bool above_pow2(long e) const { return mpfr_cmp_si_2exp(lo_, 1, e) > 0; }
  bool strictly_less(const MpInterval& o) const { return mpfr_less_p(hi_, o.lo_); }

  Enclosure to_enclosure() const {
    Enclosure e;
    mpfr_get_q(e.lo.get_mpq_t(), lo_);
    mpfr_get_q(e.hi.get_mpq_t(), hi_);
    return e;
  }

 private:
  mpfr_t lo_;
  mpfr_t hi_;
};

RecursionResult iterate_exact(const Rational& c, const Rational& b, long alpha_int, const Rational& y0,
                              int n_max, const RecursionOptions& opts) {
  RecursionResult res;
  const Rational floor_v = pow(Rational(2), opts.floor_log2);
  const Rational ceil_v = pow(Rational(2), opts.ceiling_log2);
  Rational y = y0;
  Rational bn = 1;
  res.values.push_back(Enclosure::exact(y));
  for (int n = 0; n < n_max; ++n) {
    if (y == 0) {
      res.values.push_back(Enclosure::exact(y));
      continue;
    }
    if (y < floor_v) {
      res.verdict = RecursionVerdict::ToZero;
      return res;
    }
    if (y > ceil_v) {
      res.verdict = RecursionVerdict::Diverges;
      return res;
    }
    y = c * bn * pow(y, 1 + alpha_int);
    bn *= b;
    res.values.push_back(Enclosure::exact(y));
  }
  if (y == 0 || y < floor_v) res.verdict = RecursionVerdict::ToZero;
  else if (y > ceil_v) res.verdict = RecursionVerdict::Diverges;
  return res;
}

RecursionResult iterate_interval(const Rational& c, const Rational& b, const Rational& alpha,
                                 const Rational& y0, int n_max, long prec,
                                 const RecursionOptions& opts) {
  RecursionResult res;
  res.precision_bits = prec;
  const MpInterval ci(c, prec), bi(b, prec), ei(1 + alpha, prec);
  MpInterval y(y0, prec);
  MpInterval bn(Rational(1), prec);
  res.values.push_back(y.to_enclosure());
  for (int n = 0; n < n_max; ++n) {
    if (y.is_zero()) {
      res.values.push_back(y.to_enclosure());
      continue;
    }
    if (y.below_pow2(opts.floor_log2)) {
      res.verdict = RecursionVerdict::ToZero;
      return res;
    }
    if (y.above_pow2(opts.ceiling_log2)) {
      res.verdict = RecursionVerdict::Diverges;
      return res;
    }
    y = ci * bn * (ei * y.log()).exp();
    bn = bn * bi;
    res.values.push_back(y.to_enclosure());
  }
  if (y.is_zero() || y.below_pow2(opts.floor_log2)) res.verdict = RecursionVerdict::ToZero;
  else if (y.above_pow2(opts.ceiling_log2)) res.verdict = RecursionVerdict::Diverges;
  return res;
}

void require_recursion_inputs(const Rational& c, const Rational& b, const Rational& alpha,
                              const Rational& y0) {
  if (b <= 1) throw DomainError("recursion base b must exceed 1");
  if (c <= 0) throw DomainError("recursion constant c must be positive");
  if (alpha <= 0) throw DomainError("recursion exponent alpha must be positive");
  if (y0 < 0) throw DomainError("recursion start y0 must be nonnegative");
}

}  // namespace

Enclosure recursion_threshold(const Rational& c, const Rational& b, const Rational& alpha,
                              const Rational& max_width) {
  require_recursion_inputs(c, b, alpha, Rational(0));
  for (long prec = 128; prec <= (1L << 16); prec *= 2) {
    const MpInterval inv_a(1 / alpha, prec), inv_a2(1 / (alpha * alpha), prec);
    MpInterval e = (-(MpInterval(c, prec).log() * inv_a) + -(MpInterval(b, prec).log() * inv_a2)).exp();
    Enclosure enc = e.to_enclosure();
    if (enc.width() <= max_width) return enc;
  }
  throw DomainError("threshold enclosure did not reach the requested width");
}

RecursionResult recursion_limit(const Rational& c, const Rational& b, const Rational& alpha,
                                const Rational& y0, int n_max, const RecursionOptions& opts) {
  require_recursion_inputs(c, b, alpha, y0);
  if (n_max < 0) throw DomainError("n_max must be nonnegative");
  if (is_integer(alpha)) return iterate_exact(c, b, alpha.get_num().get_si(), y0, n_max, opts);

  RecursionResult prev = iterate_interval(c, b, alpha, y0, n_max, opts.initial_precision, opts);
  for (long prec = opts.initial_precision * 2; prec <= opts.max_precision; prec *= 2) {
    RecursionResult next = iterate_interval(c, b, alpha, y0, n_max, prec, opts);
    if (next.verdict == prev.verdict && next.values.size() == prev.values.size()) return next;
    prev = std::move(next);
  }
  return prev;
}

std::string to_string(RecursionVerdict v) {
  switch (v) {
    case RecursionVerdict::ToZero: return "to_zero";
    case RecursionVerdict::Diverges: return "diverges";
    case RecursionVerdict::Undecided: return "undecided";
  }
  return "undecided";
}

}  // namespace nsbl::ledger
