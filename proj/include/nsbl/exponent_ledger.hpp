#pragma once

// Exact-rational bookkeeping for the exponents of the level-set iteration:
// closed forms, their alternative algebraic expansions, the feasibility
// constraints on (q, B, K, j, r), a lattice search over them, and the
// extremal recursion y_{n+1} = c b^n y_n^{1+alpha}.

#include <array>
#include <optional>
#include <string>
#include <vector>

#include "nsbl/enclosure.hpp"
#include "nsbl/rational.hpp"

namespace nsbl::ledger {

/// One exactly evaluated comparison. `relation` is "<" or ">", read as
/// `lhs relation rhs`; margin is positive exactly when satisfied.
struct ConstraintReport {
  std::string id;
  Rational lhs;
  Rational rhs;
  std::string relation;
  bool satisfied = false;
  Rational margin;
  std::string note;
  bool gating = true;  // false for diagnostic reports that do not decide feasibility
};

ConstraintReport greater_than(std::string id, const Rational& lhs, const Rational& rhs,
                              std::string note = {});
ConstraintReport less_than(std::string id, const Rational& lhs, const Rational& rhs,
                           std::string note = {});

/// Inputs (N, q, B, K, delta, j, r) plus everything derived from them.
struct ExponentParams {
  int N = 3;
  Rational q;
  Rational B;
  Rational K;
  Rational delta;
  Rational j;
  Rational r;

  // derived by populate()
  Rational lambda_z;
  Rational alpha;
  Rational b;        // at j
  Rational M;        // at j
  Rational M_delta;  // at j = delta (N+2)
  Rational A;        // (q + B) / q
  bool populated = false;

  // optional extras
  std::optional<Rational> s1;      // (N+2)(1+j alpha)/((qN-N-2) alpha (r-2j)); needs r != 2j
  std::optional<Rational> ell;     // fixes beta1 when present
  std::optional<Rational> beta1;   // j ell / ((r - 2j)(ell - r))
  std::optional<Rational> sigma;   // filled by sigma_solve
  std::optional<Rational> delta0;  // filled by sigma_solve
};

/// Builds and populates a parameter tuple. Throws DomainError when N < 3,
/// q <= N+2 or delta is outside (0, 1).
ExponentParams make_params(int N, const Rational& q, const Rational& B, const Rational& K,
                           const Rational& delta, const Rational& j, const Rational& r);

/// Recomputes every derived field from the inputs.
void populate(ExponentParams& p);

Rational lambda_z(int N);
Rational alpha(int N, const Rational& q);

/// The three displayed algebraic forms of b; all equal exactly.
std::array<Rational, 3> b_exponent_forms(int N, const Rational& q, const Rational& j);
Rational b_exponent(int N, const Rational& q, const Rational& j);

/// Upper end of the admissible interval for alpha*j (lower end 0).
Rational alpha_j_upper(int N, const Rational& q);

/// M = 2q(2 alpha j + b)/(b + 2 q alpha). Requires 0 <= alpha j < alpha_j_upper.
Rational big_m(int N, const Rational& q, const Rational& j);
/// The expanded form of M in terms of (N, q, alpha j).
Rational big_m_expanded(int N, const Rational& q, const Rational& j);
/// M at j = 0 as three closed forms.
std::array<Rational, 3> big_m_at_zero_forms(int N, const Rational& q);

Rational m_delta(int N, const Rational& q, const Rational& delta);
/// The six-line rewriting chain of M_delta ending in N+2 + O(1/q).
std::array<Rational, 6> m_delta_chain(int N, const Rational& q, const Rational& delta);

/// (1, upper) with the irrational upper end as a certified enclosure.
struct KInterval {
  Rational lower;
  Enclosure upper;
};
KInterval k_interval(int N, const Rational& B, const Rational& max_width = Rational(1, 1000000));

/// K strictly inside k_interval, decided by refining the enclosure.
bool k_in_interval(int N, const Rational& B, const Rational& K);

/// The three ratios that must stay below 1/2 when choosing B.
std::array<Rational, 3> b_selection_ratios(int N, const Rational& B);
/// Large-q limit of the j-threshold over q, at given B and K.
Rational qlim_ratio(int N, const Rational& B, const Rational& K);

/// Coefficients of the quadratic constraint on r rewritten as a1 j + a2 < 0
/// under r = K q.
struct LinearInJ {
  Rational a1;
  Rational a2;
};
/// Re-derived coefficients: a1 j + a2 equals (q - lambda)/2 times the
/// quadratic at r = K q, identically.
LinearInJ quadratic_in_j(int N, const Rational& q, const Rational& B, const Rational& K);
/// Coefficients exactly as printed in the source derivation (a1 differs).
LinearInJ quadratic_in_j_printed(int N, const Rational& q, const Rational& B, const Rational& K);
/// The printed j-threshold R = a2 / (-a1_printed); nullopt when a1_printed >= 0.
std::optional<Rational> printed_r_threshold(int N, const Rational& q, const Rational& B,
                                            const Rational& K);

/// Left-hand side of the quadratic constraint on r (must be < 0).
Rational quadratic_in_r(const ExponentParams& p);
/// Lower bound on r from alpha_3 < 1 (first displayed form); nullopt when its
/// denominator is not positive.
std::optional<Rational> r_lower_bound(const ExponentParams& p);
/// Expanded form of the same bound with the printed signs (for comparison only).
std::optional<Rational> r_lower_bound_printed(const ExponentParams& p);
/// Upper bound on r keeping J2 < 0; nullopt unless b < 0.
std::optional<Rational> r_upper_bound(const ExponentParams& p);
/// Third displayed form of the upper bound with the undefined symbol read as `a`.
std::optional<Rational> r_upper_bound_third_form(const ExponentParams& p, const Rational& a);

std::vector<ConstraintReport> j_lower_bounds(const ExponentParams& p);

struct RFeasibility {
  ConstraintReport summary;
  std::vector<ConstraintReport> parts;
};
RFeasibility r_feasible(const ExponentParams& p);

struct Certificate {
  ExponentParams params;
  std::vector<ConstraintReport> reports;
  bool feasible = false;
  std::string status;  // "feasible", "infeasible", "search_exhausted"
};

/// All reports for a tuple: j bounds, r constraints, K interval, B ratios.
Certificate certify(const ExponentParams& p);

struct SearchOptions {
  Rational q_max = Rational(1L << 30);
  int b_doublings = 3;  // B, 2B, 4B, 8B
  int k_steps = 8;      // K on a fixed grid inside the admissible interval
  Rational delta = Rational(1, 2);
};

struct SearchResult {
  std::optional<ExponentParams> params;
  Certificate last_candidate;  // last tuple examined (diagnostics when exhausted)
  long candidates_examined = 0;
  std::vector<std::pair<std::string, long>> failure_counts;  // per report id
};

/// Lattice search with j = q/2, r = K q and q doubling from 2(N+2); returns
/// the smallest certified q (ties broken by B then K).
SearchResult search_parameters(int N, const SearchOptions& opts = {});
/// search_parameters, throwing SearchExhausted when nothing is certified.
ExponentParams select_parameters(int N, const SearchOptions& opts = {});

struct SigmaSolution {
  Rational sigma;
  Rational delta0;
};
/// Solves sigma (sigma0/theta - s3/theta + 1) - 1 = (N-2) s3 / (2 theta).
SigmaSolution sigma_solve(int N, const Rational& sigma0, const Rational& s3, const Rational& theta);
SigmaSolution sigma_solve(const ExponentParams& p, const Rational& sigma0, const Rational& s3,
                          const Rational& theta);

/// Outcome of iterating the extremal recursion.
enum class RecursionVerdict { ToZero, Diverges, Undecided };

struct RecursionOptions {
  long floor_log2 = -4096;   // stop once y_n < 2^floor_log2 (verdict ToZero)
  long ceiling_log2 = 4096;  // stop once y_n > 2^ceiling_log2 (verdict Diverges)
  long initial_precision = 128;
  long max_precision = 1 << 14;
};

struct RecursionResult {
  std::vector<Enclosure> values;  // exact (lo == hi) for integer alpha
  RecursionVerdict verdict = RecursionVerdict::Undecided;
  long precision_bits = 0;        // 0 when evaluated exactly
};

/// Threshold c^{-1/alpha} b^{-1/alpha^2} below which the iterates tend to zero,
/// enclosed to the given width.
Enclosure recursion_threshold(const Rational& c, const Rational& b, const Rational& alpha,
                              const Rational& max_width = Rational(1, 1000000000));

/// Iterates y_{n+1} = c b^n y_n^{1+alpha} for n < n_max. Exact for integer
/// alpha; otherwise directed-rounding enclosures with precision doubled until
/// the verdict agrees at two consecutive precisions.
RecursionResult recursion_limit(const Rational& c, const Rational& b, const Rational& alpha,
                                const Rational& y0, int n_max, const RecursionOptions& opts = {});

std::string to_string(RecursionVerdict v);

}  // namespace nsbl::ledger
