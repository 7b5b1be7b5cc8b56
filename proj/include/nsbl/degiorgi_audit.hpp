#pragma once

// Measurable pieces of the level-set estimate chain, evaluated on a solver
// trajectory of the scaled system (u = v / M_sigma). Inequalities with generic
// constants are turned into fitted constants; everything else is checked with
// an explicit tolerance.

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "nsbl/exponent_ledger.hpp"
#include "nsbl/fields.hpp"
#include "nsbl/ns_solver.hpp"

namespace nsbl::audit {

/// One audited inequality lhs <= fitted_constant * rhs. `margin` is relative:
/// (c*rhs - lhs)/|c*rhs|, so it is >= 0 exactly when the check passes
/// (up to the check's stated tolerance). Inapplicable checks always pass.
struct CheckRecord {
  std::string id;
  double lhs = 0;
  double rhs = 0;
  double fitted_constant = 1;
  bool pass = true;
  double margin = 0;
  bool applicable = true;
  std::string note;
};

/// Samples of a scalar over Q_T with trapezoidal time weights.
struct SpaceTime {
  std::vector<RealArray> values;
  std::vector<double> times;
  std::vector<double> weights;
  double cell_volume = 0;

  double measure() const;  // |Q_T|
  double norm(double ell) const;
  double sup() const;
  /// log of int |f|^ell (finite for any ell; -inf for f == 0)
  double log_power_integral(double ell) const;
};

SpaceTime make_space_time(std::vector<RealArray> values, std::vector<double> times, double cell_volume);
/// |u| at every snapshot.
SpaceTime speed_series(const Trajectory& tr);
/// psi = |u|^2 at every snapshot.
SpaceTime psi_series(const Trajectory& tr);

struct ScaledPsi {
  SpaceTime psi;
  SpaceTime psi_tilde;
  double r = 0;
  double A_r = 0;
  double normalized_norm = 0;  // ||psi_tilde||_r recomputed independently
};

/// A_r = ||psi||_{r,Q_T}, psi_tilde = psi / A_r. Throws DegenerateField when A_r = 0.
ScaledPsi build_scaled_psi(const SpaceTime& psi, double r);

struct LevelSetLadder {
  double k = 0;
  int n_max = 0;
  std::vector<double> levels;  // k_n = k - k/2^{n+1}
  std::vector<double> y;       // |{psi_tilde >= k_n}|
  int zero_index = -1;         // first n with y_n = 0, -1 if none by n_max
  bool nonincreasing = true;
  std::string status;          // "reached_zero" or "undecided"
};

/// k must satisfy k >= 2 sup psi_tilde(., 0) unless `enforce_threshold` is
/// false (the fitting ladder). Throws ThresholdTooSmall.
LevelSetLadder build_ladder(const ScaledPsi& psi, double k, int n_max, bool enforce_threshold = true);

struct RecursionFit {
  CheckRecord record;
  double c = 0;          // smallest c with y_{n+1} <= c 4^n P y_n^{1+alpha}; 0 when vacuous
  double prefactor = 0;  // P = M^2 ||u||_{2q}^4 / (k A_r)
  bool lemma_threshold_holds = false;  // y_0 <= (cP)^{-1/alpha} 4^{-1/alpha^2}
  ledger::RecursionVerdict verdict = ledger::RecursionVerdict::Undecided;
};

/// Fits the recursion constant on a ladder and checks the small-start
/// condition of the recursion lemma (b = 4).
RecursionFit check_recursion(const LevelSetLadder& ladder, const ScaledPsi& psi, double norm_u_2q,
                             const ledger::ExponentParams& params, double M_sigma);

struct EnergyCheck {
  CheckRecord identity;  // residual of the energy equality, relative to 1/2 ||u0||^2
  CheckRecord bound;     // ||u||_{2 lambda, Q_T} <= c ||u0||_2
  double c_energy = 0;
};
EnergyCheck check_energy(const Trajectory& tr, double tolerance = 1e-5);

struct PressureCheck {
  CheckRecord record;
  double c_s = 0;
  std::vector<double> ratios;  // per snapshot ||p||_s / (M^2 ||u||_{2s}^2)
};
PressureCheck check_pressure(const Trajectory& tr, double s, double M_sigma);

/// ||f||_{2 ell} <= ||f||_inf^{1-lz/ell} ||f||_{2 lz}^{lz/ell} on every snapshot
/// and on Q_T, plus the exponent chain on psi_tilde. Requires inf > ell > r >= lz.
std::vector<CheckRecord> check_interpolation(const SpaceTime& speed, const ScaledPsi& psi, double ell, double r,
                                             int N = 3);

struct LogLimit {
  CheckRecord closed_form;   // extrapolated finite-ell values against the closed form
  CheckRecord convergence;   // observed order of convergence (expected 1)
  std::vector<double> ells, values, errors;
  double limit = 0;
  double extrapolated = 0;
  double order = 0;
  long clamped_cells = 0;
};
LogLimit log_norm_limit(const SpaceTime& speed, double r);

/// Jensen bound on I_1; applicable only when r > q and b < 0.
CheckRecord check_jensen(const SpaceTime& speed, const ledger::ExponentParams& params);

/// Which side of the dichotomy on int |u|^{2r} ln|u| / int |u|^{2r} the run falls into.
struct Branch {
  std::string name;  // "pos1" or "pos2"
  double lhs = 0;
  double rhs = 0;
};
Branch classify_branch(const SpaceTime& speed, const ledger::ExponentParams& params);

struct FinalBound {
  CheckRecord record;
  double lhs = 0;   // max_t ||v||_inf
  double base = 0;  // ||v0||_inf [1 + ||v0||_inf^{(N-2) delta0/2} ||v0||_2^{delta0}]
  double fitted = 0;
};
/// c <= 0 means "fit": c becomes lhs/base and the check passes with zero margin.
FinalBound check_final_bound(const Trajectory& tr, double M_sigma, const Rational& delta0, double c, int N = 3);

struct AuditSpec {
  Rational q = make_rational(6);
  Rational r = make_rational(3);
  Rational j = make_rational(1);
  Rational B = make_rational(4);
  Rational delta = make_rational(1, 2);
  Rational delta0 = make_rational(1);
  std::vector<Rational> ells = {make_rational(4), make_rational(6)};
  std::vector<double> s_list = {2.0, 3.0};
  int n_max = 40;
  double L1 = 0.5;
  bool calibration = false;

  /// Exponent tuple derived from (q, B, delta, j, r); throws BadExponents.
  ledger::ExponentParams exponents(int N = 3) const;
  void validate(int N = 3) const;
};

/// Constants fitted on a calibration run, applied with a safety factor to
/// held-out runs.
struct Calibration {
  std::map<std::string, double> constants;
  double margin_factor = 1.5;
};

struct AuditReport {
  std::string run_id;
  std::vector<CheckRecord> checks;
  std::map<std::string, double> constants;
  std::map<std::string, std::string> environment;
  std::optional<LevelSetLadder> ladder;        // k from the paper's choice
  std::optional<LevelSetLadder> probe_ladder;  // k = sup psi_tilde, used for fitting
  double k_jt10 = 0;
  double L2 = 0;
  std::string branch;
  bool degenerate = false;  // zero field or zero-duration run
  bool falsified = false;   // final bound violated under a calibrated constant

  const CheckRecord* find(const std::string& id) const;
  bool all_pass() const;
};

struct AuditContext {
  std::string run_id;
  double M_sigma = 1.0;
  Rational sigma;
  SolverConfig solver;
};

AuditReport run_audit(const Trajectory& tr, const AuditContext& ctx, const AuditSpec& spec,
                      const Calibration* calibration = nullptr);

}  // namespace nsbl::audit
