#include <cmath>

#include "doctest.h"
#include "nsbl/degiorgi_audit.hpp"
#include "nsbl/norms.hpp"
#include "nsbl/spectral_ops.hpp"

using namespace nsbl;
using namespace nsbl::audit;

namespace {

SpectralVelocity random_field(const TorusGrid& g, std::uint64_t seed, double amp = 1.0) {
  InitialSpec s;
  s.kind = InitialKind::RandomSpectrum;
  s.seed = seed;
  s.amplitude = amp;
  return make_initial(s, g);
}

Trajectory single(const SpectralVelocity& v) {
  Trajectory tr;
  tr.snapshots = {v};
  tr.times = {0.0};
  tr.dissipation = {0.0};
  return tr;
}

// u = (sin z, cos z, 0): |u| = 1 everywhere
SpectralVelocity unit_speed_field(const TorusGrid& g) {
  InitialSpec s;
  s.A = 1;
  s.B = 0;
  s.C = 0;
  return make_initial(s, g);
}

SpaceTime constant_series(const TorusGrid& g, std::vector<double> levels, std::vector<double> times) {
  std::vector<RealArray> vals;
  for (double c : levels) vals.push_back(RealArray::Constant(Eigen::Index(g.real_size()), c));
  return make_space_time(std::move(vals), std::move(times), g.cell_volume());
}

}  // namespace

TEST_CASE("zero field is vacuous everywhere") {
  TorusGrid g(16);
  SolverConfig cfg;
  cfg.T = 0.01;
  Trajectory tr = run(SpectralVelocity(g), cfg);
  AuditContext ctx;
  ctx.run_id = "zero";
  ctx.solver = cfg;
  AuditReport rep = run_audit(tr, ctx, AuditSpec{});
  CHECK(rep.degenerate);
  CHECK(rep.all_pass());
  CHECK_FALSE(rep.falsified);
  CHECK_FALSE(rep.find("recursion")->applicable);
  CHECK_THROWS_AS(build_scaled_psi(psi_series(tr), 3.0), DegenerateField);

  // zero duration is degenerate too
  cfg.T = 0;
  Trajectory t0 = run(random_field(g, 1), cfg);
  CHECK_THROWS_AS(build_scaled_psi(psi_series(t0), 3.0), DegenerateField);
  CHECK(run_audit(t0, ctx, AuditSpec{}).degenerate);
}

TEST_CASE("ladder levels and threshold") {
  TorusGrid g(8);
  // psi_tilde ends up with sup 1 at t = 0 after scaling by A_r
  SpaceTime psi = constant_series(g, {2.0, 2.0}, {0.0, 1.0});
  ScaledPsi sp = build_scaled_psi(psi, 3.0);
  CHECK(sp.normalized_norm == doctest::Approx(1.0).epsilon(1e-12));
  const double s0 = sp.psi_tilde.values.front().maxCoeff();

  LevelSetLadder L = build_ladder(sp, 8.0, 3, false);
  REQUIRE(L.levels.size() == 4);
  CHECK(L.levels[0] == 4.0);
  CHECK(L.levels[1] == 6.0);
  CHECK(L.levels[2] == 7.0);
  CHECK(L.levels[3] == 7.5);

  CHECK_THROWS_AS(build_ladder(sp, 1.9 * s0, 5), ThresholdTooSmall);
  LevelSetLadder ok = build_ladder(sp, 2 * s0, 5);
  // constant psi_tilde = s0 sits exactly on k_0 = s0
  CHECK(ok.y[0] == doctest::Approx(g.volume()));
  CHECK(ok.y[1] == 0);
  CHECK(ok.zero_index == 1);
  CHECK(ok.status == "reached_zero");
  CHECK(ok.nonincreasing);

  LevelSetLadder probe = build_ladder(sp, 0.5 * s0, 3, false);
  CHECK(probe.zero_index == -1);
  CHECK(probe.status == "undecided");
}

TEST_CASE("recursion fit on a synthetic ladder") {
  // y_n = 2^{-2^{n+2}} obeys y_{n+1} = y_n^2 exactly; with P = 1 the fit is max 4^{-n} = 1
  LevelSetLadder L;
  L.k = 1;
  L.n_max = 6;
  for (int n = 0; n <= 6; ++n) L.y.push_back(std::ldexp(1.0, -(1 << (n + 2))));
  ScaledPsi sp;
  sp.A_r = 1;
  ledger::ExponentParams p;
  p.alpha = make_rational(1);
  RecursionFit f = check_recursion(L, sp, 1.0, p, 1.0);
  CHECK(f.prefactor == 1.0);
  CHECK(f.c == doctest::Approx(1.0).epsilon(1e-15));
  // y0 = 1/16 <= (cP)^{-1} 4^{-1} = 1/4
  CHECK(f.lemma_threshold_holds);
  // six steps are not enough to certify the limit
  CHECK(f.verdict == ledger::RecursionVerdict::Undecided);
  LevelSetLadder longer = L;
  longer.n_max = 40;
  longer.y.resize(41, 0.0);
  CHECK(check_recursion(longer, sp, 1.0, p, 1.0).verdict == ledger::RecursionVerdict::ToZero);

  // y0 = 1/2 is above the small-start threshold and the extremal recursion blows up
  LevelSetLadder big = L;
  big.n_max = 40;
  big.y.assign(41, 0.0);
  big.y[0] = 0.5;
  big.y[1] = 0.25;
  RecursionFit fb = check_recursion(big, sp, 1.0, p, 1.0);
  CHECK_FALSE(fb.lemma_threshold_holds);
  CHECK(fb.verdict == ledger::RecursionVerdict::Diverges);

  // nothing to fit
  LevelSetLadder empty = L;
  empty.y.assign(7, 0.0);
  RecursionFit fe = check_recursion(empty, sp, 1.0, p, 1.0);
  CHECK(fe.c == 0);
  CHECK(fe.record.pass);
}

TEST_CASE("Beltrami pressure ratio") {
  TorusGrid g(32);
  InitialSpec b;
  SpectralVelocity v = make_initial(b, g);
  PressureCheck pc = check_pressure(single(v), 2.0, 1.0);
  RealArray e = 0.5 * to_physical(v).magnitude_squared();
  RealArray p = -(e - e.mean());
  const RealArray speed = (2 * e).sqrt();
  const double expected = lebesgue_norm(p, 2.0, g.cell_volume()) / std::pow(lebesgue_norm(speed, 4.0, g.cell_volume()), 2);
  CHECK(pc.c_s == doctest::Approx(expected).epsilon(1e-8));
  CHECK(pc.c_s < 1);
  CHECK_THROWS_AS(check_pressure(single(v), 1.0, 1.0), BadExponents);
}

TEST_CASE("pressure constant is invariant under parabolic scaling") {
  TorusGrid g(16), gs(16, M_PI);
  SpectralVelocity v = random_field(g, 12);
  // u_2(x) = 2 u(2x) on the half-size box has the same coefficients times 2
  SpectralVelocity w(gs);
  for (int i = 0; i < 3; ++i) w.c[i] = 2.0 * v.c[i];
  for (double s : {2.0, 3.0}) {
    const double a = check_pressure(single(v), s, 1.0).c_s;
    const double b = check_pressure(single(w), s, 1.0).c_s;
    CHECK(b == doctest::Approx(a).epsilon(1e-12));
  }
}

TEST_CASE("interpolation inequalities") {
  TorusGrid g(16);
  SolverConfig cfg;
  cfg.T = 0.05;
  Trajectory tr = run(random_field(g, 7, 2.0), cfg);
  SpaceTime speed = speed_series(tr);
  ScaledPsi sp = build_scaled_psi(psi_series(tr), 3.0);
  for (double ell : {4.0, 6.0, 10.0}) {
    for (const auto& rec : check_interpolation(speed, sp, ell, 3.0)) {
      INFO(rec.id);
      CHECK(rec.pass);
      CHECK(rec.margin >= -1e-12);
    }
  }
  CHECK_THROWS_AS(check_interpolation(speed, sp, 3.0, 3.0), BadExponents);
  CHECK_THROWS_AS(check_interpolation(speed, sp, kInfinity, 3.0), BadExponents);
  CHECK_THROWS_AS(check_interpolation(speed, sp, 4.0, 1.5), BadExponents);

  // equality for a constant modulus
  Trajectory c = run(unit_speed_field(g), cfg);
  SpaceTime cs = speed_series(c);
  auto recs = check_interpolation(cs, build_scaled_psi(psi_series(c), 3.0), 4.0, 3.0);
  CHECK(std::abs(recs[0].margin) <= 1e-12);
}

TEST_CASE("log-norm limit") {
  TorusGrid g(16);
  SolverConfig cfg;
  cfg.T = 0.04;
  cfg.snapshot_stride = 10;
  // |u| = e^{-t} everywhere: the limit is still explicit but not a pure volume power
  Trajectory c = run(unit_speed_field(g), cfg);
  SpaceTime cs = speed_series(c);
  LogLimit ll = log_norm_limit(cs, 3.0);
  CHECK(ll.closed_form.pass);
  CHECK(ll.convergence.pass);
  CHECK(ll.order == doctest::Approx(1.0).epsilon(0.2));
  CHECK(ll.clamped_cells == 0);

  // single time slice of a unit-modulus field: limit |Q|^{-1/(2 r^2)} over the space-time measure
  SpaceTime unit = constant_series(g, {1.0, 1.0}, {0.0, 0.5});
  LogLimit lu = log_norm_limit(unit, 3.0);
  const double expected = std::pow(unit.measure(), -1.0 / 18.0);
  CHECK(std::abs(lu.limit - expected) <= 1e-10 * expected);
  CHECK(std::abs(lu.extrapolated - expected) <= 1e-6 * expected);

  Trajectory tr = run(random_field(g, 8, 1.5), cfg);
  LogLimit lr = log_norm_limit(speed_series(tr), 3.0);
  CHECK(lr.closed_form.pass);
  CHECK(lr.convergence.pass);
  for (std::size_t i = 1; i < lr.errors.size(); ++i) CHECK(lr.errors[i] < lr.errors[i - 1]);

  // zero cells are clamped, not turned into NaN
  SpaceTime half = constant_series(g, {1.0, 1.0}, {0.0, 1.0});
  for (auto& v : half.values) v.head(v.size() / 2) = 0;
  LogLimit lh = log_norm_limit(half, 3.0);
  CHECK(std::isfinite(lh.limit));
  CHECK(lh.clamped_cells > 0);
}

TEST_CASE("Jensen bound applies only for r > q and b < 0") {
  TorusGrid g(16);
  SolverConfig cfg;
  cfg.T = 0.05;
  Trajectory tr = run(random_field(g, 9, 2.0), cfg);
  SpaceTime speed = speed_series(tr);
  auto p = ledger::make_params(3, make_rational(6), make_rational(4), make_rational(1), make_rational(1, 2), make_rational(7),
                               make_rational(16));
  REQUIRE(p.b < 0);
  CheckRecord j = check_jensen(speed, p);
  CHECK(j.applicable);
  CHECK(j.pass);
  CHECK(j.margin >= 0);

  AuditSpec def;
  CHECK_FALSE(check_jensen(speed, def.exponents()).applicable);
}

TEST_CASE("branch classification") {
  TorusGrid g(8);
  AuditSpec spec;
  auto p = spec.exponents();
  // tiny values: log|u| very negative, so the left side is below the right one
  SpaceTime small = constant_series(g, {1e-3, 1e-3}, {0.0, 1.0});
  Branch b = classify_branch(small, p);
  CHECK((b.name == "pos1" || b.name == "pos2"));
  CHECK((b.lhs >= b.rhs) == (b.name == "pos1"));
}

TEST_CASE("final bound constant is scale invariant") {
  TorusGrid g(16), gs(16, M_PI);
  SpectralVelocity v = random_field(g, 13, 2.0);
  SpectralVelocity w(gs);
  for (int i = 0; i < 3; ++i) w.c[i] = 2.0 * v.c[i];
  SolverConfig cfg;
  cfg.T = 0.08;
  cfg.dt = 2e-3;
  SolverConfig cs = cfg;
  cs.T = cfg.T / 4;
  cs.dt = cfg.dt / 4;
  Trajectory a = run(v, cfg);
  Trajectory b = run(w, cs);
  REQUIRE_FALSE(a.unstable);
  REQUIRE_FALSE(b.unstable);
  FinalBound fa = check_final_bound(a, 1.0, make_rational(1), 0);
  FinalBound fb = check_final_bound(b, 1.0, make_rational(1), 0);
  CHECK(fb.lhs / fa.lhs == doctest::Approx(2.0).epsilon(1e-10));
  CHECK(fb.fitted / fa.fitted == doctest::Approx(1.0).epsilon(1e-10));

  // with a constant supplied the check can fail
  FinalBound tight = check_final_bound(a, 1.0, make_rational(1), 0.5 * fa.fitted);
  CHECK_FALSE(tight.record.pass);
  CHECK(tight.record.margin < 0);
}

TEST_CASE("audit of a short run, fitted then calibrated") {
  TorusGrid g(16);
  SolverConfig cfg;
  cfg.T = 0.1;
  SpectralVelocity v = random_field(g, 21, 1.0);
  ScaledState s = make_scaled_state(v, make_rational(0));
  cfg.nonlinear_coefficient = s.M_sigma;
  Trajectory tr = run(s.u, cfg);
  AuditContext ctx{"short", s.M_sigma, s.sigma, cfg};
  AuditSpec spec;
  AuditReport rep = run_audit(tr, ctx, spec);
  for (const auto& c : rep.checks) {
    INFO(c.id << " " << c.note);
    CHECK(c.pass);
  }
  REQUIRE(rep.ladder);
  CHECK(rep.ladder->nonincreasing);
  CHECK(rep.k_jt10 >= 2 * rep.probe_ladder->k);
  CHECK(rep.constants.count("c_recursion"));
  CHECK(rep.L2 > 0);

  Calibration cal{rep.constants, 1.5};
  AuditReport again = run_audit(tr, ctx, spec, &cal);
  CHECK(again.all_pass());
  CHECK_FALSE(again.falsified);

  AuditSpec bad;
  bad.ells = {make_rational(3)};
  CHECK_THROWS_AS(run_audit(tr, ctx, bad), BadExponents);
}
