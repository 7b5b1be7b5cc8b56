#include "nsbl/ns_solver.hpp"

#include <cmath>
#include <map>
#include <random>

#include "nsbl/fft.hpp"
#include "nsbl/spectral_ops.hpp"

namespace nsbl {

void SolverConfig::validate() const {
  if (!(nu > 0)) throw BadSpec("viscosity must be positive");
  if (!(dt > 0)) throw BadSpec("dt must be positive");
  if (!(T >= 0)) throw BadSpec("T must be nonnegative");
  if (snapshot_stride < 1) throw BadSpec("snapshot stride must be >= 1");
  if (!(nonlinear_coefficient >= 0)) throw BadSpec("nonlinear coefficient must be nonnegative");
  steps();
}

long SolverConfig::steps() const {
  const double ratio = T / dt;
  const double r = std::round(ratio);
  if (std::abs(ratio - r) > 1e-9 * std::max(1.0, r)) throw BadSpec("T must be an integer multiple of dt");
  return long(r);
}

std::string to_string(Scheme s) { return s == Scheme::RK4 ? "rk4" : "rk2"; }

Scheme parse_scheme(const std::string& s) {
  if (s == "rk4" || s == "RK4") return Scheme::RK4;
  if (s == "rk2" || s == "RK2") return Scheme::RK2;
  throw BadSpec("unknown scheme '" + s + "'");
}

namespace {

double max_speed(const SpectralVelocity& v) {
  PhysicalVelocity u = to_physical(v);
  return std::sqrt(u.magnitude_squared().maxCoeff());
}

/// Per-grid wavenumber tables in physical units.
struct Modes {
  RealArray kx, ky, kz, k2;
  Eigen::Array<bool, Eigen::Dynamic, 1> active;  // inside the band and off the Nyquist planes
  Eigen::Array<bool, Eigen::Dynamic, 1> resolved;  // off the Nyquist planes only
};

const Modes& modes_for(const TorusGrid& g) {
  thread_local std::map<std::pair<int, double>, Modes> cache;
  auto [it, fresh] = cache.try_emplace({g.n, g.L});
  Modes& m = it->second;
  if (fresh) {
    const Eigen::Index S = Eigen::Index(g.spec_size());
    m.kx.resize(S);
    m.ky.resize(S);
    m.kz.resize(S);
    m.k2.resize(S);
    m.active.resize(S);
    m.resolved.resize(S);
    const double kap = g.kappa();
    for_each_mode(g, [&](std::size_t i, int kx, int ky, int kz) {
      const Eigen::Index j = Eigen::Index(i);
      m.kx[j] = kap * kx;
      m.ky[j] = kap * ky;
      m.kz[j] = kap * kz;
      m.k2[j] = m.kx[j] * m.kx[j] + m.ky[j] * m.ky[j] + m.kz[j] * m.kz[j];
      m.resolved[j] = !g.is_nyquist(kx, ky, kz);
      m.active[j] = m.resolved[j] && g.keep(kx, ky, kz);
    });
  }
  return m;
}

void check_finite(const SpectralVelocity& v, double t) {
  for (const auto& a : v.c) {
    const double m = a.abs().maxCoeff();
    if (!std::isfinite(m) || m > 1e15) throw Instability("coefficient magnitude exceeded 1e15", t);
  }
}

// u <- E u with E = exp(-nu |k|^2 h)
void apply_factor(SpectralVelocity& v, const RealArray& E) {
  for (auto& a : v.c) a *= E;
}

// a*x + b*y componentwise into out
SpectralVelocity combine(const SpectralVelocity& x, double a, const SpectralVelocity& y, double b) {
  SpectralVelocity out = x;
  for (int i = 0; i < 3; ++i) out.c[i] = a * x.c[i] + b * y.c[i];
  return out;
}

}  // namespace

ScaledState make_scaled_state(const SpectralVelocity& v0, const Rational& sigma) {
  ScaledState s;
  s.sigma = sigma;
  const double vmax = max_speed(v0);
  if (sigma == 0) {
    s.M_sigma = 1.0;
  } else {
    if (vmax == 0) throw BadSpec("scaling needs nonzero initial data");
    s.M_sigma = std::pow(vmax, to_double(sigma));
  }
  s.u = v0;
  s.u *= 1.0 / s.M_sigma;
  return s;
}

double scaled_state_defect(const ScaledState& s) {
  SpectralVelocity v = s.u;
  v *= s.M_sigma;
  const double vmax = max_speed(v);
  const double m = (s.sigma == 0) ? 1.0 : std::pow(vmax, to_double(s.sigma));
  return std::abs(m - s.M_sigma) / s.M_sigma;
}

SpectralVelocity nonlinear_term(const SpectralVelocity& v, double M, bool dealias) {
  const TorusGrid& g = v.grid;
  const Modes& md = modes_for(g);
  auto& fft = fft_for(g);

  PhysicalVelocity u = to_physical(v);
  SpectralVelocity out(g, v.t);
  if (M == 0) return out;

  // out_i = sum_j k_j (u_i u_j)^, using symmetry of the product
  SpectralArray prod;
  const RealArray* k[3] = {&md.kx, &md.ky, &md.kz};
  for (int a = 0; a < 3; ++a) {
    for (int b = a; b < 3; ++b) {
      fft.forward(RealArray(u.u[a] * u.u[b]), prod);
      out.c[a] += *k[b] * prod;
      if (a != b) out.c[b] += *k[a] * prod;
    }
  }
  leray_project_inplace(out);
  const Complex factor(0.0, -M);  // -M i k_j (u_i u_j)^
  const auto& keep = dealias ? md.active : md.resolved;
  for (auto& a : out.c) a = keep.select(factor * a, Complex(0.0));
  return out;
}

double check_stability(const SpectralVelocity& v0, const SolverConfig& cfg) {
  const double bound = cfg.scheme == Scheme::RK4 ? 2.8 : 2.0;
  const double cfl = cfg.dt * cfg.nonlinear_coefficient * max_speed(v0) * v0.grid.k_max();
  if (cfl > bound)
    throw Instability("advective CFL number " + std::to_string(cfl) + " exceeds " + std::to_string(bound), v0.t);
  return cfl;
}

SpectralVelocity step(const SpectralVelocity& v, const SolverConfig& cfg, double* dissipation) {
  const double h = cfg.dt;
  const double M = cfg.nonlinear_coefficient;
  const Modes& md = modes_for(v.grid);
  const RealArray E1 = (-cfg.nu * h * md.k2).exp();
  auto N = [&](const SpectralVelocity& x) { return nonlinear_term(x, M, cfg.dealias); };
  auto D = [&](const SpectralVelocity& x) { return cfg.nu * gradient_energy(x); };

  SpectralVelocity next(v.grid, v.t + h);
  if (cfg.scheme == Scheme::RK2) {
    // Lawson-Heun
    SpectralVelocity k1 = N(v);
    SpectralVelocity ua = combine(v, 1.0, k1, h);
    apply_factor(ua, E1);
    SpectralVelocity k2 = N(ua);
    for (int i = 0; i < 3; ++i) next.c[i] = E1 * (v.c[i] + 0.5 * h * k1.c[i]) + 0.5 * h * k2.c[i];
    if (dissipation) *dissipation += 0.5 * h * (D(v) + D(ua));
  } else {
    // Lawson RK4: classical RK4 on w = E(-t) u
    const RealArray Eh = (-0.5 * cfg.nu * h * md.k2).exp();
    SpectralVelocity k1 = N(v);
    SpectralVelocity ua = combine(v, 1.0, k1, 0.5 * h);
    apply_factor(ua, Eh);
    SpectralVelocity k2 = N(ua);
    SpectralVelocity ub(v.grid);
    for (int i = 0; i < 3; ++i) ub.c[i] = Eh * v.c[i] + 0.5 * h * k2.c[i];
    SpectralVelocity k3 = N(ub);
    SpectralVelocity uc(v.grid);
    for (int i = 0; i < 3; ++i) uc.c[i] = E1 * v.c[i] + h * Eh * k3.c[i];
    SpectralVelocity k4 = N(uc);
    for (int i = 0; i < 3; ++i)
      next.c[i] = E1 * v.c[i] + (h / 6.0) * (E1 * k1.c[i] + 2.0 * Eh * (k2.c[i] + k3.c[i]) + k4.c[i]);
    if (dissipation) *dissipation += (h / 6.0) * (D(v) + 2 * D(ua) + 2 * D(ub) + D(uc));
  }
  check_finite(next, next.t);
  return next;
}

Trajectory run(const SpectralVelocity& v0, const SolverConfig& cfg) {
  cfg.validate();
  const long nsteps = cfg.steps();
  Trajectory tr;
  tr.snapshots.push_back(v0);
  tr.times.push_back(v0.t);
  tr.dissipation.push_back(0.0);

  try {
    tr.cfl = check_stability(v0, cfg);
  } catch (const Instability& e) {
    tr.unstable = true;
    tr.failure_time = e.time();
    tr.failure_message = e.what();
    return tr;
  }

  SpectralVelocity v = v0;
  double diss = 0;
  const double t0 = v0.t;
  for (long s = 1; s <= nsteps; ++s) {
    try {
      v = step(v, cfg, &diss);
    } catch (const Instability& e) {
      tr.unstable = true;
      tr.failure_time = e.time();
      tr.failure_message = e.what();
      return tr;
    }
    // keep times on the exact lattice rather than accumulating dt
    v.t = t0 + double(s) * cfg.dt;
    tr.steps_taken = s;
    if (s % cfg.snapshot_stride == 0 || s == nsteps) {
      tr.snapshots.push_back(v);
      tr.times.push_back(v.t);
      tr.dissipation.push_back(diss);
    }
  }
  return tr;
}

InitialKind parse_initial_kind(const std::string& s) {
  if (s == "beltrami") return InitialKind::Beltrami;
  if (s == "taylor_green") return InitialKind::TaylorGreen;
  if (s == "random_spectrum") return InitialKind::RandomSpectrum;
  throw BadSpec("unknown initial-data kind '" + s + "'");
}

std::string to_string(InitialKind k) {
  switch (k) {
    case InitialKind::Beltrami: return "beltrami";
    case InitialKind::TaylorGreen: return "taylor_green";
    case InitialKind::RandomSpectrum: return "random_spectrum";
  }
  return "beltrami";
}

PhysicalVelocity beltrami_exact(const InitialSpec& spec, const TorusGrid& g, double nu, double t) {
  const double kap = g.kappa();
  const double decay = spec.amplitude * std::exp(-nu * kap * kap * t);
  const double A = spec.A * decay, B = spec.B * decay, C = spec.C * decay;
  PhysicalVelocity u{g, {}};
  for (auto& a : u.u) a.resize(Eigen::Index(g.real_size()));
  for_each_point(g, [&](std::size_t i, double x, double y, double z) {
    const Eigen::Index j = Eigen::Index(i);
    u.u[0][j] = A * std::sin(kap * z) + C * std::cos(kap * y);
    u.u[1][j] = B * std::sin(kap * x) + A * std::cos(kap * z);
    u.u[2][j] = C * std::sin(kap * y) + B * std::cos(kap * x);
  });
  return u;
}

namespace {

SpectralVelocity taylor_green(const InitialSpec& spec, const TorusGrid& g) {
  const double kap = g.kappa();
  PhysicalVelocity u{g, {}};
  for (auto& a : u.u) a = RealArray::Zero(Eigen::Index(g.real_size()));
  for_each_point(g, [&](std::size_t i, double x, double y, double z) {
    const Eigen::Index j = Eigen::Index(i);
    u.u[0][j] = spec.amplitude * std::sin(kap * x) * std::cos(kap * y) * std::cos(kap * z);
    u.u[1][j] = -spec.amplitude * std::cos(kap * x) * std::sin(kap * y) * std::cos(kap * z);
  });
  return from_physical(u);
}

SpectralVelocity random_spectrum(const InitialSpec& spec, const TorusGrid& g) {
  if (spec.k_max < 1) throw BadSpec("random spectrum needs k_max >= 1");
  if (!(spec.k_peak > 0)) throw BadSpec("random spectrum needs k_peak > 0");
  SpectralVelocity v(g);
  std::mt19937_64 rng(spec.seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  const int K = spec.k_max;
  const int n = g.n, nh = g.nh();
  auto index = [&](int kx, int ky, int kz) {
    const int ix = (kx + n) % n, iy = (ky + n) % n;
    return Eigen::Index((std::size_t(ix) * n + iy) * nh + kz);
  };

  // one representative per conjugate pair, visited in a grid-independent order
  for (int kz = 0; kz <= K; ++kz) {
    for (int ky = -K; ky <= K; ++ky) {
      for (int kx = -K; kx <= K; ++kx) {
        const bool canonical = kz > 0 || ky > 0 || (ky == 0 && kx > 0);
        if (!canonical) continue;
        const int k2 = kx * kx + ky * ky + kz * kz;
        if (k2 > K * K) continue;
        // per-mode variance ~ |k|^2 exp(-|k|^2 / k_peak^2): shell energy ~ k^4 exp(-k^2/k_peak^2)
        const double sd = std::sqrt(double(k2)) * std::exp(-0.5 * k2 / (spec.k_peak * spec.k_peak));
        Complex c[3];
        for (auto& ci : c) {
          const double re = gauss(rng), im = gauss(rng);
          ci = sd * Complex(re, im);
        }
        if (!g.keep(kx, ky, kz)) continue;  // draws are consumed either way
        for (int i = 0; i < 3; ++i) {
          v.c[i][index(kx, ky, kz)] = c[i];
          if (kz == 0) v.c[i][index(-kx, -ky, 0)] = std::conj(c[i]);
        }
      }
    }
  }
  leray_project_inplace(v);
  // rms |u| = amplitude, i.e. full-spectrum sum |c|^2 = amplitude^2
  const double norm = coefficient_norm(v);
  if (norm == 0) throw BadSpec("random spectrum has no resolved modes on this grid");
  v *= spec.amplitude / norm;
  return v;
}

}  // namespace

SpectralVelocity make_initial(const InitialSpec& spec, const TorusGrid& g) {
  g.validate();
  if (!(spec.amplitude >= 0) || !std::isfinite(spec.amplitude)) throw BadSpec("amplitude must be finite and >= 0");
  SpectralVelocity v(g);
  switch (spec.kind) {
    case InitialKind::Beltrami: v = from_physical(beltrami_exact(spec, g, 1.0, 0.0)); break;
    case InitialKind::TaylorGreen: v = taylor_green(spec, g); break;
    case InitialKind::RandomSpectrum: v = random_spectrum(spec, g); break;
  }
  leray_project_inplace(v);
  dealias_inplace(v);
  for (auto& a : v.c) a[0] = 0;  // mean-zero exactly, not just to rounding
  v.t = 0.0;
  return v;
}

}  // namespace nsbl
