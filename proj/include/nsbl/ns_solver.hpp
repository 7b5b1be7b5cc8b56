#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "nsbl/fields.hpp"
#include "nsbl/rational.hpp"

namespace nsbl {

enum class Scheme { RK4, RK2 };

struct SolverConfig {
  double nu = 1.0;
  double dt = 1e-3;
  double T = 0.5;
  int snapshot_stride = 10;
  bool dealias = true;
  Scheme scheme = Scheme::RK4;
  double nonlinear_coefficient = 1.0;  // M_sigma of the scaled system; 1 is plain Navier-Stokes

  void validate() const;
  /// Number of steps T/dt; BadSpec unless T/dt is an integer to rounding.
  long steps() const;
};

std::string to_string(Scheme s);
Scheme parse_scheme(const std::string& s);

/// u = v / M_sigma with M_sigma = ||v0||_inf^sigma.
struct ScaledState {
  SpectralVelocity u;
  double M_sigma = 1.0;
  Rational sigma;
};

/// Scales initial data. For sigma != 0 the field must not vanish.
ScaledState make_scaled_state(const SpectralVelocity& v0, const Rational& sigma);
/// |M_sigma - ||M_sigma u||_inf^sigma| relative; the ScaledState invariant.
double scaled_state_defect(const ScaledState& s);

/// -M P[div(u (x) u)] evaluated pseudo-spectrally (products dealiased when asked).
SpectralVelocity nonlinear_term(const SpectralVelocity& v, double M = 1.0, bool dealias = true);

/// One time step. Throws Instability when a coefficient exceeds 1e15 or
/// becomes non-finite. `dissipation`, if given, accumulates nu int |grad u|^2
/// over the step with the scheme's own stage weights.
SpectralVelocity step(const SpectralVelocity& v, const SolverConfig& cfg, double* dissipation = nullptr);

/// Start-up check dt * M * max|u| * k_max against the scheme's bound.
/// Returns the CFL number; throws Instability when it is too large.
double check_stability(const SpectralVelocity& v0, const SolverConfig& cfg);

struct Trajectory {
  std::vector<SpectralVelocity> snapshots;
  std::vector<double> times;
  std::vector<double> dissipation;  // nu int_0^t ||grad u||^2 at each snapshot
  long steps_taken = 0;
  double cfl = 0;

  // Instability is a result, not a crash
  bool unstable = false;
  double failure_time = 0;
  std::string failure_message;

  const TorusGrid& grid() const { return snapshots.front().grid; }
};

/// Integrates to cfg.T, keeping the initial data, every snapshot_stride-th
/// step, and the final state.
Trajectory run(const SpectralVelocity& v0, const SolverConfig& cfg);

enum class InitialKind { Beltrami, TaylorGreen, RandomSpectrum };
InitialKind parse_initial_kind(const std::string& s);
std::string to_string(InitialKind k);

struct InitialSpec {
  InitialKind kind = InitialKind::Beltrami;
  std::uint64_t seed = 0;
  double amplitude = 1.0;
  // Beltrami coefficients are amplitude * (A, B, C)
  double A = 1.0, B = 1.0, C = 1.0;
  // random spectrum: integer shells 1 <= |k| <= k_max, peak at k_peak
  int k_max = 4;
  double k_peak = 2.0;
};

/// Divergence-free, real, mean-zero initial data. The random spectrum draws
/// the same coefficients on every grid that resolves its shells.
SpectralVelocity make_initial(const InitialSpec& spec, const TorusGrid& g);

/// Closed-form Beltrami field amplitude*(A sin kz + C cos ky, B sin kx + A cos kz,
/// C sin ky + B cos kx) at time t under viscosity nu.
PhysicalVelocity beltrami_exact(const InitialSpec& spec, const TorusGrid& g, double nu, double t);

}  // namespace nsbl
