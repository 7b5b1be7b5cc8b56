#pragma once

#include <cstddef>
#include <cstdlib>
#include <numbers>

#include "nsbl/errors.hpp"

namespace nsbl {

/// Periodic box [0, L)^3 sampled on n points per axis.
///
/// Real data is stored x-major, z fastest: (ix*n + iy)*n + iz. Spectral data
/// uses the real-to-complex half layout: (ix*n + iy)*(n/2+1) + kz.
struct TorusGrid {
  int N = 3;
  int n = 32;
  double L = 2 * std::numbers::pi;

  TorusGrid() = default;
  TorusGrid(int n_, double L_ = 2 * std::numbers::pi, int N_ = 3) : N(N_), n(n_), L(L_) {
    validate();
  }

  void validate() const {
    if (N != 3) throw BadSpec("only three-dimensional grids are supported");
    if (n < 8 || n % 2 != 0) throw BadSpec("points per axis must be even and >= 8");
    if (!(L > 0)) throw BadSpec("box length must be positive");
  }

  int nh() const { return n / 2 + 1; }
  std::size_t real_size() const { return std::size_t(n) * n * n; }
  std::size_t spec_size() const { return std::size_t(n) * n * nh(); }

  double volume() const { return L * L * L; }
  double cell_volume() const { return volume() / double(real_size()); }
  double kappa() const { return 2 * std::numbers::pi / L; }
  double dx() const { return L / n; }

  /// Signed integer wavenumber of array index i along a full axis.
  int wavenumber(int i) const { return i <= n / 2 ? i : i - n; }

  /// Nyquist planes carry no odd derivative.
  bool is_nyquist(int kx, int ky, int kz) const {
    return std::abs(kx) == n / 2 || std::abs(ky) == n / 2 || kz == n / 2;
  }

  /// 2/3 rule: keep |k_i| < n/3 on every axis.
  bool keep(int kx, int ky, int kz) const {
    return 3 * std::abs(kx) < n && 3 * std::abs(ky) < n && 3 * kz < n;
  }

  /// Multiplicity of a half-spectrum mode in full-spectrum sums.
  double weight(int kz) const { return (kz == 0 || kz == n / 2) ? 1.0 : 2.0; }

  /// Largest retained |k| along one axis, in physical units.
  double k_max() const { return kappa() * ((n - 1) / 3); }

  bool operator==(const TorusGrid& o) const { return N == o.N && n == o.n && L == o.L; }
};

/// Calls f(index, kx, ky, kz) for every half-spectrum mode (integer wavenumbers).
template <class F>
void for_each_mode(const TorusGrid& g, F&& f) {
  const int nh = g.nh();
  std::size_t idx = 0;
  for (int ix = 0; ix < g.n; ++ix) {
    const int kx = g.wavenumber(ix);
    for (int iy = 0; iy < g.n; ++iy) {
      const int ky = g.wavenumber(iy);
      for (int kz = 0; kz < nh; ++kz, ++idx) f(idx, kx, ky, kz);
    }
  }
}

/// Calls f(index, x, y, z) for every grid point.
template <class F>
void for_each_point(const TorusGrid& g, F&& f) {
  const double h = g.dx();
  std::size_t idx = 0;
  for (int ix = 0; ix < g.n; ++ix)
    for (int iy = 0; iy < g.n; ++iy)
      for (int iz = 0; iz < g.n; ++iz, ++idx) f(idx, ix * h, iy * h, iz * h);
}

}  // namespace nsbl
