#include "nsbl/spectral_ops.hpp"

#include <algorithm>
#include <cmath>

#include "nsbl/fft.hpp"

namespace nsbl {

namespace {

void require_sizes(const SpectralVelocity& v) {
  for (const auto& a : v.c)
    if (std::size_t(a.size()) != v.grid.spec_size()) throw ShapeMismatch("coefficient array does not match grid");
}

}  // namespace

SpectralArray transform_forward(const RealArray& data, const TorusGrid& g) {
  SpectralArray out;
  fft_for(g).forward(data, out);
  return out;
}

RealArray transform_inverse(const SpectralArray& coeffs, const TorusGrid& g) {
  RealArray out;
  fft_for(g).inverse(coeffs, out);
  return out;
}

PhysicalVelocity to_physical(const SpectralVelocity& v) {
  require_sizes(v);
  PhysicalVelocity u{v.grid, {}};
  auto& fft = fft_for(v.grid);
  for (int i = 0; i < 3; ++i) fft.inverse(v.c[i], u.u[i]);
  return u;
}

SpectralVelocity from_physical(const PhysicalVelocity& u, double t) {
  SpectralVelocity v(u.grid, t);
  auto& fft = fft_for(u.grid);
  for (int i = 0; i < 3; ++i) fft.forward(u.u[i], v.c[i]);
  return v;
}

void leray_project_inplace(SpectralVelocity& v) {
  require_sizes(v);
  auto& c = v.c;
  for_each_mode(v.grid, [&](std::size_t i, int kx, int ky, int kz) {
    const Eigen::Index j = Eigen::Index(i);
    const double k2 = double(kx) * kx + double(ky) * ky + double(kz) * kz;
    if (k2 == 0) return;
    const Complex d = (double(kx) * c[0][j] + double(ky) * c[1][j] + double(kz) * c[2][j]) / k2;
    c[0][j] -= double(kx) * d;
    c[1][j] -= double(ky) * d;
    c[2][j] -= double(kz) * d;
  });
}

SpectralVelocity leray_project(const SpectralVelocity& v) {
  SpectralVelocity out = v;
  leray_project_inplace(out);
  return out;
}

void dealias_inplace(SpectralArray& a, const TorusGrid& g) {
  for_each_mode(g, [&](std::size_t i, int kx, int ky, int kz) {
    if (!g.keep(kx, ky, kz)) a[Eigen::Index(i)] = 0;
  });
}

void dealias_inplace(SpectralVelocity& v) {
  for (auto& a : v.c) dealias_inplace(a, v.grid);
}

double coefficient_norm(const SpectralArray& a, const TorusGrid& g) {
  double s = 0;
  for_each_mode(g, [&](std::size_t i, int, int, int kz) { s += g.weight(kz) * std::norm(a[Eigen::Index(i)]); });
  return std::sqrt(s);
}

double coefficient_norm(const SpectralVelocity& v) {
  double s = 0;
  for (const auto& a : v.c) s += std::pow(coefficient_norm(a, v.grid), 2);
  return std::sqrt(s);
}

double max_abs_coefficient(const SpectralVelocity& v) {
  double m = 0;
  for (const auto& a : v.c) m = std::max(m, a.abs().maxCoeff());
  return m;
}

double divergence_residual(const SpectralVelocity& v) {
  require_sizes(v);
  const double norm = coefficient_norm(v);
  if (norm == 0) return 0;
  double worst = 0;
  for_each_mode(v.grid, [&](std::size_t i, int kx, int ky, int kz) {
    const Eigen::Index j = Eigen::Index(i);
    const double k2 = double(kx) * kx + double(ky) * ky + double(kz) * kz;
    if (k2 == 0) return;
    const Complex d = double(kx) * v.c[0][j] + double(ky) * v.c[1][j] + double(kz) * v.c[2][j];
    worst = std::max(worst, std::abs(d) / std::sqrt(k2));
  });
  return worst / norm;
}

double kinetic_energy(const SpectralVelocity& v) {
  const double n = coefficient_norm(v);
  return 0.5 * v.grid.volume() * n * n;
}

double gradient_energy(const SpectralVelocity& v) {
  require_sizes(v);
  const double kap2 = v.grid.kappa() * v.grid.kappa();
  double s = 0;
  for_each_mode(v.grid, [&](std::size_t i, int kx, int ky, int kz) {
    const Eigen::Index j = Eigen::Index(i);
    const double k2 = double(kx) * kx + double(ky) * ky + double(kz) * kz;
    if (k2 == 0) return;
    const double a = std::norm(v.c[0][j]) + std::norm(v.c[1][j]) + std::norm(v.c[2][j]);
    s += v.grid.weight(kz) * k2 * a;
  });
  return v.grid.volume() * kap2 * s;
}

namespace {

ScalarField pressure_from_grid(const PhysicalVelocity& u, double M_sigma) {
  const TorusGrid& g = u.grid;
  auto& fft = fft_for(g);
  SpectralArray p = SpectralArray::Zero(Eigen::Index(g.spec_size()));
  SpectralArray prod;
  for (int a = 0; a < 3; ++a) {
    for (int b = a; b < 3; ++b) {
      RealArray uu = u.u[a] * u.u[b];
      fft.forward(uu, prod);
      const double sym = (a == b) ? 1.0 : 2.0;
      for_each_mode(g, [&](std::size_t i, int kx, int ky, int kz) {
        const Eigen::Index j = Eigen::Index(i);
        if (!g.keep(kx, ky, kz)) return;
        const int k[3] = {kx, ky, kz};
        const double k2 = double(kx) * kx + double(ky) * ky + double(kz) * kz;
        if (k2 == 0) return;
        p[j] -= sym * double(k[a]) * double(k[b]) / k2 * prod[j];
      });
    }
  }
  p *= M_sigma * M_sigma;
  RealArray out;
  fft.inverse(p, out);
  return ScalarField(g, std::move(out));
}

}  // namespace

ScalarField cz_pressure(const SpectralVelocity& v, double M_sigma, double tolerance) {
  const double div = divergence_residual(v);
  if (div > tolerance) throw NotDivergenceFree("divergence residual " + std::to_string(div) + " exceeds tolerance");
  return pressure_from_grid(to_physical(v), M_sigma);
}

ScalarField cz_pressure(const PhysicalVelocity& u, double M_sigma) { return pressure_from_grid(u, M_sigma); }

ScalarField speed(const SpectralVelocity& v) {
  PhysicalVelocity u = to_physical(v);
  return ScalarField(v.grid, u.magnitude_squared().sqrt());
}

double hermitian_defect(const SpectralArray& a, const TorusGrid& g) {
  const int n = g.n, nh = g.nh();
  double worst = 0;
  for (int kz : {0, n / 2}) {
    for (int ix = 0; ix < n; ++ix) {
      for (int iy = 0; iy < n; ++iy) {
        const int jx = (n - ix) % n, jy = (n - iy) % n;
        const Complex c1 = a[Eigen::Index((std::size_t(ix) * n + iy) * nh + kz)];
        const Complex c2 = a[Eigen::Index((std::size_t(jx) * n + jy) * nh + kz)];
        worst = std::max(worst, std::abs(c1 - std::conj(c2)));
      }
    }
  }
  return worst;
}

}  // namespace nsbl
