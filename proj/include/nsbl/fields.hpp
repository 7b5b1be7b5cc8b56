#pragma once

#include <Eigen/Core>
#include <array>
#include <complex>

#include "nsbl/torus_grid.hpp"

namespace nsbl {

using Complex = std::complex<double>;
using SpectralArray = Eigen::ArrayXcd;
using RealArray = Eigen::ArrayXd;

/// Velocity as half-spectrum Fourier-series coefficients, one array per
/// component. Coefficients follow the Fourier-series convention: a constant
/// field c has zero mode c.
struct SpectralVelocity {
  TorusGrid grid;
  std::array<SpectralArray, 3> c;
  double t = 0.0;

  SpectralVelocity() = default;
  explicit SpectralVelocity(const TorusGrid& g, double time = 0.0) : grid(g), t(time) {
    for (auto& a : c) a = SpectralArray::Zero(Eigen::Index(g.spec_size()));
  }

  SpectralVelocity& operator*=(double s) {
    for (auto& a : c) a *= s;
    return *this;
  }
};

struct ScalarField {
  TorusGrid grid;
  RealArray values;

  ScalarField() = default;
  explicit ScalarField(const TorusGrid& g) : grid(g), values(RealArray::Zero(Eigen::Index(g.real_size()))) {}
  ScalarField(const TorusGrid& g, RealArray v) : grid(g), values(std::move(v)) {}
};

/// Velocity sampled on the grid.
struct PhysicalVelocity {
  TorusGrid grid;
  std::array<RealArray, 3> u;

  RealArray magnitude_squared() const { return u[0].square() + u[1].square() + u[2].square(); }
};

}  // namespace nsbl
