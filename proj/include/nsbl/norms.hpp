#pragma once

// Discrete Lebesgue norms and super-level-set measures. Spatial integrals are
// cell sums times the cell volume; space-time integrals add trapezoidal
// weights over the snapshot times.

#include <Eigen/Core>
#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "nsbl/errors.hpp"

namespace nsbl {

inline constexpr double kInfinity = std::numeric_limits<double>::infinity();

inline void require_norm_exponent(double ell) {
  if (!(ell >= 1)) throw BadExponent("norm exponent must be >= 1 (or infinity)");
}

/// Trapezoidal weights for the given (nondecreasing) sample times. A single
/// time gets weight zero: the space-time set has zero duration.
inline std::vector<double> trapezoid_weights(const std::vector<double>& times) {
  std::vector<double> w(times.size(), 0.0);
  for (std::size_t i = 1; i < times.size(); ++i) {
    const double h = times[i] - times[i - 1];
    w[i - 1] += 0.5 * h;
    w[i] += 0.5 * h;
  }
  return w;
}

/// (sum |f|^ell * cell_volume)^(1/ell); ell = infinity gives max |f|.
/// Scaled by max |f| first so large exponents do not overflow.
template <class Derived>
double lebesgue_norm(const Eigen::ArrayBase<Derived>& f, double ell, double cell_volume) {
  require_norm_exponent(ell);
  if (f.size() == 0) return 0;
  const double m = f.abs().maxCoeff();
  if (ell == kInfinity || m == 0) return m;
  const double s = (f.abs() / m).pow(ell).sum() * cell_volume;
  return m * std::pow(s, 1.0 / ell);
}

/// Space-time norm over snapshots with trapezoidal time weights.
template <class Array>
double lebesgue_norm(const std::vector<Array>& series, const std::vector<double>& weights, double ell,
                     double cell_volume) {
  require_norm_exponent(ell);
  if (series.size() != weights.size()) throw ShapeMismatch("snapshot count does not match weights");
  double m = 0;
  for (const auto& f : series)
    if (f.size() > 0) m = std::max(m, double(f.abs().maxCoeff()));
  if (ell == kInfinity || m == 0) return m;
  double s = 0;
  for (std::size_t i = 0; i < series.size(); ++i)
    if (weights[i] != 0) s += weights[i] * (series[i].abs() / m).pow(ell).sum();
  return m * std::pow(s * cell_volume, 1.0 / ell);
}

/// Logarithm of the space-time integral sum w |f|^ell dV, computed with a
/// log-sum-exp so it stays finite for any exponent. -infinity for f == 0.
template <class Array>
double log_power_integral(const std::vector<Array>& series, const std::vector<double>& weights, double ell,
                          double cell_volume) {
  double m = 0;
  for (const auto& f : series)
    if (f.size() > 0) m = std::max(m, double(f.abs().maxCoeff()));
  if (m == 0) return -kInfinity;
  double s = 0;
  for (std::size_t i = 0; i < series.size(); ++i)
    if (weights[i] != 0) s += weights[i] * (series[i].abs() / m).pow(ell).sum();
  return ell * std::log(m) + std::log(s * cell_volume);
}

/// Measure of {f >= k}: cell volume times the number of cells at or above k.
template <class Derived>
double level_set_measure(const Eigen::ArrayBase<Derived>& f, double k, double cell_volume) {
  return double((f >= k).count()) * cell_volume;
}

/// Space-time measure of {f >= k} with trapezoidal time weights.
template <class Array>
double level_set_measure(const std::vector<Array>& series, const std::vector<double>& weights, double k,
                         double cell_volume) {
  if (series.size() != weights.size()) throw ShapeMismatch("snapshot count does not match weights");
  double s = 0;
  for (std::size_t i = 0; i < series.size(); ++i)
    if (weights[i] != 0) s += weights[i] * double((series[i] >= k).count());
  return s * cell_volume;
}

}  // namespace nsbl
