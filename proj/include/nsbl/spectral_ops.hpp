#pragma once

#include "nsbl/fields.hpp"

namespace nsbl {

// Transforms (Fourier-series normalization: forward carries 1/n^3).
SpectralArray transform_forward(const RealArray& data, const TorusGrid& g);
RealArray transform_inverse(const SpectralArray& coeffs, const TorusGrid& g);

PhysicalVelocity to_physical(const SpectralVelocity& v);
SpectralVelocity from_physical(const PhysicalVelocity& u, double t = 0.0);

/// (I - k k^T/|k|^2) applied mode by mode; the zero mode passes through.
SpectralVelocity leray_project(const SpectralVelocity& v);
void leray_project_inplace(SpectralVelocity& v);

/// Zeroes every mode outside the 2/3-rule band.
void dealias_inplace(SpectralArray& a, const TorusGrid& g);
void dealias_inplace(SpectralVelocity& v);

/// max_k |k.v(k)|/|k| relative to the coefficient norm; 0 for a zero field.
double divergence_residual(const SpectralVelocity& v);

/// Euclidean norm of the full (Hermitian-completed) coefficient set.
double coefficient_norm(const SpectralVelocity& v);
double coefficient_norm(const SpectralArray& a, const TorusGrid& g);
double max_abs_coefficient(const SpectralVelocity& v);

/// 1/2 int |u|^2 dx, evaluated spectrally.
double kinetic_energy(const SpectralVelocity& v);
/// int |grad u|^2 dx, evaluated spectrally.
double gradient_energy(const SpectralVelocity& v);

/// Pressure of the scaled system: p_hat = -M^2 (k_i k_j/|k|^2) (u_i u_j)_hat,
/// p_hat(0) = 0. Products are dealiased. Throws NotDivergenceFree when the
/// divergence residual exceeds `tolerance`.
ScalarField cz_pressure(const SpectralVelocity& v, double M_sigma, double tolerance = 1e-10);

/// Same, starting from grid values of an already divergence-free field.
ScalarField cz_pressure(const PhysicalVelocity& u, double M_sigma);

/// Sample-wise |u| on the grid.
ScalarField speed(const SpectralVelocity& v);

/// Hermitian consistency on the self-conjugate planes kz = 0 and kz = n/2;
/// returns the largest mismatch |c(k) - conj(c(-k))|.
double hermitian_defect(const SpectralArray& a, const TorusGrid& g);

}  // namespace nsbl
