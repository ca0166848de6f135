#pragma once

// Riemann theta functions with characteristics
//
//   theta[a;b](Omega, z) = sum_{l in Z^n} e( 1/2 (l+a)^t Omega (l+a) + (l+a)^t (z+b) )
//
// evaluated on a truncated lattice shell whose radius comes from a rigorous
// Gaussian tail bound.

#include <vector>

#include "theta_lab/types.hpp"

namespace theta_lab {

/// Validated period matrix: symmetric, Im(Omega) positive definite.
class PeriodMatrix {
 public:
  int dim() const { return static_cast<int>(omega_.rows()); }
  const ComplexMatrix& omega() const { return omega_; }
  const RealMatrix& imag() const { return imag_; }
  const RealMatrix& imag_inverse() const { return imag_inverse_; }
  /// Lower-triangular L with Im(Omega) = L L^t.
  const RealMatrix& imag_cholesky() const { return imag_cholesky_; }
  double imag_min_eigenvalue() const { return imag_min_eigenvalue_; }

  /// factor * Omega, factor > 0.
  PeriodMatrix scaled(double factor) const;

 private:
  friend PeriodMatrix validate_period_matrix(const ComplexMatrix& raw);
  PeriodMatrix() = default;

  ComplexMatrix omega_;
  RealMatrix imag_;
  RealMatrix imag_inverse_;
  RealMatrix imag_cholesky_;
  double imag_min_eigenvalue_ = 0.0;
};

/// Throws NotSymmetric (max asymmetry > 1e-12) or NotPositiveDefinite.
PeriodMatrix validate_period_matrix(const ComplexMatrix& raw);

struct Characteristic {
  RealVector a;
  RealVector b;

  static Characteristic zero(int n) { return {RealVector::Zero(n), RealVector::Zero(n)}; }
};

struct TruncationPolicy {
  double eps = 1e-12;
  int max_radius = 64;
};

/// How `eps` is interpreted: against the true sum, or against the sum divided
/// by its Gaussian peak factor exp(log_scale).
enum class ToleranceMode { absolute, scaled };

/// One summand of the lattice sum, divided by exp(log_scale).
struct LatticeTerm {
  IntVector l;
  Complex value;
  double distance2;  // (l - c)^t Im(Omega) (l - c)
};

/// The terms of a truncated theta sum, ordered by increasing distance from
/// the Gaussian peak (ties broken lexicographically on l).
struct LatticeShell {
  std::vector<LatticeTerm> terms;
  RealVector center;  // peak in l-coordinates: -(Im Omega)^{-1} Im z - a
  double log_scale = 0.0;
  int radius = 0;
};

/// Smallest integer R >= 1 such that the summand mass outside the ellipsoid
/// (l-c)^t Im(Omega) (l-c) <= R^2 lambda_min(Im Omega) is at most eps.
/// R is therefore the shell half-width in lattice units along the widest
/// Gaussian direction. Throws RadiusOverflow when R would exceed max_radius.
int truncation_radius(const PeriodMatrix& P, const Characteristic& ch, const ComplexVector& z,
                      double eps, int max_radius = 64,
                      ToleranceMode mode = ToleranceMode::absolute, bool for_gradient = false);

/// Enumerates the truncated shell. With `for_gradient` the radius also bounds
/// the tail of the derivative sums.
LatticeShell lattice_shell(const PeriodMatrix& P, const Characteristic& ch, const ComplexVector& z,
                           const TruncationPolicy& pol, ToleranceMode mode, bool for_gradient);

/// Shell enumeration at an explicit radius (no tail bound); used by tests
/// and by the radius-doubling checks.
LatticeShell lattice_shell_at_radius(const PeriodMatrix& P, const Characteristic& ch,
                                     const ComplexVector& z, int radius);

Complex theta(const Characteristic& ch, const PeriodMatrix& P, const ComplexVector& z,
              const TruncationPolicy& pol = {});

/// d theta / d z_alpha.
ComplexVector theta_grad(const Characteristic& ch, const PeriodMatrix& P, const ComplexVector& z,
                         const TruncationPolicy& pol = {});

/// theta = exp(log_scale) * value, gradient likewise; eps is relative to exp(log_scale).
struct ScaledTheta {
  Complex value;
  ComplexVector gradient;
  double log_scale = 0.0;
};

ScaledTheta theta_scaled(const Characteristic& ch, const PeriodMatrix& P, const ComplexVector& z,
                         const TruncationPolicy& pol = {}, bool with_gradient = false);

/// Sum of the shell terms (value) with Neumaier compensation.
Complex sum_shell(const LatticeShell& shell);

/// Upper bound on sum_{|v| > T} (A + B|v|) exp(-|v|^2) over a shifted lattice
/// in R^n whose points are at least rho apart. Requires T >= rho.
double gaussian_tail_bound(int n, double T, double rho, double A, double B);

}  // namespace theta_lab
