#pragma once

#include <random>

#include "theta_lab/theta.hpp"

namespace theta_lab::testing {

inline ComplexMatrix square_lattice(int n, double tau = 1.0) {
  return ComplexMatrix::Identity(n, n) * Complex(0.0, tau);
}

inline PeriodMatrix period_i(int n = 1, double tau = 1.0) { return validate_period_matrix(square_lattice(n, tau)); }

/// Random point of the Siegel upper half space with Im well conditioned.
inline ComplexMatrix random_period(std::mt19937_64& rng, int n) {
  std::uniform_real_distribution<double> u(-0.5, 0.5);
  RealMatrix X(n, n), B(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      X(i, j) = u(rng);
      B(i, j) = 0.4 * u(rng);
    }
  X = 0.5 * (X + X.transpose()).eval();
  RealMatrix Y = B * B.transpose() + (0.8 + 0.4 * (u(rng) + 0.5)) * RealMatrix::Identity(n, n);
  ComplexMatrix O(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) O(i, j) = Complex(X(i, j), Y(i, j));
  return O;
}

inline RealVector random_real(std::mt19937_64& rng, int n, double lo = 0.0, double hi = 1.0) {
  std::uniform_real_distribution<double> u(lo, hi);
  RealVector v(n);
  for (int i = 0; i < n; ++i) v(i) = u(rng);
  return v;
}

}  // namespace theta_lab::testing
