#pragma once

#include <complex>
#include <numbers>

#include <Eigen/Dense>

namespace theta_lab {

using Complex = std::complex<double>;
using RealVector = Eigen::VectorXd;
using RealMatrix = Eigen::MatrixXd;
using ComplexVector = Eigen::VectorXcd;
using ComplexMatrix = Eigen::MatrixXcd;
using IntVector = Eigen::VectorXi;

inline constexpr double kPi = std::numbers::pi;
inline constexpr Complex kI{0.0, 1.0};

// e(t) = exp(2 pi i t)
inline Complex unit_phase(Complex t) { return std::exp(2.0 * kPi * kI * t); }

}  // namespace theta_lab
