#include "theta_lab/theta.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <boost/math/special_functions/binomial.hpp>
#include <boost/math/special_functions/gamma.hpp>

#include "compensated.hpp"
#include "theta_lab/errors.hpp"

namespace theta_lab {

namespace {

constexpr double kSymmetryTolerance = 1e-12;

using detail::CompensatedSum;

struct PeakData {
  RealVector m_peak;   // continuous maximiser in m = l + a
  RealVector center;   // same point in l-coordinates
  double log_scale;
};

PeakData peak_of(const PeriodMatrix& P, const Characteristic& ch, const ComplexVector& z) {
  const RealVector im_z = z.imag();
  PeakData p;
  p.m_peak = -P.imag_inverse() * im_z;
  p.center = p.m_peak - ch.a;
  p.log_scale = kPi * im_z.dot(P.imag_inverse() * im_z);
  return p;
}

double tail_for_radius(const PeriodMatrix& P, const PeakData& peak, int R, ToleranceMode mode,
                       bool for_gradient) {
  const int n = P.dim();
  const double sqrt_lmin = std::sqrt(P.imag_min_eigenvalue());
  const double rho = std::sqrt(kPi) * sqrt_lmin;
  const double T = rho * R;
  double tail = gaussian_tail_bound(n, T, rho, 1.0, 0.0);
  if (for_gradient) {
    const double A = 2.0 * kPi * peak.m_peak.norm();
    const double B = 2.0 * std::sqrt(kPi) / sqrt_lmin;
    tail = std::max(tail, gaussian_tail_bound(n, T, rho, A, B));
  }
  if (mode == ToleranceMode::absolute) tail *= std::exp(peak.log_scale);
  return tail;
}

int radius_for(const PeriodMatrix& P, const PeakData& peak, double eps, int max_radius,
               ToleranceMode mode, bool for_gradient) {
  for (int R = 1; R <= max_radius; ++R) {
    if (tail_for_radius(P, peak, R, mode, for_gradient) <= eps) return R;
  }
  throw RadiusOverflow("theta truncation radius exceeds cap " + std::to_string(max_radius));
}

LatticeShell enumerate_shell(const PeriodMatrix& P, const Characteristic& ch,
                             const ComplexVector& z, const PeakData& peak, int R) {
  const int n = P.dim();
  const RealMatrix& Y = P.imag();
  const double r2 = static_cast<double>(R) * R * P.imag_min_eigenvalue();

  IntVector lo(n), hi(n);
  for (int i = 0; i < n; ++i) {
    const double half = std::sqrt(r2 * P.imag_inverse()(i, i));
    lo(i) = static_cast<int>(std::ceil(peak.center(i) - half));
    hi(i) = static_cast<int>(std::floor(peak.center(i) + half));
    if (lo(i) > hi(i)) {
      lo(i) = hi(i) = static_cast<int>(std::lround(peak.center(i)));
    }
  }

  LatticeShell shell;
  shell.center = peak.center;
  shell.log_scale = peak.log_scale;
  shell.radius = R;

  const ComplexVector zb = z + ch.b.cast<Complex>();
  IntVector l = lo;
  RealVector d(n);
  for (;;) {
    d = l.cast<double>() - peak.center;
    const double dist2 = d.dot(Y * d);
    if (dist2 <= r2 * (1.0 + 1e-14)) {
      const RealVector m = l.cast<double>() + ch.a;
      const ComplexVector mc = m.cast<Complex>();
      const Complex quad = 0.5 * mc.dot(P.omega() * mc) + mc.dot(zb);
      const Complex exponent = 2.0 * kPi * kI * quad - peak.log_scale;
      shell.terms.push_back({l, std::exp(exponent), dist2});
    }
    int i = n - 1;
    while (i >= 0 && l(i) == hi(i)) {
      l(i) = lo(i);
      --i;
    }
    if (i < 0) break;
    ++l(i);
  }

  std::sort(shell.terms.begin(), shell.terms.end(), [](const LatticeTerm& p, const LatticeTerm& q) {
    if (p.distance2 != q.distance2) return p.distance2 < q.distance2;
    return std::lexicographical_compare(p.l.data(), p.l.data() + p.l.size(), q.l.data(),
                                        q.l.data() + q.l.size());
  });
  return shell;
}

ComplexVector sum_gradient(const LatticeShell& shell, const Characteristic& ch) {
  const int n = static_cast<int>(ch.a.size());
  std::vector<CompensatedSum> acc(n);
  for (const auto& t : shell.terms) {
    for (int i = 0; i < n; ++i) {
      acc[i].add(2.0 * kPi * kI * (t.l(i) + ch.a(i)) * t.value);
    }
  }
  ComplexVector g(n);
  for (int i = 0; i < n; ++i) g(i) = acc[i].value();
  return g;
}

}  // namespace

PeriodMatrix validate_period_matrix(const ComplexMatrix& raw) {
  if (raw.rows() != raw.cols() || raw.rows() == 0) {
    throw NotSymmetric("period matrix must be square and non-empty");
  }
  if (!raw.allFinite()) throw NotSymmetric("period matrix has non-finite entries");
  const double asym = (raw - raw.transpose()).cwiseAbs().maxCoeff();
  if (asym > kSymmetryTolerance) {
    throw NotSymmetric("period matrix is not symmetric (max asymmetry " + std::to_string(asym) + ")");
  }
  PeriodMatrix P;
  P.omega_ = 0.5 * (raw + raw.transpose());
  P.imag_ = P.omega_.imag();
  Eigen::LLT<RealMatrix> llt(P.imag_);
  if (llt.info() != Eigen::Success) {
    throw NotPositiveDefinite("imaginary part of the period matrix is not positive definite");
  }
  P.imag_cholesky_ = llt.matrixL();
  P.imag_inverse_ = llt.solve(RealMatrix::Identity(P.dim(), P.dim()));
  P.imag_min_eigenvalue_ = Eigen::SelfAdjointEigenSolver<RealMatrix>(P.imag_).eigenvalues()(0);
  if (!(P.imag_min_eigenvalue_ > 0.0)) {
    throw NotPositiveDefinite("imaginary part of the period matrix is not positive definite");
  }
  return P;
}

PeriodMatrix PeriodMatrix::scaled(double factor) const {
  return validate_period_matrix(omega_ * factor);
}

double gaussian_tail_bound(int n, double T, double rho, double A, double B) {
  // Each lattice point v owns the ball B(v, rho/2); on it exp(-|v|^2) is
  // dominated by exp(-(|w| - rho/2)^2) and |v| <= |w| + rho/2. Integrating
  // over |w| > T - rho/2 in polar form with t = |w| - rho/2 gives
  //   n / (rho/2)^n * int_{T-rho}^inf (t + rho/2)^{n-1} (A + B (t + rho)) e^{-t^2} dt.
  if (T < rho) return std::numeric_limits<double>::infinity();
  const double h = 0.5 * rho;
  const double t0 = T - rho;
  // Coefficients of (t + h)^{n-1} (A + B rho + B t) in powers of t.
  std::vector<double> coef(n + 1, 0.0);
  for (int j = 0; j <= n - 1; ++j) {
    const double c = boost::math::binomial_coefficient<double>(n - 1, j) * std::pow(h, n - 1 - j);
    coef[j] += c * (A + B * rho);
    coef[j + 1] += c * B;
  }
  double integral = 0.0;
  for (int j = 0; j <= n; ++j) {
    if (coef[j] == 0.0) continue;
    integral += coef[j] * 0.5 * boost::math::tgamma(0.5 * (j + 1), t0 * t0);
  }
  return n / std::pow(h, n) * integral;
}

int truncation_radius(const PeriodMatrix& P, const Characteristic& ch, const ComplexVector& z,
                      double eps, int max_radius, ToleranceMode mode, bool for_gradient) {
  if (!(eps > 0.0)) throw std::invalid_argument("truncation eps must be positive");
  if (max_radius < 1) throw std::invalid_argument("max_radius must be >= 1");
  return radius_for(P, peak_of(P, ch, z), eps, max_radius, mode, for_gradient);
}

LatticeShell lattice_shell(const PeriodMatrix& P, const Characteristic& ch, const ComplexVector& z,
                           const TruncationPolicy& pol, ToleranceMode mode, bool for_gradient) {
  const PeakData peak = peak_of(P, ch, z);
  const int R = radius_for(P, peak, pol.eps, pol.max_radius, mode, for_gradient);
  return enumerate_shell(P, ch, z, peak, R);
}

LatticeShell lattice_shell_at_radius(const PeriodMatrix& P, const Characteristic& ch,
                                     const ComplexVector& z, int radius) {
  return enumerate_shell(P, ch, z, peak_of(P, ch, z), radius);
}

Complex sum_shell(const LatticeShell& shell) {
  CompensatedSum acc;
  for (const auto& t : shell.terms) acc.add(t.value);
  return acc.value();
}

Complex theta(const Characteristic& ch, const PeriodMatrix& P, const ComplexVector& z,
              const TruncationPolicy& pol) {
  const LatticeShell shell = lattice_shell(P, ch, z, pol, ToleranceMode::absolute, false);
  return std::exp(shell.log_scale) * sum_shell(shell);
}

ComplexVector theta_grad(const Characteristic& ch, const PeriodMatrix& P, const ComplexVector& z,
                         const TruncationPolicy& pol) {
  const LatticeShell shell = lattice_shell(P, ch, z, pol, ToleranceMode::absolute, true);
  return std::exp(shell.log_scale) * sum_gradient(shell, ch);
}

ScaledTheta theta_scaled(const Characteristic& ch, const PeriodMatrix& P, const ComplexVector& z,
                         const TruncationPolicy& pol, bool with_gradient) {
  const LatticeShell shell = lattice_shell(P, ch, z, pol, ToleranceMode::scaled, with_gradient);
  ScaledTheta out;
  out.value = sum_shell(shell);
  out.log_scale = shell.log_scale;
  if (with_gradient) out.gradient = sum_gradient(shell, ch);
  return out;
}

}  // namespace theta_lab
