#pragma once

// The principally polarized abelian variety A = C^n / (Omega Z^n + Z^n), its
// flat metric, and the level-k theta basis
//
//   s_b(z) = C_Omega k^{-n/4} exp((pi k / 2) z^t H z) S_b(z),
//   S_b(z) = sum_l e( (1/2k) l^t Omega l + l^t (z - b) ) = theta[0; -b](Omega / k, z),
//
// with H = (Im Omega)^{-1}, C_Omega = 2^{n/4} det(Im Omega)^{1/4} and
// b running over (1/k) Z^n / Z^n.

#include <span>
#include <vector>

#include "theta_lab/grid.hpp"
#include "theta_lab/theta.hpp"

namespace theta_lab {

class AbelianVariety {
 public:
  explicit AbelianVariety(PeriodMatrix P);

  int dim() const { return period_.dim(); }
  const PeriodMatrix& period() const { return period_; }
  /// H = (Im Omega)^{-1}.
  const RealMatrix& h() const { return period_.imag_inverse(); }

  /// Gram matrix (2n x 2n, in (dx, dy)) of factor * Re sum h dz dz-bar,
  /// i.e. the Riemannian metric of factor * omega_0.
  RealMatrix flat_metric(double factor = 1.0) const;
  /// Riemannian-submersion metric on the base T^b: Schur complement of the
  /// x-block of flat_metric(factor).
  RealMatrix base_metric(double factor = 1.0) const;

 private:
  PeriodMatrix period_;
};

/// z = Omega x + y; x is the fibre (T^f) coordinate, y the base (T^b) one.
struct AbelianPoint {
  RealVector x;
  RealVector y;
};

ComplexVector to_complex(const AbelianVariety& A, const AbelianPoint& p);
/// Inverse of to_complex, reduced to the fundamental domain [0,1)^{2n}.
AbelianPoint from_complex(const AbelianVariety& A, const ComplexVector& z);

/// min over m in [-window, window]^d of sqrt((delta + m)^t G (delta + m)),
/// with delta first reduced to [-1/2, 1/2)^d.
double torus_distance(const RealMatrix& G, const RealVector& delta, int window = 2);

/// Geodesic distance of the flat metric g_0 = Re sum h dz dz-bar.
double flat_distance(const AbelianVariety& A, const AbelianPoint& p, const AbelianPoint& q);

class SectionBasis {
 public:
  SectionBasis(const AbelianVariety& A, int k, TruncationPolicy pol = {});

  const AbelianVariety& variety() const { return variety_; }
  int level() const { return k_; }
  int size() const { return static_cast<int>(characteristics_.size()); }
  /// b_i in [0,1)^n, row-major over (1/k) Z^n / Z^n.
  const std::vector<RealVector>& characteristics() const { return characteristics_; }
  const std::vector<IntVector>& torsion_index() const { return index_; }
  /// C_Omega = 2^{n/4} det(Im Omega)^{1/4}.
  double c_omega() const { return c_omega_; }
  /// C_Omega^2 k^{-n/2}: converts |S_b|^2 (scaled) into |s_b|^2_h.
  double norm_factor() const { return norm_factor_; }
  const TruncationPolicy& policy() const { return pol_; }
  /// Omega / k, the period matrix of the S_b sums.
  const PeriodMatrix& level_period() const { return level_period_; }

 private:
  AbelianVariety variety_;
  int k_;
  TruncationPolicy pol_;
  std::vector<RealVector> characteristics_;
  std::vector<IntVector> index_;
  double c_omega_;
  double norm_factor_;
  PeriodMatrix level_period_;
};

/// All S_b at one point: S_b(z) = exp(log_scale) * values(i), and the
/// z-gradient likewise (row i of gradients). Since
/// |s_b|^2_h = norm_factor * |values(i)|^2 exactly, the scale never needs to
/// be materialised for Hermitian quantities.
struct SectionValues {
  ComplexVector values;
  ComplexMatrix gradients;  // size x n, empty unless requested
  double log_scale = 0.0;
};

SectionValues evaluate_sections(const SectionBasis& basis, const ComplexVector& z,
                                bool with_gradient = false);
/// Same, with a truncation policy other than the basis default.
SectionValues evaluate_sections(const SectionBasis& basis, const ComplexVector& z,
                                bool with_gradient, const TruncationPolicy& pol);

struct HermitianSectionValue {
  Complex raw;    // s_b(z) including the prefactor (may overflow for extreme z)
  double h_norm;  // |s_b(z)|_{h_0^k}
};

HermitianSectionValue section_value(const SectionBasis& basis, int index, const ComplexVector& z);

enum class GridCheck { raise, ignore };

/// L^2 Gram matrix of the basis by the equal-weight rule on a per_dim^{2n}
/// grid of the (x, y) torus (omega_0^n / n! = dx dy, total volume 1).
/// Throws GridTooCoarse if some off-diagonal |G_ij| exceeds 0.1 and
/// check == raise.
ComplexMatrix gram_matrix(const SectionBasis& basis, int per_dim, GridCheck check = GridCheck::raise);

/// rho_k(z) = sum_i |s_i(z)|^2_h.
double bergman_density(const SectionBasis& basis, const ComplexVector& z);

/// phi with S_b(z) = k^{n/2} det(-i Omega)^{-1/2} e(-(k/2) w^t Omega^{-1} w) (1 + phi),
/// w = z - b - u where the integer shift u selects the dominant Gaussian
/// image (so phi depends on b only mod 1). The square root is the branch
/// continuous from real Im Omega (product of principal roots of the
/// eigenvalues of -i Omega). Throws DivisionUnderflow if the leading term is
/// below 1e-300.
Complex asymptotic_residual(const SectionBasis& basis, int index, const ComplexVector& z);

struct DecayFit {
  double C = 0.0;
  double c = 0.0;
  std::vector<int> levels;
  std::vector<int> violations;  // per level
  std::vector<double> worst_ratio;  // max of |s|^2 / bound per level
};

/// Fits |s_i(z)|^2_h <= C k^{n/2} exp(-c k d(y, b_i)^2) on the first basis
/// (c by least squares over pairs with d <= 1/4, then the smallest C), and
/// counts violations on every basis. d is the torus distance of the base
/// metric of omega_0.
DecayFit gaussian_decay_check(std::span<const SectionBasis> bases,
                              std::span<const AbelianPoint> samples);

}  // namespace theta_lab
