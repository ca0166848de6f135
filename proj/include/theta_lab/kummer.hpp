#pragma once

// The Kummer variety X = A / (-1), its fibration onto B = T^b / (-1) and the
// invariant section basis t_i built from the level-2k basis on A.

#include <vector>

#include "theta_lab/abelian.hpp"

namespace theta_lab {

/// X-side metric data. Distances on X and B use omega = 2 omega_0.
class KummerVariety {
 public:
  explicit KummerVariety(AbelianVariety A);

  int dim() const { return abelian_.dim(); }
  const AbelianVariety& abelian() const { return abelian_; }
  /// The 2^{2n} two-torsion points, row-major over (x, y) in {0, 1/2}^{2n}.
  const std::vector<AbelianPoint>& singular_points() const { return singular_; }
  /// G_B, the submersion metric of omega on B.
  const RealMatrix& base_metric() const { return base_metric_; }
  /// 2n x 2n (dx, dy) Gram matrix of omega.
  const RealMatrix& flat_metric() const { return flat_metric_; }

 private:
  AbelianVariety abelian_;
  std::vector<AbelianPoint> singular_;
  RealMatrix base_metric_;
  RealMatrix flat_metric_;
};

struct KummerPoint {
  AbelianPoint rep;
};

struct BasePoint {
  RealVector y_rep;
};

/// Lexicographically smaller of (x, y) and (-x, -y), both reduced mod 1.
KummerPoint canonical_rep(const AbelianPoint& p);
/// Smaller of y and -y mod 1.
BasePoint base_rep(const RealVector& y);
BasePoint fibration(const KummerPoint& p);

double base_distance(const KummerVariety& K, const BasePoint& u, const BasePoint& v);
/// min(d(p, q), d(p, -q)) in the flat metric of omega.
double quotient_distance(const KummerVariety& K, const KummerPoint& p, const KummerPoint& q);
/// Distance to the nearest singular point.
double singular_distance(const KummerVariety& K, const KummerPoint& p);

struct InvariantEntry {
  enum class Kind { paired, fixed };
  Kind kind;
  int first;   // index into the level-2k basis
  int second;  // partner index (-b); equals first for fixed entries
  double weight;
};

class InvariantBasis {
 public:
  InvariantBasis(const AbelianVariety& A, int k, TruncationPolicy pol = {});

  int level() const { return k_; }
  int size() const { return static_cast<int>(entries_.size()); }
  const std::vector<InvariantEntry>& entries() const { return entries_; }
  /// Level-2k basis on A.
  const SectionBasis& inner() const { return inner_; }

 private:
  int k_;
  SectionBasis inner_;
  std::vector<InvariantEntry> entries_;
};

/// 2^{n-1}(k^n + 1).
long long invariant_count(int n, int k);

/// t_i (and gradients) at z on the scale of the inner basis: |t_i|_h^2 =
/// inner().norm_factor() * |values(i)|^2.
SectionValues evaluate_invariant(const InvariantBasis& basis, const ComplexVector& z,
                                 bool with_gradient = false);
SectionValues evaluate_invariant(const InvariantBasis& basis, const ComplexVector& z,
                                 bool with_gradient, const TruncationPolicy& pol);

/// Pointwise |t_i(z)|_h.
double invariant_h_norm(const InvariantBasis& basis, int index, const ComplexVector& z);

/// L^2(X, omega) Gram matrix. The integrand is (-1)-invariant, so the
/// full-torus rule is used and halved; omega^n/n! = 2^n dx dy gives the
/// overall factor 2^{n-1}.
ComplexMatrix kummer_gram_matrix(const InvariantBasis& basis, int per_dim,
                                 GridCheck check = GridCheck::raise);

double kummer_bergman_density(const InvariantBasis& basis, const ComplexVector& z);

}  // namespace theta_lab
