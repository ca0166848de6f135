#pragma once

// Projective embeddings by an abelian or Kummer section basis, the moment map
// onto the simplex, and sampled amoebas.

#include <iosfwd>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "theta_lab/kummer.hpp"

namespace theta_lab {

enum class Family { abelian, kummer };

std::string to_string(Family f);
Family parse_family(const std::string& s);

/// One of the two section bases, seen as a map into CP^N. For the abelian
/// family omega_k = (1/k) iota^* omega_FS tends to omega_0; for the Kummer
/// family (sections of L^{2k} on A) it tends to omega = 2 omega_0.
class Embedding {
 public:
  explicit Embedding(SectionBasis basis);
  explicit Embedding(InvariantBasis basis);
  /// Builds the basis of the given family at level k.
  static Embedding make(const AbelianVariety& A, Family family, int k, TruncationPolicy pol = {});

  Family family() const { return std::holds_alternative<SectionBasis>(basis_) ? Family::abelian : Family::kummer; }
  const AbelianVariety& variety() const;
  int level() const;
  /// Level of the line bundle on A carrying the sections (k or 2k).
  int bundle_level() const;
  int size() const;
  /// omega_k tends to metric_factor() * omega_0.
  double metric_factor() const { return family() == Family::abelian ? 1.0 : 2.0; }
  /// Scale of |values|^2 in h-norm units.
  double norm_factor() const;

  SectionValues evaluate(const ComplexVector& z, bool with_gradient = false) const;
  SectionValues evaluate(const AbelianPoint& p, bool with_gradient = false) const;
  SectionValues evaluate(const ComplexVector& z, bool with_gradient, const TruncationPolicy& pol) const;
  const TruncationPolicy& policy() const;

  const SectionBasis* section_basis() const { return std::get_if<SectionBasis>(&basis_); }
  const InvariantBasis* invariant_basis() const { return std::get_if<InvariantBasis>(&basis_); }

 private:
  std::variant<SectionBasis, InvariantBasis> basis_;
};

/// Unit vector with the first coordinate of modulus above 1e-12 real positive.
struct ProjectivePoint {
  ComplexVector coords;
};

struct SimplexPoint {
  RealVector xi;
};

/// Normalises scaled section values; BasePointError if every |value| < 1e-200.
ProjectivePoint projective_from_values(const ComplexVector& values);
ProjectivePoint embed(const Embedding& e, const ComplexVector& z);
/// Fubini-Study angle arccos |<P, Q>|, computed from the phase-aligned chord.
double projective_angle(const ProjectivePoint& P, const ProjectivePoint& Q);

SimplexPoint moment_map(const ProjectivePoint& P);
SimplexPoint moment_map_of(const ComplexVector& coords);

/// Great-circle distance between the lifts sqrt(xi), sqrt(xi') on the real
/// sheet, scaled to the metric (1/k) omega_FS.
double simplex_distance(int k, const RealVector& xi, const RealVector& xi2);

struct AmoebaCloud {
  int k = 0;
  int n = 0;
  std::vector<AbelianPoint> sources;
  std::vector<SimplexPoint> images;
};

/// pi_k = mu_k o iota_k on the uniform (x, y) grid. For the Kummer family the
/// grid points are canonicalised and duplicates dropped.
AmoebaCloud amoeba_sample(const Embedding& e, int per_dim);

/// Symmetric Hausdorff distance under simplex_distance at level k.
double hausdorff_distance(int k, const std::vector<SimplexPoint>& a, const std::vector<SimplexPoint>& b);
double hausdorff_distance(const AmoebaCloud& a, const AmoebaCloud& b);

/// max over a of min over b.
double directed_hausdorff(int k, const std::vector<SimplexPoint>& a, const std::vector<SimplexPoint>& b);

/// CSV `k,n,src_x1..,src_y1..,xi_0..xi_N` with 17 significant digits.
void write_amoeba_csv(std::ostream& os, const AmoebaCloud& cloud);
AmoebaCloud read_amoeba_csv(std::istream& is);

}  // namespace theta_lab
