#pragma once

// omega_k = (1/k) iota_k^* omega_FS: pointwise coefficients, error fields
// against the flat target, the singular-region split and grid-graph lengths.

#include <iosfwd>
#include <vector>

#include "theta_lab/embedding.hpp"

namespace theta_lab {

enum class Scheme { analytic, finite_difference };

/// Coefficients g_{a b-bar} of omega_k = sqrt(-1) sum g dz_a ^ dz-bar_b.
struct MetricValue {
  ComplexMatrix g;
};

struct FiniteDifferenceOptions {
  double step = 1e-4;
  /// Truncation used for the stencil values; tight so that shell changes
  /// between stencil nodes stay below the differencing noise.
  double eps = 1e-20;
};

MetricValue pullback_metric(const Embedding& e, const ComplexVector& z, Scheme scheme = Scheme::analytic,
                            const FiniteDifferenceOptions& fd = {});

/// Largest entry of |a - b| relative to the largest entry of |b|.
double relative_difference(const ComplexMatrix& a, const ComplexMatrix& b);

/// Analytic value, after checking it against the finite-difference scheme;
/// throws SchemeDisagreement above `tolerance`.
MetricValue pullback_metric_checked(const Embedding& e, const ComplexVector& z, double tolerance = 1e-5);

/// Relative gap between finite-difference results at step and step / 2.
double richardson_gap(const Embedding& e, const ComplexVector& z, const FiniteDifferenceOptions& fd = {});

/// Coefficient matrix of the limit form: metric_factor * H / 2.
ComplexMatrix target_metric(const Embedding& e);

/// || g_t^{-1/2} (g - g_t) g_t^{-1/2} ||_2.
double metric_error(const ComplexMatrix& g, const ComplexMatrix& target);

/// 2n x 2n Riemannian metric in (dx, dy): |v|^2 = 2 Re v^t g conj(v) with
/// v = Omega dx + dy.
RealMatrix riemannian_metric(const AbelianVariety& A, const ComplexMatrix& g);

/// Distance from p to the nearest two-torsion point in the metric of
/// factor * omega_0.
double torsion_distance(const AbelianVariety& A, const AbelianPoint& p, double factor);

struct ErrorSample {
  AbelianPoint p;
  double r = 0.0;
  double err_c0 = 0.0;
  double err_c1 = 0.0;
};

struct ErrorField {
  int k = 0;
  int n = 0;
  int q = 0;
  std::vector<ErrorSample> samples;
};

/// Error of omega_k against its limit on the cell-centred per_dim^{2n} grid.
/// q = 1 adds the largest normalised first derivative of g_k over the real
/// (x, y) directions (central differences of size fd.step).
ErrorField metric_error_field(const Embedding& e, int per_dim, int q,
                              const FiniteDifferenceOptions& fd = {});

/// CSV `x..,y..,r,err_c0[,err_c1]`.
void write_error_field_csv(std::ostream& os, const ErrorField& field);
ErrorField read_error_field_csv(std::istream& is, int n);

double region_radius(int k, double delta);

struct RegionDecomposition {
  int k = 0;
  double delta = 0.0;
  double radius = 0.0;
  std::vector<AbelianPoint> points;
  std::vector<double> r;
  /// Index of the two-torsion point whose ball holds the point, or -1 for U_k.
  std::vector<int> ball;
  std::vector<AbelianPoint> centres;

  bool in_u(std::size_t i) const { return ball[i] < 0; }
};

/// Splits the cell-centred grid into D_k(e) balls of radius
/// sqrt(log k / (delta k)) (distance in factor * omega_0) and the rest U_k.
RegionDecomposition region_decomposition(const AbelianVariety& A, double factor, int k, double delta,
                                         int per_dim);
/// Same split of an arbitrary list of points.
RegionDecomposition region_decomposition(const AbelianVariety& A, double factor, int k, double delta,
                                         std::vector<AbelianPoint> points);

/// CSV `x..,y..,r,in_u,ball`.
void write_regions_csv(std::ostream& os, const RegionDecomposition& regions);

/// Riemannian metrics (2n x 2n, (dx, dy)) on the nodes of a torus grid.
struct MetricField {
  TorusGrid grid;
  std::vector<RealMatrix> metric;
  /// Distances identify p with -p.
  bool quotient = false;
};

MetricField flat_field(const AbelianVariety& A, int per_dim, double factor, bool quotient, double offset = 0.0);
MetricField pullback_field(const Embedding& e, int per_dim, double offset = 0.0);

/// Grid graph: every node is joined to the nodes at primitive offsets with
/// Chebyshev norm <= stencil_radius; an edge weighs the chord length under
/// the mean of its endpoint metrics.
class GridGraph {
 public:
  explicit GridGraph(const MetricField& field, int stencil_radius = 2);

  std::size_t size() const { return field_->grid.size(); }
  std::vector<double> distances_from(std::size_t source) const;
  std::vector<double> distances_from(const std::vector<std::size_t>& sources) const;
  /// Shortest path length; for a quotient field also over the image of -q.
  double distance(std::size_t p, std::size_t q) const;
  std::size_t negate(std::size_t node) const;

 private:
  const MetricField* field_;
  std::vector<IntVector> offsets_;
};

/// graph_distance between two grid nodes.
double graph_distance_dk(const GridGraph& graph, std::size_t p, std::size_t q);

/// Diameter of the set of nodes within `radius` (flat, factor * omega_0) of
/// `centre`, measured in the graph.
double ball_diameter(const GridGraph& graph, const MetricField& field, const AbelianVariety& A, double factor,
                     const AbelianPoint& centre, double radius);

}  // namespace theta_lab
