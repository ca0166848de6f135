#pragma once

// Diagnostics of pi_k = mu_k o iota_k against the fibration onto B:
// Hausdorff approximations, fibre collapse, map deviation, tangent leaks and
// rate fits.

#include <iosfwd>
#include <string>
#include <vector>

#include "theta_lab/embedding.hpp"

namespace theta_lab {

/// The base of the family: T^b with the submersion metric of omega_0
/// (abelian) or B = T^b / (-1) with that of omega (Kummer).
double family_base_distance(const Embedding& e, const RealVector& y1, const RealVector& y2);

/// pi_k at the zero-section lift (0, y).
SimplexPoint phi_k(const Embedding& e, const RealVector& y);

/// Uniform base grid; Kummer samples are reduced to base_rep and deduplicated.
std::vector<RealVector> base_samples(const Embedding& e, int per_dim);

struct HausdorffApproxReport {
  int k = 0;
  double distortion = 0.0;
  double covering_radius = 0.0;
  double eps = 0.0;
  double gh_upper = 0.0;
  /// Same two quantities with B_k carrying the restricted simplex distance.
  double restriction_distortion = 0.0;
  double restriction_covering = 0.0;
  int knn = 0;
};

struct DistortionOptions {
  /// Starting neighbour count of the B_k graph; doubled until connected.
  int knn = 8;
};

/// B_k is the sampled cloud together with phi_k(base samples); its metric is
/// the shortest-path metric of the symmetric k-nearest-neighbour graph with
/// simplex_distance edge lengths.
HausdorffApproxReport distortion_report(const Embedding& e, const std::vector<RealVector>& base,
                                        const AmoebaCloud& cloud, const DistortionOptions& opts = {});

/// Diameter of pi_k(pi^{-1}(y)) sampled on fibre_per_dim^n fibre points.
double fiber_collapse(const Embedding& e, const RealVector& y, int fiber_per_dim);

/// simplex_distance(phi_k(pi p), pi_k(p)).
double map_deviation(const Embedding& e, const AbelianPoint& p);
/// Largest map_deviation on the uniform per_dim^{2n} grid.
double max_map_deviation(const Embedding& e, int per_dim);

struct TangentLeaks {
  double vertical_leak = 0.0;
  double horizontal_leak = 0.0;
};

/// Z: homogeneous coordinates. Columns of fibre_push / rotated_push are the
/// images of d/dx_a and J d/dx_a. A tangent dZ splits as Z o Re(dZ/Z)
/// (horizontal, d/du) plus Z o i Im(dZ/Z) (vertical, d/dv); lengths are
/// Fubini-Study. vertical_leak is the horizontal share of the fibre images,
/// horizontal_leak the vertical share of the rotated ones.
TangentLeaks tangent_leaks(const ComplexVector& Z, const ComplexMatrix& fibre_push,
                           const ComplexMatrix& rotated_push);

TangentLeaks tangent_distortion(const Embedding& e, const ComplexVector& z);

enum class RateModel { sqrt_logk_over_k, inv_k, inv_sqrt_k };

std::string to_string(RateModel m);
RateModel parse_rate_model(const std::string& s);
double rate_predictor(RateModel m, double k);

struct RateRow {
  double k = 0.0;
  double value = 0.0;
  double predictor = 0.0;
};

struct RateTable {
  RateModel model = RateModel::sqrt_logk_over_k;
  std::vector<RateRow> rows;
  /// log value against log predictor.
  double slope = 0.0;
  double intercept = 0.0;
  std::vector<double> residuals;
  /// log value against log k.
  double slope_log_k = 0.0;
  double intercept_log_k = 0.0;
};

RateTable rate_fit(const std::vector<std::pair<double, double>>& values, RateModel model);

/// CSV `k,value,model_predictor`.
void write_rate_csv(std::ostream& os, const RateTable& table);
std::vector<RateRow> read_rate_csv(std::istream& is);

/// max / min of the values (inf if some value is 0).
double band_ratio(const std::vector<double>& values);

}  // namespace theta_lab
