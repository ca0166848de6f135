#include "theta_lab/convergence.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <limits>
#include <map>
#include <ostream>
#include <queue>
#include <sstream>
#include <stdexcept>

#include "theta_lab/errors.hpp"
#include "theta_lab/parallel.hpp"

namespace theta_lab {

namespace {

// Symmetric kNN graph in adjacency-list form.
using Adjacency = std::vector<std::vector<std::pair<std::size_t, double>>>;

Adjacency knn_graph(int k, const std::vector<SimplexPoint>& nodes, int knn) {
  const std::size_t m = nodes.size();
  const std::size_t want = std::min<std::size_t>(static_cast<std::size_t>(knn), m - 1);
  const auto nearest = parallel_map<std::vector<std::pair<double, std::size_t>>>(m, [&](std::size_t i) {
    std::vector<std::pair<double, std::size_t>> d;
    d.reserve(m - 1);
    for (std::size_t j = 0; j < m; ++j) {
      if (j != i) d.emplace_back(simplex_distance(k, nodes[i].xi, nodes[j].xi), j);
    }
    std::partial_sort(d.begin(), d.begin() + want, d.end());
    d.resize(want);
    return d;
  });
  Adjacency adj(m);
  for (std::size_t i = 0; i < m; ++i) {
    for (const auto& [w, j] : nearest[i]) {
      adj[i].emplace_back(j, w);
      adj[j].emplace_back(i, w);
    }
  }
  return adj;
}

std::vector<double> dijkstra(const Adjacency& adj, const std::vector<std::size_t>& sources) {
  std::vector<double> dist(adj.size(), std::numeric_limits<double>::infinity());
  using Item = std::pair<double, std::size_t>;
  std::priority_queue<Item, std::vector<Item>, std::greater<>> heap;
  for (auto s : sources) {
    dist[s] = 0.0;
    heap.emplace(0.0, s);
  }
  while (!heap.empty()) {
    const auto [du, u] = heap.top();
    heap.pop();
    if (du > dist[u]) continue;
    for (const auto& [v, w] : adj[u]) {
      if (du + w < dist[v]) {
        dist[v] = du + w;
        heap.emplace(dist[v], v);
      }
    }
  }
  return dist;
}

double max_pairwise(int k, const std::vector<SimplexPoint>& pts) {
  const auto per_row = parallel_map<double>(pts.size(), [&](std::size_t i) {
    double worst = 0.0;
    for (std::size_t j = i + 1; j < pts.size(); ++j) {
      worst = std::max(worst, simplex_distance(k, pts[i].xi, pts[j].xi));
    }
    return worst;
  });
  double out = 0.0;
  for (double v : per_row) out = std::max(out, v);
  return out;
}

std::pair<double, double> least_squares(const std::vector<double>& x, const std::vector<double>& y) {
  const double m = static_cast<double>(x.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sx += x[i];
    sy += y[i];
    sxx += x[i] * x[i];
    sxy += x[i] * y[i];
  }
  const double denom = m * sxx - sx * sx;
  if (!(std::abs(denom) > 0.0)) throw std::invalid_argument("rate fit needs distinct predictors");
  const double slope = (m * sxy - sx * sy) / denom;
  return {slope, (sy - slope * sx) / m};
}

}  // namespace

double family_base_distance(const Embedding& e, const RealVector& y1, const RealVector& y2) {
  const AbelianVariety& A = e.variety();
  if (e.family() == Family::abelian) return torus_distance(A.base_metric(1.0), y1 - y2);
  const RealMatrix G = A.base_metric(2.0);
  return std::min(torus_distance(G, y1 - y2), torus_distance(G, y1 + y2));
}

SimplexPoint phi_k(const Embedding& e, const RealVector& y) {
  const AbelianPoint p{RealVector::Zero(y.size()), y};
  return moment_map(projective_from_values(e.evaluate(p).values));
}

std::vector<RealVector> base_samples(const Embedding& e, int per_dim) {
  if (per_dim < 1) throw std::invalid_argument("base grid needs at least one node per dimension");
  const int n = e.variety().dim();
  std::vector<RealVector> out;
  std::vector<IntVector> seen;
  for (const auto& idx : torsion_indices(n, per_dim)) {
    if (e.family() == Family::kummer) {
      IntVector neg(n);
      for (int i = 0; i < n; ++i) neg(i) = (per_dim - idx(i)) % per_dim;
      if (std::lexicographical_compare(neg.data(), neg.data() + n, idx.data(), idx.data() + n)) continue;
      out.push_back(base_rep(idx.cast<double>() / per_dim).y_rep);
    } else {
      out.push_back(idx.cast<double>() / per_dim);
    }
  }
  return out;
}

HausdorffApproxReport distortion_report(const Embedding& e, const std::vector<RealVector>& base,
                                        const AmoebaCloud& cloud, const DistortionOptions& opts) {
  if (base.size() < 2) throw std::invalid_argument("distortion needs at least two base samples");
  if (cloud.images.empty()) throw std::invalid_argument("distortion needs a nonempty amoeba cloud");
  const int k = e.level();
  const std::size_t nb = base.size();

  std::vector<SimplexPoint> phi = parallel_map<SimplexPoint>(nb, [&](std::size_t i) { return phi_k(e, base[i]); });

  HausdorffApproxReport rep;
  rep.k = k;

  // Restricted simplex distance.
  for (std::size_t i = 0; i < nb; ++i) {
    for (std::size_t j = i + 1; j < nb; ++j) {
      const double gap = std::abs(family_base_distance(e, base[i], base[j]) - simplex_distance(k, phi[i].xi, phi[j].xi));
      rep.restriction_distortion = std::max(rep.restriction_distortion, gap);
    }
  }
  rep.restriction_covering = directed_hausdorff(k, cloud.images, phi);

  // Intrinsic metric of B_k.
  std::vector<SimplexPoint> nodes = cloud.images;
  nodes.insert(nodes.end(), phi.begin(), phi.end());
  const std::size_t offset = cloud.images.size();
  int knn = std::max(1, opts.knn);
  Adjacency adj;
  for (;;) {
    adj = knn_graph(k, nodes, knn);
    const std::vector<double> d = dijkstra(adj, {0});
    if (std::all_of(d.begin(), d.end(), [](double v) { return std::isfinite(v); })) break;
    if (static_cast<std::size_t>(knn) >= nodes.size() - 1) throw Disconnected("amoeba graph is disconnected");
    knn *= 2;
  }
  rep.knn = knn;

  const auto rows = parallel_map<double>(nb, [&](std::size_t i) {
    const std::vector<double> d = dijkstra(adj, {offset + i});
    double worst = 0.0;
    for (std::size_t j = i + 1; j < nb; ++j) {
      worst = std::max(worst, std::abs(family_base_distance(e, base[i], base[j]) - d[offset + j]));
    }
    return worst;
  });
  for (double v : rows) rep.distortion = std::max(rep.distortion, v);

  std::vector<std::size_t> sources(nb);
  for (std::size_t i = 0; i < nb; ++i) sources[i] = offset + i;
  const std::vector<double> reach = dijkstra(adj, sources);
  rep.covering_radius = *std::max_element(reach.begin(), reach.end());

  rep.eps = std::max(rep.distortion, rep.covering_radius);
  rep.gh_upper = 2.0 * rep.eps;
  return rep;
}

double fiber_collapse(const Embedding& e, const RealVector& y, int fiber_per_dim) {
  const int n = e.variety().dim();
  const auto idx = torsion_indices(n, fiber_per_dim);
  const std::vector<SimplexPoint> images = parallel_map<SimplexPoint>(idx.size(), [&](std::size_t i) {
    const AbelianPoint p{idx[i].cast<double>() / fiber_per_dim, y};
    return moment_map(projective_from_values(e.evaluate(p).values));
  });
  return max_pairwise(e.level(), images);
}

double map_deviation(const Embedding& e, const AbelianPoint& p) {
  const SimplexPoint here = moment_map(projective_from_values(e.evaluate(p).values));
  return simplex_distance(e.level(), phi_k(e, p.y).xi, here.xi);
}

double max_map_deviation(const Embedding& e, int per_dim) {
  const TorusGrid grid(e.variety().dim(), per_dim);
  const auto dev = parallel_map<double>(grid.size(), [&](std::size_t i) {
    return map_deviation(e, {grid.x(i), grid.y(i)});
  });
  return *std::max_element(dev.begin(), dev.end());
}

TangentLeaks tangent_leaks(const ComplexVector& Z, const ComplexMatrix& fibre_push, const ComplexMatrix& rotated_push) {
  const double zz = Z.squaredNorm();
  const double floor = 1e-300 * Z.cwiseAbs().maxCoeff();
  auto fs_norm = [&](const ComplexVector& d) {
    const double v = (d.squaredNorm() * zz - std::norm(Z.dot(d))) / (zz * zz);
    return std::sqrt(std::max(0.0, v));
  };
  auto split = [&](const ComplexVector& d) {
    ComplexVector horiz(d.size()), vert(d.size());
    for (Eigen::Index i = 0; i < d.size(); ++i) {
      if (std::abs(Z(i)) <= floor) {
        horiz(i) = d(i);
        vert(i) = 0.0;
        continue;
      }
      const Complex a = d(i) / Z(i);
      horiz(i) = Z(i) * a.real();
      vert(i) = Z(i) * Complex(0.0, a.imag());
    }
    return std::pair{horiz, vert};
  };

  TangentLeaks out;
  for (Eigen::Index c = 0; c < fibre_push.cols(); ++c) {
    const ComplexVector d = fibre_push.col(c);
    const double total = fs_norm(d);
    if (!(total > 0.0)) throw ChartFailure("fibre direction has a vanishing image");
    out.vertical_leak = std::max(out.vertical_leak, fs_norm(split(d).first) / total);
  }
  for (Eigen::Index c = 0; c < rotated_push.cols(); ++c) {
    const ComplexVector d = rotated_push.col(c);
    const double total = fs_norm(d);
    if (!(total > 0.0)) throw ChartFailure("rotated fibre direction has a vanishing image");
    out.horizontal_leak = std::max(out.horizontal_leak, fs_norm(split(d).second) / total);
  }
  return out;
}

TangentLeaks tangent_distortion(const Embedding& e, const ComplexVector& z) {
  const SectionValues s = e.evaluate(z, true);
  if (s.values.cwiseAbs().maxCoeff() < 1e-200) throw BasePointError("all sections vanish at this point");
  const ComplexMatrix& omega = e.variety().period().omega();
  const ComplexMatrix fibre = s.gradients * omega;
  const ComplexMatrix rotated = kI * fibre;
  return tangent_leaks(s.values, fibre, rotated);
}

std::string to_string(RateModel m) {
  switch (m) {
    case RateModel::sqrt_logk_over_k: return "sqrt_logk_over_k";
    case RateModel::inv_k: return "inv_k";
    case RateModel::inv_sqrt_k: return "inv_sqrt_k";
  }
  return "?";
}

RateModel parse_rate_model(const std::string& s) {
  if (s == "sqrt_logk_over_k") return RateModel::sqrt_logk_over_k;
  if (s == "inv_k") return RateModel::inv_k;
  if (s == "inv_sqrt_k") return RateModel::inv_sqrt_k;
  throw std::invalid_argument("unknown rate model '" + s + "'");
}

double rate_predictor(RateModel m, double k) {
  switch (m) {
    case RateModel::sqrt_logk_over_k: return std::sqrt(std::log(k) / k);
    case RateModel::inv_k: return 1.0 / k;
    case RateModel::inv_sqrt_k: return 1.0 / std::sqrt(k);
  }
  return 0.0;
}

RateTable rate_fit(const std::vector<std::pair<double, double>>& values, RateModel model) {
  if (values.size() < 3) throw std::invalid_argument("rate fit needs at least three rows");
  RateTable t;
  t.model = model;
  std::vector<double> lp, lk, lv;
  for (const auto& [k, v] : values) {
    if (!(v > 0.0)) throw NonPositiveValue("rate fit value " + std::to_string(v) + " at k=" + std::to_string(k) + " is not positive");
    const double p = rate_predictor(model, k);
    if (!(p > 0.0)) throw NonPositiveValue("model predictor vanishes at k=" + std::to_string(k));
    t.rows.push_back({k, v, p});
    lp.push_back(std::log(p));
    lk.push_back(std::log(k));
    lv.push_back(std::log(v));
  }
  std::tie(t.slope, t.intercept) = least_squares(lp, lv);
  std::tie(t.slope_log_k, t.intercept_log_k) = least_squares(lk, lv);
  for (std::size_t i = 0; i < lv.size(); ++i) t.residuals.push_back(lv[i] - (t.intercept + t.slope * lp[i]));
  return t;
}

void write_rate_csv(std::ostream& os, const RateTable& table) {
  os << "k,value,model_predictor\n";
  char buf[96];
  for (const auto& r : table.rows) {
    std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g\n", r.k, r.value, r.predictor);
    os << buf;
  }
}

std::vector<RateRow> read_rate_csv(std::istream& is) {
  std::string line;
  if (!std::getline(is, line) || line != "k,value,model_predictor") {
    throw std::runtime_error("rate CSV header must be k,value,model_predictor");
  }
  std::vector<RateRow> rows;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    RateRow r;
    char* end = nullptr;
    const char* p = line.c_str();
    r.k = std::strtod(p, &end);
    if (*end != ',') throw std::runtime_error("malformed rate CSV row");
    r.value = std::strtod(end + 1, &end);
    if (*end != ',') throw std::runtime_error("malformed rate CSV row");
    r.predictor = std::strtod(end + 1, &end);
    rows.push_back(r);
  }
  return rows;
}

double band_ratio(const std::vector<double>& values) {
  if (values.empty()) return 1.0;
  const auto [lo, hi] = std::minmax_element(values.begin(), values.end());
  if (!(*lo > 0.0)) return std::numeric_limits<double>::infinity();
  return *hi / *lo;
}

}  // namespace theta_lab
