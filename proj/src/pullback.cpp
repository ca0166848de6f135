#include "theta_lab/pullback.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <limits>
#include <numeric>
#include <ostream>
#include <queue>
#include <sstream>
#include <stdexcept>

#include "theta_lab/errors.hpp"
#include "theta_lab/parallel.hpp"

namespace theta_lab {

namespace {

MetricValue analytic_metric(const Embedding& e, const ComplexVector& z) {
  const SectionValues s = e.evaluate(z, true);
  const double F = s.values.squaredNorm();
  if (!(F > 0.0) || s.values.cwiseAbs().maxCoeff() < 1e-200) {
    throw BasePointError("all sections vanish; the pulled-back metric is undefined");
  }
  const ComplexMatrix& D = s.gradients;
  const ComplexVector a = D.transpose() * s.values.conjugate();
  ComplexMatrix g = (D.transpose() * D.conjugate()) / F - (a * a.adjoint()) / (F * F);
  g /= 2.0 * kPi * e.level();
  return {0.5 * (g + g.adjoint())};
}

// log sum |T|^2 without the Gaussian scale, which is an exact quadratic and is
// differentiated by hand.
double scaled_potential(const Embedding& e, const ComplexVector& z, const TruncationPolicy& pol) {
  const SectionValues s = e.evaluate(z, false, pol);
  const double F = s.values.squaredNorm();
  if (!(F > 0.0) || s.values.cwiseAbs().maxCoeff() < 1e-200) {
    throw BasePointError("all sections vanish; the pulled-back metric is undefined");
  }
  return std::log(F);
}

MetricValue finite_difference_metric(const Embedding& e, const ComplexVector& z,
                                     const FiniteDifferenceOptions& fd) {
  const int n = e.variety().dim();
  const double h = fd.step;
  TruncationPolicy pol = e.policy();
  pol.eps = std::min(pol.eps, fd.eps);

  // Real coordinates s = (Re z, Im z).
  auto f = [&](int i, int si, int j, int sj) {
    ComplexVector w = z;
    auto bump = [&](int c, int sign) {
      if (sign == 0) return;
      if (c < n) w(c) += sign * h;
      else w(c - n) += Complex(0.0, sign * h);
    };
    bump(i, si);
    bump(j, sj);
    return scaled_potential(e, w, pol);
  };

  const int d = 2 * n;
  RealMatrix hess(d, d);
  const double f0 = f(0, 0, 0, 0);
  for (int i = 0; i < d; ++i) {
    hess(i, i) = (f(i, 1, i, 0) - 2.0 * f0 + f(i, -1, i, 0)) / (h * h);
    for (int j = i + 1; j < d; ++j) {
      hess(i, j) = (f(i, 1, j, 1) - f(i, 1, j, -1) - f(i, -1, j, 1) + f(i, -1, j, -1)) / (4.0 * h * h);
      hess(j, i) = hess(i, j);
    }
  }

  ComplexMatrix ddbar(n, n);
  for (int a = 0; a < n; ++a) {
    for (int b = 0; b < n; ++b) {
      const double re = hess(a, b) + hess(n + a, n + b);
      const double im = hess(a, n + b) - hess(n + a, b);
      ddbar(a, b) = 0.25 * Complex(re, im);
    }
  }
  // The dropped scale 2 pi L Im z^t H Im z contributes pi L H.
  ddbar += (kPi * e.bundle_level() * e.variety().h()).cast<Complex>();
  ComplexMatrix g = ddbar / (2.0 * kPi * e.level());
  return {0.5 * (g + g.adjoint())};
}

RealVector stack(const AbelianPoint& p) {
  RealVector v(p.x.size() + p.y.size());
  v << p.x, p.y;
  return v;
}

ComplexMatrix inverse_sqrt(const ComplexMatrix& target) {
  Eigen::SelfAdjointEigenSolver<ComplexMatrix> eig(target);
  return eig.operatorInverseSqrt();
}

double normalised_norm(const ComplexMatrix& w, const ComplexMatrix& m) {
  const ComplexMatrix a = w * m * w;
  const ComplexMatrix herm = 0.5 * (a + a.adjoint());
  return Eigen::SelfAdjointEigenSolver<ComplexMatrix>(herm, Eigen::EigenvaluesOnly)
      .eigenvalues()
      .cwiseAbs()
      .maxCoeff();
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> cells;
  std::stringstream ss(line);
  for (std::string cell; std::getline(ss, cell, ',');) cells.push_back(cell);
  return cells;
}

void put(std::ostream& os, double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  os << buf;
}

}  // namespace

MetricValue pullback_metric(const Embedding& e, const ComplexVector& z, Scheme scheme,
                            const FiniteDifferenceOptions& fd) {
  return scheme == Scheme::analytic ? analytic_metric(e, z) : finite_difference_metric(e, z, fd);
}

double relative_difference(const ComplexMatrix& a, const ComplexMatrix& b) {
  const double scale = b.cwiseAbs().maxCoeff();
  return (a - b).cwiseAbs().maxCoeff() / (scale > 0.0 ? scale : 1.0);
}

MetricValue pullback_metric_checked(const Embedding& e, const ComplexVector& z, double tolerance) {
  const MetricValue exact = analytic_metric(e, z);
  const MetricValue approx = finite_difference_metric(e, z, {});
  const double gap = relative_difference(approx.g, exact.g);
  if (gap > tolerance) {
    throw SchemeDisagreement("analytic and finite-difference metrics differ by " + std::to_string(gap));
  }
  return exact;
}

double richardson_gap(const Embedding& e, const ComplexVector& z, const FiniteDifferenceOptions& fd) {
  FiniteDifferenceOptions half = fd;
  half.step = 0.5 * fd.step;
  const MetricValue a = finite_difference_metric(e, z, fd);
  const MetricValue b = finite_difference_metric(e, z, half);
  return relative_difference(a.g, b.g);
}

ComplexMatrix target_metric(const Embedding& e) {
  return (0.5 * e.metric_factor() * e.variety().h()).cast<Complex>();
}

double metric_error(const ComplexMatrix& g, const ComplexMatrix& target) {
  return normalised_norm(inverse_sqrt(target), g - target);
}

RealMatrix riemannian_metric(const AbelianVariety& A, const ComplexMatrix& g) {
  const int n = A.dim();
  ComplexMatrix M(n, 2 * n);
  M.leftCols(n) = A.period().omega();
  M.rightCols(n) = ComplexMatrix::Identity(n, n);
  const RealMatrix G = 2.0 * (M.transpose() * g * M.conjugate()).real();
  return 0.5 * (G + G.transpose());
}

double torsion_distance(const AbelianVariety& A, const AbelianPoint& p, double factor) {
  const RealMatrix G = A.flat_metric(factor);
  const RealVector v = stack(p);
  // Reducing twice the offset to [-1/2, 1/2) picks the nearest half-lattice
  // point coordinatewise, but a skew metric may prefer another; check all.
  double best = std::numeric_limits<double>::infinity();
  for (const auto& idx : torsion_indices(2 * A.dim(), 2)) {
    best = std::min(best, torus_distance(G, v - idx.cast<double>() * 0.5));
  }
  return best;
}

ErrorField metric_error_field(const Embedding& e, int per_dim, int q, const FiniteDifferenceOptions& fd) {
  if (q != 0 && q != 1) throw std::invalid_argument("error field order q must be 0 or 1");
  const AbelianVariety& A = e.variety();
  const int n = A.dim();
  const TorusGrid grid(n, per_dim, 0.5);
  const ComplexMatrix target = target_metric(e);
  const ComplexMatrix w = inverse_sqrt(target);

  ErrorField field;
  field.k = e.level();
  field.n = n;
  field.q = q;
  field.samples = parallel_map<ErrorSample>(grid.size(), [&](std::size_t i) {
    ErrorSample s;
    s.p = {grid.x(i), grid.y(i)};
    s.r = torsion_distance(A, s.p, e.metric_factor());
    const ComplexVector z = to_complex(A, s.p);
    s.err_c0 = normalised_norm(w, analytic_metric(e, z).g - target);
    if (q == 1) {
      double worst = 0.0;
      for (int c = 0; c < 2 * n; ++c) {
        ComplexVector dz(n);
        if (c < n) dz = A.period().omega().col(c);
        else dz = ComplexVector::Unit(n, c - n);
        const ComplexMatrix gp = analytic_metric(e, z + fd.step * dz).g;
        const ComplexMatrix gm = analytic_metric(e, z - fd.step * dz).g;
        worst = std::max(worst, normalised_norm(w, (gp - gm) / (2.0 * fd.step)));
      }
      s.err_c1 = s.err_c0 + worst;
    }
    return s;
  });
  return field;
}

void write_error_field_csv(std::ostream& os, const ErrorField& field) {
  const int n = field.n;
  for (int i = 1; i <= n; ++i) os << 'x' << i << ',';
  for (int i = 1; i <= n; ++i) os << 'y' << i << ',';
  os << "r,err_c0" << (field.q == 1 ? ",err_c1" : "") << '\n';
  for (const auto& s : field.samples) {
    for (int i = 0; i < n; ++i) put(os, s.p.x(i)), os << ',';
    for (int i = 0; i < n; ++i) put(os, s.p.y(i)), os << ',';
    put(os, s.r);
    os << ',';
    put(os, s.err_c0);
    if (field.q == 1) os << ',', put(os, s.err_c1);
    os << '\n';
  }
}

ErrorField read_error_field_csv(std::istream& is, int n) {
  std::string line;
  if (!std::getline(is, line)) throw std::runtime_error("error-field CSV is empty");
  const auto header = split_csv(line);
  ErrorField field;
  field.n = n;
  field.q = header.size() == static_cast<std::size_t>(2 * n + 3) ? 1 : 0;
  if (header.size() != static_cast<std::size_t>(2 * n + 2 + field.q)) {
    throw std::runtime_error("error-field CSV header does not match dimension");
  }
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    const auto cells = split_csv(line);
    if (cells.size() != header.size()) throw std::runtime_error("error-field CSV row has wrong width");
    ErrorSample s;
    s.p = {RealVector(n), RealVector(n)};
    std::size_t c = 0;
    for (int i = 0; i < n; ++i) s.p.x(i) = std::strtod(cells[c++].c_str(), nullptr);
    for (int i = 0; i < n; ++i) s.p.y(i) = std::strtod(cells[c++].c_str(), nullptr);
    s.r = std::strtod(cells[c++].c_str(), nullptr);
    s.err_c0 = std::strtod(cells[c++].c_str(), nullptr);
    if (field.q == 1) s.err_c1 = std::strtod(cells[c++].c_str(), nullptr);
    field.samples.push_back(s);
  }
  return field;
}

double region_radius(int k, double delta) {
  if (k < 2) throw std::invalid_argument("region decomposition needs k >= 2");
  if (!(delta > 0.0)) throw std::invalid_argument("region decomposition needs delta > 0");
  return std::sqrt(std::log(static_cast<double>(k)) / (delta * k));
}

RegionDecomposition region_decomposition(const AbelianVariety& A, double factor, int k, double delta,
                                         std::vector<AbelianPoint> points) {
  RegionDecomposition out;
  out.k = k;
  out.delta = delta;
  out.radius = region_radius(k, delta);
  const int n = A.dim();
  for (const auto& idx : torsion_indices(2 * n, 2)) {
    const RealVector half = idx.cast<double>() * 0.5;
    out.centres.push_back({half.head(n), half.tail(n)});
  }
  const RealMatrix G = A.flat_metric(factor);
  out.r.resize(points.size());
  out.ball.resize(points.size());
  for (std::size_t i = 0; i < points.size(); ++i) {
    const RealVector v = stack(points[i]);
    double best = std::numeric_limits<double>::infinity();
    int arg = -1;
    for (std::size_t c = 0; c < out.centres.size(); ++c) {
      const double d = torus_distance(G, v - stack(out.centres[c]));
      if (d < best) best = d, arg = static_cast<int>(c);
    }
    out.r[i] = best;
    out.ball[i] = best < out.radius ? arg : -1;
  }
  out.points = std::move(points);
  return out;
}

RegionDecomposition region_decomposition(const AbelianVariety& A, double factor, int k, double delta,
                                         int per_dim) {
  const TorusGrid grid(A.dim(), per_dim, 0.5);
  std::vector<AbelianPoint> points;
  points.reserve(grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) points.push_back({grid.x(i), grid.y(i)});
  return region_decomposition(A, factor, k, delta, std::move(points));
}

void write_regions_csv(std::ostream& os, const RegionDecomposition& regions) {
  const int n = regions.points.empty() ? 0 : static_cast<int>(regions.points.front().x.size());
  for (int i = 1; i <= n; ++i) os << 'x' << i << ',';
  for (int i = 1; i <= n; ++i) os << 'y' << i << ',';
  os << "r,in_u,ball\n";
  for (std::size_t r = 0; r < regions.points.size(); ++r) {
    for (int i = 0; i < n; ++i) put(os, regions.points[r].x(i)), os << ',';
    for (int i = 0; i < n; ++i) put(os, regions.points[r].y(i)), os << ',';
    put(os, regions.r[r]);
    os << ',' << (regions.in_u(r) ? 1 : 0) << ',' << regions.ball[r] << '\n';
  }
}

MetricField flat_field(const AbelianVariety& A, int per_dim, double factor, bool quotient, double offset) {
  MetricField field{TorusGrid(A.dim(), per_dim, offset), {}, quotient};
  field.metric.assign(field.grid.size(), A.flat_metric(factor));
  return field;
}

MetricField pullback_field(const Embedding& e, int per_dim, double offset) {
  const AbelianVariety& A = e.variety();
  MetricField field{TorusGrid(A.dim(), per_dim, offset), {}, e.family() == Family::kummer};
  field.metric = parallel_map<RealMatrix>(field.grid.size(), [&](std::size_t i) {
    const ComplexVector z = to_complex(A, {field.grid.x(i), field.grid.y(i)});
    return riemannian_metric(A, analytic_metric(e, z).g);
  });
  return field;
}

GridGraph::GridGraph(const MetricField& field, int stencil_radius) : field_(&field) {
  if (stencil_radius < 1) throw std::invalid_argument("stencil radius must be >= 1");
  const int d = 2 * field.grid.n();
  const int side = 2 * stencil_radius + 1;
  std::size_t total = 1;
  for (int i = 0; i < d; ++i) total *= side;
  for (std::size_t t = 0; t < total; ++t) {
    IntVector off(d);
    std::size_t rest = t;
    int g = 0;
    for (int i = d - 1; i >= 0; --i) {
      off(i) = static_cast<int>(rest % side) - stencil_radius;
      rest /= side;
      g = std::gcd(g, std::abs(off(i)));
    }
    if (g == 1) offsets_.push_back(off);
  }
}

std::size_t GridGraph::negate(std::size_t node) const {
  const TorusGrid& grid = field_->grid;
  IntVector c = grid.coords(node);
  // Node i sits at (i + offset) / N; its negative is node -i - 2 offset.
  const int shift = static_cast<int>(std::lround(2.0 * grid.offset()));
  return grid.index((-c).array() - shift);
}

std::vector<double> GridGraph::distances_from(std::size_t source) const {
  return distances_from(std::vector<std::size_t>{source});
}

std::vector<double> GridGraph::distances_from(const std::vector<std::size_t>& sources) const {
  const TorusGrid& grid = field_->grid;
  const double hstep = grid.spacing();
  std::vector<double> dist(grid.size(), std::numeric_limits<double>::infinity());
  using Item = std::pair<double, std::size_t>;
  std::priority_queue<Item, std::vector<Item>, std::greater<>> heap;
  for (std::size_t s : sources) {
    dist[s] = 0.0;
    heap.emplace(0.0, s);
  }
  while (!heap.empty()) {
    const auto [du, u] = heap.top();
    heap.pop();
    if (du > dist[u]) continue;
    const IntVector cu = grid.coords(u);
    for (const auto& off : offsets_) {
      const std::size_t v = grid.index(cu + off);
      const RealVector step = off.cast<double>() * hstep;
      const double w = std::sqrt(std::max(0.0, 0.5 * step.dot((field_->metric[u] + field_->metric[v]) * step)));
      if (du + w < dist[v]) {
        dist[v] = du + w;
        heap.emplace(dist[v], v);
      }
    }
  }
  for (double d : dist) {
    if (!std::isfinite(d)) throw Disconnected("grid graph is disconnected");
  }
  return dist;
}

double GridGraph::distance(std::size_t p, std::size_t q) const {
  const std::vector<double> d = distances_from(p);
  return field_->quotient ? std::min(d[q], d[negate(q)]) : d[q];
}

double graph_distance_dk(const GridGraph& graph, std::size_t p, std::size_t q) { return graph.distance(p, q); }

double ball_diameter(const GridGraph& graph, const MetricField& field, const AbelianVariety& A, double factor,
                     const AbelianPoint& centre, double radius) {
  const RealMatrix G = A.flat_metric(factor);
  const RealVector c = stack(centre);
  std::vector<std::size_t> members;
  for (std::size_t i = 0; i < field.grid.size(); ++i) {
    RealVector v(2 * A.dim());
    v << field.grid.x(i), field.grid.y(i);
    double d = torus_distance(G, v - c);
    if (field.quotient) d = std::min(d, torus_distance(G, v + c));
    if (d < radius) members.push_back(i);
  }
  const std::vector<double> per_source = parallel_map<double>(members.size(), [&](std::size_t a) {
    const std::vector<double> d = graph.distances_from(members[a]);
    double worst = 0.0;
    for (std::size_t b : members) {
      const double dist = field.quotient ? std::min(d[b], d[graph.negate(b)]) : d[b];
      worst = std::max(worst, dist);
    }
    return worst;
  });
  double diam = 0.0;
  for (double v : per_source) diam = std::max(diam, v);
  return diam;
}

}  // namespace theta_lab
