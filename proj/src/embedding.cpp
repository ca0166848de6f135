#include "theta_lab/embedding.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include "theta_lab/errors.hpp"
#include "theta_lab/parallel.hpp"

namespace theta_lab {

std::string to_string(Family f) { return f == Family::abelian ? "abelian" : "kummer"; }

Family parse_family(const std::string& s) {
  if (s == "abelian") return Family::abelian;
  if (s == "kummer") return Family::kummer;
  throw std::invalid_argument("unknown family '" + s + "' (expected abelian or kummer)");
}

Embedding::Embedding(SectionBasis basis) : basis_(std::move(basis)) {}
Embedding::Embedding(InvariantBasis basis) : basis_(std::move(basis)) {}

Embedding Embedding::make(const AbelianVariety& A, Family family, int k, TruncationPolicy pol) {
  if (family == Family::abelian) return Embedding(SectionBasis(A, k, pol));
  return Embedding(InvariantBasis(A, k, pol));
}

const AbelianVariety& Embedding::variety() const {
  if (auto* s = section_basis()) return s->variety();
  return invariant_basis()->inner().variety();
}

int Embedding::level() const {
  if (auto* s = section_basis()) return s->level();
  return invariant_basis()->level();
}

int Embedding::bundle_level() const {
  if (auto* s = section_basis()) return s->level();
  return invariant_basis()->inner().level();
}

int Embedding::size() const {
  if (auto* s = section_basis()) return s->size();
  return invariant_basis()->size();
}

double Embedding::norm_factor() const {
  if (auto* s = section_basis()) return s->norm_factor();
  return invariant_basis()->inner().norm_factor();
}

SectionValues Embedding::evaluate(const ComplexVector& z, bool with_gradient) const {
  if (auto* s = section_basis()) return evaluate_sections(*s, z, with_gradient);
  return evaluate_invariant(*invariant_basis(), z, with_gradient);
}

SectionValues Embedding::evaluate(const ComplexVector& z, bool with_gradient,
                                  const TruncationPolicy& pol) const {
  if (auto* s = section_basis()) return evaluate_sections(*s, z, with_gradient, pol);
  return evaluate_invariant(*invariant_basis(), z, with_gradient, pol);
}

const TruncationPolicy& Embedding::policy() const {
  if (auto* s = section_basis()) return s->policy();
  return invariant_basis()->inner().policy();
}

SectionValues Embedding::evaluate(const AbelianPoint& p, bool with_gradient) const {
  return evaluate(to_complex(variety(), p), with_gradient);
}

ProjectivePoint projective_from_values(const ComplexVector& values) {
  const double peak = values.cwiseAbs().maxCoeff();
  if (!(peak >= 1e-200)) {
    throw BasePointError("all section values vanish here; the embedding is undefined");
  }
  ComplexVector v = values / peak;
  v /= v.norm();
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    if (std::abs(v(i)) > 1e-12) {
      v *= std::conj(v(i)) / std::abs(v(i));
      v(i) = std::abs(v(i));
      break;
    }
  }
  return {v};
}

ProjectivePoint embed(const Embedding& e, const ComplexVector& z) {
  return projective_from_values(e.evaluate(z).values);
}

double projective_angle(const ProjectivePoint& P, const ProjectivePoint& Q) {
  // Chord between P and the phase-aligned Q; arccos |<P, Q>| loses half the digits near 0.
  const Complex c = Q.coords.dot(P.coords);
  const Complex phase = std::abs(c) > 0.0 ? c / std::abs(c) : Complex(1.0);
  const double chord = (P.coords - phase * Q.coords).norm();
  return 2.0 * std::asin(std::min(1.0, 0.5 * chord));
}

SimplexPoint moment_map_of(const ComplexVector& coords) {
  RealVector xi = coords.cwiseAbs2();
  const double total = xi.sum();
  if (!(total > 0.0)) throw BasePointError("moment map of the zero vector");
  xi /= total;
  return {xi};
}

SimplexPoint moment_map(const ProjectivePoint& P) { return moment_map_of(P.coords); }

double simplex_distance(int k, const RealVector& xi, const RealVector& xi2) {
  if (xi.size() != xi2.size()) throw std::invalid_argument("simplex points of different dimension");
  // 2 asin(|u - u'| / 2) is arccos(u . u') for unit u, without the loss of
  // precision near 0.
  double chord2 = 0.0;
  for (Eigen::Index i = 0; i < xi.size(); ++i) {
    const double d = std::sqrt(std::max(0.0, xi(i))) - std::sqrt(std::max(0.0, xi2(i)));
    chord2 += d * d;
  }
  const double angle = 2.0 * std::asin(std::min(1.0, 0.5 * std::sqrt(chord2)));
  return angle / std::sqrt(kPi * k);
}

AmoebaCloud amoeba_sample(const Embedding& e, int per_dim) {
  if (per_dim < 8) throw std::invalid_argument("amoeba grid needs at least 8 nodes per dimension");
  const AbelianVariety& A = e.variety();
  const int n = A.dim();
  const TorusGrid grid(n, per_dim);

  std::vector<AbelianPoint> sources;
  sources.reserve(grid.size());
  if (e.family() == Family::abelian) {
    for (std::size_t i = 0; i < grid.size(); ++i) sources.push_back({grid.x(i), grid.y(i)});
  } else {
    // -p of a grid node is again a grid node; keep the node whose integer
    // coordinates are the lexicographically smaller of the pair.
    for (std::size_t i = 0; i < grid.size(); ++i) {
      const IntVector c = grid.coords(i);
      const std::size_t j = grid.index(-c);
      if (j < i) continue;
      sources.push_back(canonical_rep({grid.x(i), grid.y(i)}).rep);
    }
  }

  AmoebaCloud cloud;
  cloud.k = e.level();
  cloud.n = n;
  cloud.images = parallel_map<SimplexPoint>(sources.size(), [&](std::size_t i) {
    return moment_map(projective_from_values(e.evaluate(sources[i]).values));
  });
  cloud.sources = std::move(sources);
  return cloud;
}

double directed_hausdorff(int k, const std::vector<SimplexPoint>& a, const std::vector<SimplexPoint>& b) {
  if (a.empty() || b.empty()) throw std::invalid_argument("Hausdorff distance of an empty cloud");
  const std::vector<double> nearest = parallel_map<double>(a.size(), [&](std::size_t i) {
    double best = std::numeric_limits<double>::infinity();
    for (const auto& q : b) best = std::min(best, simplex_distance(k, a[i].xi, q.xi));
    return best;
  });
  return *std::max_element(nearest.begin(), nearest.end());
}

double hausdorff_distance(int k, const std::vector<SimplexPoint>& a, const std::vector<SimplexPoint>& b) {
  return std::max(directed_hausdorff(k, a, b), directed_hausdorff(k, b, a));
}

double hausdorff_distance(const AmoebaCloud& a, const AmoebaCloud& b) {
  if (a.k != b.k) throw std::invalid_argument("Hausdorff distance between clouds of different level");
  return hausdorff_distance(a.k, a.images, b.images);
}

void write_amoeba_csv(std::ostream& os, const AmoebaCloud& cloud) {
  const int n = cloud.n;
  const int width = cloud.images.empty() ? 0 : static_cast<int>(cloud.images.front().xi.size());
  os << "k,n";
  for (int i = 1; i <= n; ++i) os << ",src_x" << i;
  for (int i = 1; i <= n; ++i) os << ",src_y" << i;
  for (int i = 0; i < width; ++i) os << ",xi_" << i;
  os << '\n';
  char buf[32];
  auto put = [&](double v) {
    std::snprintf(buf, sizeof buf, "%.17g", v);
    os << ',' << buf;
  };
  for (std::size_t r = 0; r < cloud.images.size(); ++r) {
    os << cloud.k << ',' << n;
    for (int i = 0; i < n; ++i) put(cloud.sources[r].x(i));
    for (int i = 0; i < n; ++i) put(cloud.sources[r].y(i));
    for (int i = 0; i < width; ++i) put(cloud.images[r].xi(i));
    os << '\n';
  }
}

AmoebaCloud read_amoeba_csv(std::istream& is) {
  std::string line;
  if (!std::getline(is, line)) throw std::runtime_error("amoeba CSV is empty");
  const auto columns = std::count(line.begin(), line.end(), ',') + 1;
  AmoebaCloud cloud;
  bool first = true;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::stringstream ss(line);
    for (std::string cell; std::getline(ss, cell, ',');) cells.push_back(cell);
    if (static_cast<long>(cells.size()) != columns) throw std::runtime_error("amoeba CSV row has wrong width");
    const int k = std::stoi(cells[0]);
    const int n = std::stoi(cells[1]);
    if (first) {
      cloud.k = k;
      cloud.n = n;
      first = false;
    } else if (k != cloud.k || n != cloud.n) {
      throw std::runtime_error("amoeba CSV mixes levels or dimensions");
    }
    const int width = static_cast<int>(columns) - 2 - 2 * n;
    if (width < 1) throw std::runtime_error("amoeba CSV has no simplex columns");
    AbelianPoint src{RealVector(n), RealVector(n)};
    RealVector xi(width);
    std::size_t c = 2;
    for (int i = 0; i < n; ++i) src.x(i) = std::strtod(cells[c++].c_str(), nullptr);
    for (int i = 0; i < n; ++i) src.y(i) = std::strtod(cells[c++].c_str(), nullptr);
    for (int i = 0; i < width; ++i) xi(i) = std::strtod(cells[c++].c_str(), nullptr);
    cloud.sources.push_back(src);
    cloud.images.push_back({xi});
  }
  return cloud;
}

}  // namespace theta_lab
