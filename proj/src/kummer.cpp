#include "theta_lab/kummer.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "theta_lab/errors.hpp"
#include "theta_lab/parallel.hpp"

namespace theta_lab {

namespace {

bool lex_less(const RealVector& a, const RealVector& b) {
  for (Eigen::Index i = 0; i < a.size(); ++i) {
    if (a(i) != b(i)) return a(i) < b(i);
  }
  return false;
}

RealVector stack(const AbelianPoint& p) {
  RealVector v(p.x.size() + p.y.size());
  v << p.x, p.y;
  return v;
}

}  // namespace

KummerVariety::KummerVariety(AbelianVariety A)
    : abelian_(std::move(A)),
      base_metric_(abelian_.base_metric(2.0)),
      flat_metric_(abelian_.flat_metric(2.0)) {
  const int n = dim();
  for (const auto& idx : torsion_indices(2 * n, 2)) {
    const RealVector half = idx.cast<double>() * 0.5;
    singular_.push_back({half.head(n), half.tail(n)});
  }
}

KummerPoint canonical_rep(const AbelianPoint& p) {
  const AbelianPoint a{reduce_mod1(p.x), reduce_mod1(p.y)};
  const AbelianPoint b{reduce_mod1(-a.x), reduce_mod1(-a.y)};
  return {lex_less(stack(b), stack(a)) ? b : a};
}

BasePoint base_rep(const RealVector& y) {
  const RealVector a = reduce_mod1(y);
  const RealVector b = reduce_mod1(-a);
  return {lex_less(b, a) ? b : a};
}

BasePoint fibration(const KummerPoint& p) { return base_rep(p.rep.y); }

double base_distance(const KummerVariety& K, const BasePoint& u, const BasePoint& v) {
  return std::min(torus_distance(K.base_metric(), u.y_rep - v.y_rep),
                  torus_distance(K.base_metric(), u.y_rep + v.y_rep));
}

double quotient_distance(const KummerVariety& K, const KummerPoint& p, const KummerPoint& q) {
  const RealVector a = stack(p.rep), b = stack(q.rep);
  return std::min(torus_distance(K.flat_metric(), a - b), torus_distance(K.flat_metric(), a + b));
}

double singular_distance(const KummerVariety& K, const KummerPoint& p) {
  double best = std::numeric_limits<double>::infinity();
  const RealVector a = stack(p.rep);
  for (const auto& e : K.singular_points()) {
    best = std::min(best, torus_distance(K.flat_metric(), a - stack(e)));
  }
  return best;
}

long long invariant_count(int n, int k) {
  long long kn = 1;
  for (int i = 0; i < n; ++i) kn *= k;
  return (1LL << (n - 1)) * (kn + 1);
}

InvariantBasis::InvariantBasis(const AbelianVariety& A, int k, TruncationPolicy pol)
    : k_(k), inner_(A, 2 * std::max(k, 1), pol) {
  if (k < 1) throw std::invalid_argument("invariant basis level k must be >= 1");
  const int n = A.dim();
  const int level = 2 * k;
  const double paired_weight = 1.0 / std::sqrt(std::pow(2.0, n));
  const double fixed_weight = 1.0 / std::sqrt(std::pow(2.0, n - 1));
  const auto& index = inner_.torsion_index();
  for (int i = 0; i < inner_.size(); ++i) {
    int partner = 0;
    for (int d = 0; d < n; ++d) partner = partner * level + (level - index[i](d)) % level;
    if (partner == i) {
      entries_.push_back({InvariantEntry::Kind::fixed, i, i, fixed_weight});
    } else if (i < partner) {
      entries_.push_back({InvariantEntry::Kind::paired, i, partner, paired_weight});
    }
  }
}

SectionValues evaluate_invariant(const InvariantBasis& basis, const ComplexVector& z,
                                 bool with_gradient) {
  return evaluate_invariant(basis, z, with_gradient, basis.inner().policy());
}

SectionValues evaluate_invariant(const InvariantBasis& basis, const ComplexVector& z,
                                 bool with_gradient, const TruncationPolicy& pol) {
  const SectionValues s = evaluate_sections(basis.inner(), z, with_gradient, pol);
  const int m = basis.size();
  SectionValues out;
  out.log_scale = s.log_scale;
  out.values.resize(m);
  if (with_gradient) out.gradients.resize(m, s.gradients.cols());
  for (int i = 0; i < m; ++i) {
    const InvariantEntry& e = basis.entries()[i];
    if (e.kind == InvariantEntry::Kind::fixed) {
      out.values(i) = e.weight * s.values(e.first);
      if (with_gradient) out.gradients.row(i) = e.weight * s.gradients.row(e.first);
    } else {
      out.values(i) = e.weight * (s.values(e.first) + s.values(e.second));
      if (with_gradient) {
        out.gradients.row(i) = e.weight * (s.gradients.row(e.first) + s.gradients.row(e.second));
      }
    }
  }
  return out;
}

double invariant_h_norm(const InvariantBasis& basis, int index, const ComplexVector& z) {
  if (index < 0 || index >= basis.size()) throw std::out_of_range("invariant index out of range");
  return std::sqrt(basis.inner().norm_factor()) * std::abs(evaluate_invariant(basis, z).values(index));
}

ComplexMatrix kummer_gram_matrix(const InvariantBasis& basis, int per_dim, GridCheck check) {
  if (per_dim < 8) throw std::invalid_argument("quadrature grid needs at least 8 nodes per dimension");
  const AbelianVariety& A = basis.inner().variety();
  const int n = A.dim();
  const TorusGrid grid(n, per_dim);
  const int count = basis.size();
  constexpr std::size_t kChunk = 512;
  std::vector<ComplexMatrix> partial((grid.size() + kChunk - 1) / kChunk);

  parallel_chunks(grid.size(), kChunk, [&](std::size_t c, std::size_t b, std::size_t e) {
    ComplexMatrix acc = ComplexMatrix::Zero(count, count);
    for (std::size_t i = b; i < e; ++i) {
      const ComplexVector v = evaluate_invariant(basis, to_complex(A, {grid.x(i), grid.y(i)})).values;
      for (int r = 0; r < count; ++r)
        for (int s = r; s < count; ++s) acc(r, s) += v(r) * std::conj(v(s));
    }
    partial[c] = std::move(acc);
  });

  ComplexMatrix G = ComplexMatrix::Zero(count, count);
  for (const auto& p : partial) G += p;
  G *= std::pow(2.0, n - 1) * basis.inner().norm_factor() / static_cast<double>(grid.size());
  for (int r = 0; r < count; ++r) {
    G(r, r) = G(r, r).real();
    for (int s = r + 1; s < count; ++s) G(s, r) = std::conj(G(r, s));
  }
  if (check == GridCheck::raise) {
    double off = 0.0;
    for (int r = 0; r < count; ++r)
      for (int s = 0; s < count; ++s)
        if (r != s) off = std::max(off, std::abs(G(r, s)));
    if (off > 0.1) throw GridTooCoarse("Kummer Gram off-diagonal mass " + std::to_string(off) + " exceeds 0.1");
  }
  return G;
}

double kummer_bergman_density(const InvariantBasis& basis, const ComplexVector& z) {
  return basis.inner().norm_factor() * evaluate_invariant(basis, z).values.squaredNorm();
}

}  // namespace theta_lab
