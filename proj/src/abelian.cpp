#include "theta_lab/abelian.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "compensated.hpp"
#include "theta_lab/errors.hpp"
#include "theta_lab/parallel.hpp"

namespace theta_lab {

AbelianVariety::AbelianVariety(PeriodMatrix P) : period_(std::move(P)) {}

RealMatrix AbelianVariety::flat_metric(double factor) const {
  const int n = dim();
  ComplexMatrix M(n, 2 * n);
  M.leftCols(n) = period_.omega();
  M.rightCols(n) = ComplexMatrix::Identity(n, n);
  const ComplexMatrix Hc = h().cast<Complex>();
  RealMatrix G = factor * (M.adjoint() * Hc * M).real();
  return 0.5 * (G + G.transpose());
}

RealMatrix AbelianVariety::base_metric(double factor) const {
  const int n = dim();
  const RealMatrix G = flat_metric(factor);
  const RealMatrix gxx = G.topLeftCorner(n, n);
  const RealMatrix gxy = G.topRightCorner(n, n);
  const RealMatrix gyy = G.bottomRightCorner(n, n);
  RealMatrix B = gyy - gxy.transpose() * gxx.ldlt().solve(gxy);
  return 0.5 * (B + B.transpose());
}

ComplexVector to_complex(const AbelianVariety& A, const AbelianPoint& p) {
  return A.period().omega() * p.x.cast<Complex>() + p.y.cast<Complex>();
}

AbelianPoint from_complex(const AbelianVariety& A, const ComplexVector& z) {
  const RealVector x = A.h() * z.imag();
  const RealVector y = z.real() - A.period().omega().real() * x;
  return {reduce_mod1(x), reduce_mod1(y)};
}

double torus_distance(const RealMatrix& G, const RealVector& delta, int window) {
  const int d = static_cast<int>(delta.size());
  const RealVector base = reduce_centered(delta);
  IntVector m = IntVector::Constant(d, -window);
  double best = std::numeric_limits<double>::infinity();
  RealVector v(d);
  for (;;) {
    v = base + m.cast<double>();
    best = std::min(best, v.dot(G * v));
    int i = d - 1;
    while (i >= 0 && m(i) == window) {
      m(i) = -window;
      --i;
    }
    if (i < 0) break;
    ++m(i);
  }
  return std::sqrt(std::max(0.0, best));
}

double flat_distance(const AbelianVariety& A, const AbelianPoint& p, const AbelianPoint& q) {
  const int n = A.dim();
  RealVector delta(2 * n);
  delta << p.x - q.x, p.y - q.y;
  return torus_distance(A.flat_metric(1.0), delta);
}

SectionBasis::SectionBasis(const AbelianVariety& A, int k, TruncationPolicy pol)
    : variety_(A), k_(k), pol_(pol), level_period_(A.period().scaled(1.0 / std::max(k, 1))) {
  if (k < 1) throw std::invalid_argument("section level k must be >= 1");
  const int n = A.dim();
  index_ = torsion_indices(n, k);
  characteristics_.reserve(index_.size());
  for (const auto& j : index_) characteristics_.push_back(j.cast<double>() / k);
  c_omega_ = std::pow(2.0, n / 4.0) * std::pow(A.period().imag().determinant(), 0.25);
  norm_factor_ = c_omega_ * c_omega_ * std::pow(static_cast<double>(k), -n / 2.0);
}

SectionValues evaluate_sections(const SectionBasis& basis, const ComplexVector& z,
                                bool with_gradient) {
  return evaluate_sections(basis, z, with_gradient, basis.policy());
}

SectionValues evaluate_sections(const SectionBasis& basis, const ComplexVector& z,
                                bool with_gradient, const TruncationPolicy& pol) {
  // S_b(z) = sum_l q_l e(-l^t b) with b = j/k only sees l mod k, so the
  // shell is folded into k^n residue classes and a direct DFT over the
  // residues yields every section at once.
  const int n = basis.variety().dim();
  const int k = basis.level();
  const LatticeShell shell = lattice_shell(basis.level_period(), Characteristic::zero(n), z,
                                           pol, ToleranceMode::scaled, with_gradient);
  const int count = basis.size();

  std::vector<detail::CompensatedSum> residue(count);
  std::vector<detail::CompensatedSum> residue_grad(with_gradient ? count * n : 0);
  for (const auto& t : shell.terms) {
    int r = 0;
    for (int i = 0; i < n; ++i) {
      int li = t.l(i) % k;
      if (li < 0) li += k;
      r = r * k + li;
    }
    residue[r].add(t.value);
    if (with_gradient) {
      for (int a = 0; a < n; ++a) residue_grad[r * n + a].add(2.0 * kPi * kI * double(t.l(a)) * t.value);
    }
  }

  std::vector<Complex> roots(k);
  for (int m = 0; m < k; ++m) roots[m] = std::polar(1.0, -2.0 * kPi * m / k);

  const auto& index = basis.torsion_index();
  SectionValues out;
  out.log_scale = shell.log_scale;
  out.values = ComplexVector::Zero(count);
  if (with_gradient) out.gradients = ComplexMatrix::Zero(count, n);
  std::vector<Complex> q(count), qg(with_gradient ? count * n : 0);
  for (int r = 0; r < count; ++r) q[r] = residue[r].value();
  for (std::size_t r = 0; r < qg.size(); ++r) qg[r] = residue_grad[r].value();

  for (int j = 0; j < count; ++j) {
    Complex acc = 0.0;
    ComplexVector gacc = ComplexVector::Zero(with_gradient ? n : 0);
    for (int r = 0; r < count; ++r) {
      const IntVector& rv = index[r];
      long long dot = 0;
      for (int i = 0; i < n; ++i) dot += static_cast<long long>(rv(i)) * index[j](i);
      const Complex w = roots[static_cast<int>(dot % k)];
      acc += q[r] * w;
      if (with_gradient) {
        for (int a = 0; a < n; ++a) gacc(a) += qg[r * n + a] * w;
      }
    }
    out.values(j) = acc;
    if (with_gradient) out.gradients.row(j) = gacc.transpose();
  }
  return out;
}

HermitianSectionValue section_value(const SectionBasis& basis, int index, const ComplexVector& z) {
  if (index < 0 || index >= basis.size()) throw std::out_of_range("section index out of range");
  const SectionValues sv = evaluate_sections(basis, z, false);
  const Complex scaled = sv.values(index);
  const double k = basis.level();
  const Complex quad = (z.transpose() * basis.variety().h().cast<Complex>() * z)(0, 0);
  const Complex exponent = 0.5 * kPi * k * quad + sv.log_scale;
  HermitianSectionValue out;
  out.raw = basis.c_omega() * std::pow(k, -basis.variety().dim() / 4.0) * std::exp(exponent) * scaled;
  out.h_norm = std::sqrt(basis.norm_factor()) * std::abs(scaled);
  return out;
}

ComplexMatrix gram_matrix(const SectionBasis& basis, int per_dim, GridCheck check) {
  if (per_dim < 8) throw std::invalid_argument("quadrature grid needs at least 8 nodes per dimension");
  const AbelianVariety& A = basis.variety();
  const TorusGrid grid(A.dim(), per_dim);
  const int count = basis.size();
  constexpr std::size_t kChunk = 512;
  const std::size_t chunks = (grid.size() + kChunk - 1) / kChunk;
  std::vector<ComplexMatrix> partial(chunks);

  parallel_chunks(grid.size(), kChunk, [&](std::size_t c, std::size_t b, std::size_t e) {
    ComplexMatrix acc = ComplexMatrix::Zero(count, count);
    for (std::size_t i = b; i < e; ++i) {
      const AbelianPoint p{grid.x(i), grid.y(i)};
      const ComplexVector v = evaluate_sections(basis, to_complex(A, p)).values;
      for (int r = 0; r < count; ++r)
        for (int s = r; s < count; ++s) acc(r, s) += v(r) * std::conj(v(s));
    }
    partial[c] = std::move(acc);
  });

  ComplexMatrix G = ComplexMatrix::Zero(count, count);
  for (const auto& p : partial) G += p;
  G *= basis.norm_factor() / static_cast<double>(grid.size());
  for (int r = 0; r < count; ++r) {
    G(r, r) = G(r, r).real();
    for (int s = r + 1; s < count; ++s) G(s, r) = std::conj(G(r, s));
  }

  if (check == GridCheck::raise && count > 1) {
    double off = 0.0;
    for (int r = 0; r < count; ++r)
      for (int s = 0; s < count; ++s)
        if (r != s) off = std::max(off, std::abs(G(r, s)));
    if (off > 0.1) {
      throw GridTooCoarse("Gram matrix off-diagonal mass " + std::to_string(off) +
                          " exceeds 0.1; refine the quadrature grid");
    }
  }
  return G;
}

double bergman_density(const SectionBasis& basis, const ComplexVector& z) {
  return basis.norm_factor() * evaluate_sections(basis, z).values.squaredNorm();
}

Complex asymptotic_residual(const SectionBasis& basis, int index, const ComplexVector& z) {
  if (index < 0 || index >= basis.size()) throw std::out_of_range("section index out of range");
  const AbelianVariety& A = basis.variety();
  const int n = A.dim();
  const double k = basis.level();
  const ComplexMatrix& omega = A.period().omega();
  const ComplexMatrix omega_inv = omega.inverse();

  // log det(-i Omega)^{1/2} on the branch continuous from real Im Omega.
  const Eigen::ComplexEigenSolver<ComplexMatrix> eig(-kI * omega, false);
  Complex half_log_det = 0.0;
  for (int i = 0; i < n; ++i) half_log_det += 0.5 * std::log(eig.eigenvalues()(i));

  const ComplexVector w0 = z - basis.characteristics()[index].cast<Complex>();
  // Pick the integer image u maximising |e(-(k/2) (w-u)^t Omega^{-1} (w-u))|.
  const RealVector centre = w0.real().array().round().matrix();
  Complex best_log_den = 0.0;
  double best_re = -std::numeric_limits<double>::infinity();
  IntVector off = IntVector::Constant(n, -1);
  for (;;) {
    const ComplexVector w = w0 - (centre + off.cast<double>()).cast<Complex>();
    const Complex quad = (w.transpose() * omega_inv * w)(0, 0);
    const Complex log_den = 0.5 * n * std::log(k) - half_log_det + 2.0 * kPi * kI * (-0.5 * k * quad);
    if (log_den.real() > best_re) {
      best_re = log_den.real();
      best_log_den = log_den;
    }
    int i = n - 1;
    while (i >= 0 && off(i) == 1) {
      off(i) = -1;
      --i;
    }
    if (i < 0) break;
    ++off(i);
  }
  if (best_re < std::log(1e-300)) {
    throw DivisionUnderflow("leading Gaussian term below 1e-300; residual is meaningless here");
  }

  const SectionValues sv = evaluate_sections(basis, z);
  const Complex s = sv.values(index);
  if (s == 0.0) return -1.0;
  return std::exp(std::log(s) + sv.log_scale - best_log_den) - 1.0;
}

DecayFit gaussian_decay_check(std::span<const SectionBasis> bases,
                              std::span<const AbelianPoint> samples) {
  if (bases.empty() || samples.empty()) throw std::invalid_argument("decay check needs bases and samples");
  const AbelianVariety& A = bases.front().variety();
  const int n = A.dim();
  const RealMatrix GB = A.base_metric(1.0);

  struct Obs {
    double ratio;  // |s|^2 / k^{n/2}
    double kd2;    // k d^2
  };
  auto observe = [&](const SectionBasis& basis) {
    const double k = basis.level();
    std::vector<std::vector<Obs>> per_sample = parallel_map<std::vector<Obs>>(samples.size(), [&](std::size_t s) {
      const AbelianPoint& p = samples[s];
      const ComplexVector v = evaluate_sections(basis, to_complex(A, p)).values;
      std::vector<Obs> obs;
      obs.reserve(basis.size());
      for (int i = 0; i < basis.size(); ++i) {
        const double d = torus_distance(GB, p.y - basis.characteristics()[i]);
        obs.push_back({basis.norm_factor() * std::norm(v(i)) / std::pow(k, n / 2.0), k * d * d});
      }
      return obs;
    });
    std::vector<Obs> flat;
    for (auto& o : per_sample) flat.insert(flat.end(), o.begin(), o.end());
    return flat;
  };

  DecayFit fit;
  const std::vector<Obs> first = observe(bases.front());
  const double k0 = bases.front().level();
  // log ratio = log C0 - c k d^2 over the peak region d <= 1/4.
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  int m = 0;
  for (const auto& o : first) {
    if (o.ratio <= 0.0 || o.kd2 > k0 * 0.0625) continue;
    const double x = o.kd2, y = std::log(o.ratio);
    sx += x; sy += y; sxx += x * x; sxy += x * y;
    ++m;
  }
  const double denom = m * sxx - sx * sx;
  if (m < 2 || denom <= 0.0) throw std::invalid_argument("decay fit needs samples away from the peaks");
  fit.c = -(m * sxy - sx * sy) / denom;
  for (const auto& o : first) fit.C = std::max(fit.C, o.ratio * std::exp(fit.c * o.kd2));

  for (std::size_t b = 0; b < bases.size(); ++b) {
    const std::vector<Obs> obs = b == 0 ? first : observe(bases[b]);
    int violations = 0;
    double worst = 0.0;
    for (const auto& o : obs) {
      const double bound = fit.C * std::exp(-fit.c * o.kd2);
      worst = std::max(worst, o.ratio / bound);
      if (o.ratio > bound * (1.0 + 1e-9)) ++violations;
    }
    fit.levels.push_back(bases[b].level());
    fit.violations.push_back(violations);
    fit.worst_ratio.push_back(worst);
  }
  return fit;
}

}  // namespace theta_lab
