#include <doctest.h>

#include <cmath>

#include "support.hpp"
#include "theta_lab/abelian.hpp"
#include "theta_lab/errors.hpp"

using namespace theta_lab;
using namespace theta_lab::testing;

namespace {

// Box sum of S_b = sum_l e(l^t Omega l / 2k + l^t (z - b)), n = 1 or 2.
Complex brute_section_sum(const ComplexMatrix& O, int k, const RealVector& b, const ComplexVector& z, int box) {
  const int n = static_cast<int>(O.rows());
  Complex acc = 0.0;
  IntVector l = IntVector::Constant(n, -box);
  const ComplexVector w = z - b.cast<Complex>();
  for (;;) {
    const ComplexVector lc = l.cast<double>().cast<Complex>();
    const Complex q = (lc.transpose() * O * lc)(0, 0) / (2.0 * k) + (lc.transpose() * w)(0, 0);
    acc += std::exp(2.0 * kPi * kI * q);
    int i = n - 1;
    while (i >= 0 && l(i) == box) l(i--) = -box;
    if (i < 0) break;
    ++l(i);
  }
  return acc;
}

AbelianVariety square(int n = 1) { return AbelianVariety(period_i(n)); }

}  // namespace

TEST_CASE("complex coordinates round trip") {
  std::mt19937_64 rng(1);
  const AbelianVariety A(validate_period_matrix(random_period(rng, 2)));
  for (int t = 0; t < 50; ++t) {
    const AbelianPoint p{random_real(rng, 2), random_real(rng, 2)};
    const AbelianPoint q = from_complex(A, to_complex(A, p));
    CHECK((q.x - p.x).norm() <= 1e-13);
    CHECK((q.y - p.y).norm() <= 1e-13);
  }
  const AbelianPoint p{RealVector::Constant(1, 0.25), RealVector::Constant(1, 0.5)};
  CHECK(std::abs(to_complex(square(), p)(0) - Complex(0.5, 0.25)) == 0.0);
}

TEST_CASE("flat metric and distance") {
  const AbelianVariety A = square();
  CHECK((A.flat_metric() - RealMatrix::Identity(2, 2)).norm() <= 1e-15);
  CHECK(A.base_metric()(0, 0) == doctest::Approx(1.0));
  CHECK(A.base_metric(2.0)(0, 0) == doctest::Approx(2.0));
  const AbelianVariety A2(period_i(1, 2.0));
  // h = 1/2: fibre direction Omega dx has length 2 dx * sqrt(1/2).
  CHECK(A2.flat_metric()(0, 0) == doctest::Approx(2.0));
  CHECK(A2.base_metric()(0, 0) == doctest::Approx(0.5));

  const AbelianPoint o{RealVector::Zero(1), RealVector::Zero(1)};
  const AbelianPoint p{RealVector::Constant(1, 0.3), RealVector::Constant(1, 0.4)};
  const AbelianPoint far{RealVector::Constant(1, 0.9), RealVector::Constant(1, 0.9)};
  CHECK(flat_distance(A, o, p) == doctest::Approx(0.5));
  CHECK(flat_distance(A, o, far) == doctest::Approx(std::sqrt(0.02)));

  std::mt19937_64 rng(2);
  const AbelianVariety B(validate_period_matrix(random_period(rng, 2)));
  for (int t = 0; t < 30; ++t) {
    const AbelianPoint a{random_real(rng, 2), random_real(rng, 2)};
    const AbelianPoint b{random_real(rng, 2), random_real(rng, 2)};
    const AbelianPoint c{random_real(rng, 2), random_real(rng, 2)};
    CHECK(flat_distance(B, a, b) == doctest::Approx(flat_distance(B, b, a)).epsilon(1e-12));
    CHECK(flat_distance(B, a, c) <= flat_distance(B, a, b) + flat_distance(B, b, c) + 1e-12);
  }
}

TEST_CASE("section values agree with a direct lattice sum") {
  std::mt19937_64 rng(4);
  for (int t = 0; t < 12; ++t) {
    const int n = 1 + t % 2;
    const int k = 1 + t % 3;
    const ComplexMatrix O = random_period(rng, n);
    const SectionBasis basis(AbelianVariety(validate_period_matrix(O)), k);
    const RealMatrix H = O.imag().inverse();
    ComplexVector z(n);
    for (int i = 0; i < n; ++i) z(i) = Complex(random_real(rng, 1)(0), random_real(rng, 1, -0.4, 0.4)(0));
    const double cw = std::pow(2.0, n / 4.0) * std::pow(O.imag().determinant(), 0.25);
    for (int idx = 0; idx < basis.size(); ++idx) {
      const Complex S = brute_section_sum(O, k, basis.characteristics()[idx], z, n == 1 ? 40 : 16);
      const Complex raw = cw * std::pow(double(k), -n / 4.0) *
                          std::exp(0.5 * kPi * k * (z.transpose() * H.cast<Complex>() * z)(0, 0)) * S;
      const double v = z.imag().dot(H * z.imag());
      const double hn = cw * std::pow(double(k), -n / 4.0) * std::abs(S) * std::exp(-kPi * k * v);
      const HermitianSectionValue s = section_value(basis, idx, z);
      CHECK(std::abs(s.raw - raw) <= 1e-11 * std::max(1.0, std::abs(raw)));
      CHECK(s.h_norm == doctest::Approx(hn).epsilon(1e-11));
    }
  }
}

TEST_CASE("pointwise norms are lattice periodic and shift between characteristics") {
  std::mt19937_64 rng(6);
  for (int t = 0; t < 10; ++t) {
    const int n = 1 + t % 2;
    const int k = 2 + t % 3;
    const ComplexMatrix O = random_period(rng, n);
    const SectionBasis basis(AbelianVariety(validate_period_matrix(O)), k);
    const ComplexVector z = to_complex(basis.variety(), {random_real(rng, n), random_real(rng, n)});
    IntVector m(n), mp(n);
    for (int i = 0; i < n; ++i) {
      m(i) = static_cast<int>(rng() % 3) - 1;
      mp(i) = static_cast<int>(rng() % 3) - 1;
    }
    const ComplexVector zt = z + O * m.cast<double>().cast<Complex>() + mp.cast<double>().cast<Complex>();
    IntVector j = IntVector::Zero(n);
    j(0) = 1;
    const ComplexVector zs = z + (j.cast<double>() / k).cast<Complex>();
    for (int idx = 0; idx < basis.size(); ++idx) {
      const double h0 = section_value(basis, idx, z).h_norm;
      CHECK(section_value(basis, idx, zt).h_norm == doctest::Approx(h0).epsilon(1e-9));
      // Shifting z by j/k moves b to b - j/k.
      IntVector target = basis.torsion_index()[idx] - j;
      for (int i = 0; i < n; ++i) target(i) = ((target(i) % k) + k) % k;
      int other = 0;
      while (basis.torsion_index()[other] != target) ++other;
      CHECK(section_value(basis, idx, zs).h_norm == doctest::Approx(section_value(basis, other, z).h_norm).epsilon(1e-10));
    }
  }
}

TEST_CASE("gram matrix is the identity") {
  for (int k : {1, 2, 3}) {
    const SectionBasis basis(square(), k);
    const ComplexMatrix G = gram_matrix(basis, 64);
    CHECK((G - ComplexMatrix::Identity(k, k)).cwiseAbs().maxCoeff() <= 1e-8);
    CHECK((G - G.adjoint()).cwiseAbs().maxCoeff() == 0.0);
  }
  std::mt19937_64 rng(8);
  const SectionBasis skew(AbelianVariety(validate_period_matrix(random_period(rng, 1))), 3);
  CHECK((gram_matrix(skew, 64) - ComplexMatrix::Identity(3, 3)).cwiseAbs().maxCoeff() <= 1e-6);
  CHECK_THROWS_AS(gram_matrix(skew, 4), std::invalid_argument);
}

TEST_CASE("gram check rejects a grid that aliases the sections") {
  // Level 32 on Omega = 2i is badly undersampled at 8 points per side.
  const SectionBasis basis(AbelianVariety(period_i(1, 2.0)), 32);
  CHECK_THROWS_AS(gram_matrix(basis, 8), GridTooCoarse);
  CHECK_NOTHROW(gram_matrix(basis, 8, GridCheck::ignore));
}

TEST_CASE("bergman density integrates to the dimension and flattens") {
  double prev = 1e9;
  for (int k : {2, 4, 8}) {
    const SectionBasis basis(square(), k);
    const TorusGrid grid(1, 64);
    double mean = 0.0, dev = 0.0;
    for (std::size_t i = 0; i < grid.size(); ++i) {
      const double r = bergman_density(basis, to_complex(basis.variety(), {grid.x(i), grid.y(i)})) / k;
      mean += r / grid.size();
      dev = std::max(dev, std::abs(r - 1.0));
    }
    CHECK(mean == doctest::Approx(1.0).epsilon(1e-6));
    CHECK(dev < prev);
    prev = dev;
  }
  CHECK(prev <= 0.05);
}

TEST_CASE("residual matches the dual Poisson sum") {
  for (int k : {1, 2, 3}) {
    for (const Complex omega : {Complex(0, 1), Complex(0.3, 1.2)}) {
      ComplexMatrix O(1, 1);
      O(0, 0) = omega;
      const SectionBasis basis(AbelianVariety(validate_period_matrix(O)), k);
      for (int idx = 0; idx < basis.size(); ++idx) {
        for (const Complex dz : {Complex(0, 0), Complex(0.07, -0.05), Complex(-0.11, 0.02)}) {
          const double b = basis.characteristics()[idx](0);
          ComplexVector z(1);
          z(0) = b + dz;
          // 1 + phi = sum_m e(-(k/2)((w - m)^2 - w^2) / Omega) with w = z - b.
          const Complex w = dz;
          Complex dual = 0.0;
          for (int m = -30; m <= 30; ++m) dual += unit_phase(-0.5 * k * ((w - double(m)) * (w - double(m)) - w * w) / omega);
          const Complex phi = asymptotic_residual(basis, idx, z);
          CHECK(std::abs(phi - (dual - 1.0)) <= 1e-12);
          // b only matters mod 1.
          ComplexVector z1 = z;
          z1(0) += 1.0;
          CHECK(std::abs(asymptotic_residual(basis, idx, z1) - phi) <= 1e-12);
        }
      }
    }
  }
}

TEST_CASE("residual shrinks with the level") {
  const ComplexVector z0 = ComplexVector::Zero(1);
  const double p4 = std::abs(asymptotic_residual(SectionBasis(square(), 4), 0, z0));
  const double p8 = std::abs(asymptotic_residual(SectionBasis(square(), 8), 0, z0));
  CHECK(p4 == doctest::Approx(2.0 * std::exp(-4.0 * kPi)).epsilon(1e-3));
  CHECK(p8 < p4);
}

TEST_CASE("gaussian decay fit") {
  std::vector<SectionBasis> bases;
  for (int k : {4, 8}) bases.emplace_back(square(), k);
  const TorusGrid grid(1, 32);
  std::vector<AbelianPoint> pts;
  for (std::size_t i = 0; i < grid.size(); ++i) pts.push_back({grid.x(i), grid.y(i)});
  const DecayFit fit = gaussian_decay_check(bases, pts);
  CHECK(fit.c == doctest::Approx(2.0 * kPi).epsilon(0.02));
  CHECK(fit.C > 0.0);
  CHECK(fit.violations == std::vector<int>{0, 0});
  for (double w : fit.worst_ratio) CHECK(w <= 1.0 + 1e-9);
}
