#include <doctest.h>

#include <cmath>

#include "support.hpp"
#include "theta_lab/errors.hpp"
#include "theta_lab/kummer.hpp"

using namespace theta_lab;
using namespace theta_lab::testing;

namespace {

RealVector vec(std::initializer_list<double> v) {
  RealVector out(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double x : v) out(i++) = x;
  return out;
}

KummerVariety square_kummer(int n = 1, double tau = 1.0) { return KummerVariety(AbelianVariety(period_i(n, tau))); }

}  // namespace

TEST_CASE("canonical representatives") {
  const KummerPoint a = canonical_rep({vec({0.7}), vec({0.2})});
  CHECK(a.rep.x(0) == doctest::Approx(0.3));
  CHECK(a.rep.y(0) == doctest::Approx(0.8));
  const KummerPoint b = canonical_rep({vec({0.3}), vec({0.8})});
  CHECK(b.rep.x(0) == doctest::Approx(a.rep.x(0)).epsilon(1e-15));
  const KummerPoint fixed = canonical_rep({vec({0.5}), vec({0.0})});
  CHECK(fixed.rep.x(0) == 0.5);
  CHECK(fixed.rep.y(0) == 0.0);
  CHECK(base_rep(vec({0.9})).y_rep(0) == doctest::Approx(0.1));
  CHECK(base_rep(vec({0.25, 0.9})).y_rep(1) == doctest::Approx(0.9));

  std::mt19937_64 rng(21);
  for (int t = 0; t < 50; ++t) {
    const AbelianPoint p{random_real(rng, 2, -3, 3), random_real(rng, 2, -3, 3)};
    const KummerPoint c1 = canonical_rep(p);
    const KummerPoint c2 = canonical_rep({-p.x, -p.y});
    CHECK((c1.rep.x - c2.rep.x).norm() <= 1e-12);
    CHECK((c1.rep.y - c2.rep.y).norm() <= 1e-12);
  }
}

TEST_CASE("singular points") {
  const KummerVariety K = square_kummer(2);
  CHECK(K.singular_points().size() == 16);
  for (const auto& e : K.singular_points()) CHECK(singular_distance(K, canonical_rep(e)) == 0.0);
  CHECK(square_kummer(1).singular_points().size() == 4);
}

TEST_CASE("base and quotient distances") {
  // omega = 2 omega_0, so the base metric is 2 for Omega = i and 1 for Omega = 2i.
  CHECK(square_kummer().base_metric()(0, 0) == doctest::Approx(2.0));
  CHECK(square_kummer(1, 2.0).base_metric()(0, 0) == doctest::Approx(1.0));
  const KummerVariety K = square_kummer();
  CHECK(base_distance(K, base_rep(vec({0.0})), base_rep(vec({0.5}))) == doctest::Approx(std::sqrt(0.5)));
  // 0.2 and 0.8 are identified by -1.
  CHECK(base_distance(K, base_rep(vec({0.2})), base_rep(vec({0.8}))) == doctest::Approx(0.0).epsilon(1e-12));
  const KummerPoint p = canonical_rep({vec({0.0}), vec({0.0})});
  const KummerPoint q = canonical_rep({vec({0.5}), vec({0.0})});
  CHECK(quotient_distance(K, p, q) == doctest::Approx(std::sqrt(0.5)));

  std::mt19937_64 rng(22);
  for (int t = 0; t < 40; ++t) {
    const KummerPoint a = canonical_rep({random_real(rng, 1), random_real(rng, 1)});
    const KummerPoint b = canonical_rep({random_real(rng, 1), random_real(rng, 1)});
    const KummerPoint c = canonical_rep({random_real(rng, 1), random_real(rng, 1)});
    CHECK(quotient_distance(K, a, c) <= quotient_distance(K, a, b) + quotient_distance(K, b, c) + 1e-12);
    // The fibration is 1-Lipschitz for the submersion metric.
    CHECK(base_distance(K, fibration(a), fibration(b)) <= quotient_distance(K, a, b) + 1e-12);
  }
}

TEST_CASE("invariant basis size and structure") {
  for (int n : {1, 2})
    for (int k = 1; k <= 4; ++k) {
      const InvariantBasis basis(AbelianVariety(period_i(n)), k);
      CHECK(basis.size() == invariant_count(n, k));
      int fixed = 0;
      for (const auto& e : basis.entries()) fixed += e.kind == InvariantEntry::Kind::fixed;
      CHECK(fixed == (1 << n));
    }
  CHECK(invariant_count(1, 3) == 4);
  CHECK(invariant_count(2, 3) == 20);
}

TEST_CASE("invariant sections are even and periodic") {
  std::mt19937_64 rng(23);
  for (int t = 0; t < 6; ++t) {
    const int n = 1 + t % 2;
    const ComplexMatrix O = random_period(rng, n);
    const InvariantBasis basis(AbelianVariety(validate_period_matrix(O)), 1 + t % 3);
    const ComplexVector z = to_complex(basis.inner().variety(), {random_real(rng, n), random_real(rng, n)});
    const ComplexVector shift = O * ComplexVector::Ones(n) + ComplexVector::Ones(n);
    for (int i = 0; i < basis.size(); ++i) {
      const double h = invariant_h_norm(basis, i, z);
      CHECK(invariant_h_norm(basis, i, -z) == doctest::Approx(h).epsilon(1e-10));
      CHECK(invariant_h_norm(basis, i, z + shift) == doctest::Approx(h).epsilon(1e-9));
    }
    CHECK(kummer_bergman_density(basis, -z) == doctest::Approx(kummer_bergman_density(basis, z)).epsilon(1e-10));
  }
}

TEST_CASE("kummer gram is the identity") {
  for (int k = 1; k <= 3; ++k) {
    const InvariantBasis basis(AbelianVariety(period_i(1)), k);
    const ComplexMatrix G = kummer_gram_matrix(basis, 64);
    CHECK((G - ComplexMatrix::Identity(basis.size(), basis.size())).cwiseAbs().maxCoeff() <= 1e-8);
  }
}
