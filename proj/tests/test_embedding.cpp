#include <doctest.h>

#include <cmath>
#include <set>
#include <sstream>

#include "support.hpp"
#include "theta_lab/embedding.hpp"
#include "theta_lab/errors.hpp"

using namespace theta_lab;
using namespace theta_lab::testing;

namespace {

RealVector vec(std::initializer_list<double> v) {
  RealVector out(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double x : v) out(i++) = x;
  return out;
}

RealVector random_simplex(std::mt19937_64& rng, int dim) {
  RealVector v = random_real(rng, dim);
  for (int i = 0; i < dim; ++i)
    if (rng() % 4 == 0) v(i) = 0.0;
  if (v.sum() == 0.0) v(0) = 1.0;
  return v / v.sum();
}

}  // namespace

TEST_CASE("family names") {
  CHECK(parse_family("abelian") == Family::abelian);
  CHECK(parse_family(to_string(Family::kummer)) == Family::kummer);
  CHECK_THROWS(parse_family("toric"));
}

TEST_CASE("moment map identities") {
  ComplexVector v(3);
  v << 1.0, 0.0, 0.0;
  CHECK(moment_map_of(v).xi == vec({1.0, 0.0, 0.0}));
  v << Complex(0, 2), 2.0, -2.0;
  for (int i = 0; i < 3; ++i) CHECK(moment_map_of(v).xi(i) == doctest::Approx(1.0 / 3.0).epsilon(1e-15));
  ComplexVector w(2);
  w << 1.0, 2.0;
  const RealVector xi = moment_map_of(w).xi;
  CHECK(xi(0) == doctest::Approx(0.2).epsilon(1e-15));
  CHECK(xi(1) == doctest::Approx(0.8).epsilon(1e-15));
  CHECK_THROWS_AS(moment_map_of(ComplexVector::Zero(2)), BasePointError);
}

TEST_CASE("projective normalisation") {
  std::mt19937_64 rng(31);
  for (int t = 0; t < 30; ++t) {
    ComplexVector v(4);
    for (int i = 0; i < 4; ++i) v(i) = Complex(random_real(rng, 1, -1, 1)(0), random_real(rng, 1, -1, 1)(0)) * 1e-150;
    const ProjectivePoint P = projective_from_values(v);
    CHECK(P.coords.norm() == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(P.coords(0).imag() == 0.0);
    CHECK(P.coords(0).real() > 0.0);
    CHECK(projective_angle(P, projective_from_values(v * Complex(0.3, -2.0))) <= 1e-7);
    CHECK(moment_map(P).xi.sum() == doctest::Approx(1.0).epsilon(1e-12));
  }
  CHECK_THROWS_AS(projective_from_values(ComplexVector::Constant(3, 1e-250)), BasePointError);
}

TEST_CASE("simplex distance") {
  CHECK(simplex_distance(1, vec({1, 0}), vec({0, 1})) == doctest::Approx(std::sqrt(kPi) / 2.0).epsilon(1e-15));
  CHECK(simplex_distance(1, vec({1, 0}), vec({0, 1})) == doctest::Approx(0.8862).epsilon(1e-4));
  CHECK(simplex_distance(3, vec({0.2, 0.8}), vec({0.2, 0.8})) == 0.0);
  std::mt19937_64 rng(32);
  for (int t = 0; t < 200; ++t) {
    const int k = 1 + t % 7;
    const RealVector a = random_simplex(rng, 5), b = random_simplex(rng, 5), c = random_simplex(rng, 5);
    const double ab = simplex_distance(k, a, b);
    CHECK(ab == simplex_distance(k, b, a));
    CHECK(ab >= 0.0);
    CHECK(ab <= 0.5 * kPi / std::sqrt(kPi * k) + 1e-15);
    CHECK(simplex_distance(k, a, c) <= ab + simplex_distance(k, b, c) + 1e-10);
    // Agrees with the arccos form away from coincident points.
    const double arc = std::acos(std::clamp(a.cwiseProduct(b).cwiseSqrt().sum(), -1.0, 1.0)) / std::sqrt(kPi * k);
    CHECK(ab == doctest::Approx(arc).epsilon(1e-7));
  }
}

TEST_CASE("embedding is well defined and even where it should be") {
  std::mt19937_64 rng(33);
  for (int t = 0; t < 8; ++t) {
    const int n = 1 + t % 2;
    const ComplexMatrix O = random_period(rng, n);
    const AbelianVariety A(validate_period_matrix(O));
    const Family fam = t % 4 < 2 ? Family::abelian : Family::kummer;
    const Embedding e = Embedding::make(A, fam, 2 + t % 2);
    const ComplexVector z = to_complex(A, {random_real(rng, n), random_real(rng, n)});
    IntVector m(n);
    for (int i = 0; i < n; ++i) m(i) = static_cast<int>(rng() % 3) - 1;
    const ComplexVector lambda = O * m.cast<double>().cast<Complex>() + ComplexVector::Ones(n);
    CHECK(projective_angle(embed(e, z), embed(e, z + lambda)) <= 1e-8);
    if (fam == Family::kummer) CHECK(projective_angle(embed(e, z), embed(e, -z)) <= 1e-8);
  }
}

TEST_CASE("level two abelian embedding separates Kummer classes") {
  const AbelianVariety A(period_i(1));
  const Embedding e = Embedding::make(A, Family::abelian, 2);
  const TorusGrid grid(1, 64);
  std::set<std::pair<double, double>> seen;
  std::vector<ProjectivePoint> pts;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const KummerPoint c = canonical_rep({grid.x(i), grid.y(i)});
    if (!seen.insert({c.rep.x(0), c.rep.y(0)}).second) continue;
    pts.push_back(embed(e, to_complex(A, c.rep)));
  }
  CHECK(pts.size() == 64 * 64 / 2 + 2);
  double closest = 1.0;
  for (std::size_t i = 0; i < pts.size(); ++i)
    for (std::size_t j = i + 1; j < pts.size(); ++j) closest = std::min(closest, projective_angle(pts[i], pts[j]));
  CHECK(closest > 1e-6);
}

TEST_CASE("amoeba samples") {
  const AbelianVariety A(period_i(1));
  const Embedding e = Embedding::make(A, Family::abelian, 2);
  const AmoebaCloud cloud = amoeba_sample(e, 16);
  CHECK(cloud.images.size() == 256);
  for (const auto& s : cloud.images) {
    CHECK(s.xi.size() == 2);
    CHECK(s.xi.minCoeff() >= 0.0);
    CHECK(s.xi.sum() == doctest::Approx(1.0).epsilon(1e-12));
  }
  // z and -z land on the same image.
  for (int t = 0; t < 10; ++t) {
    const AbelianPoint p = cloud.sources[t * 17];
    const SimplexPoint a = moment_map(embed(e, to_complex(A, p)));
    const SimplexPoint b = moment_map(embed(e, -to_complex(A, p)));
    CHECK((a.xi - b.xi).norm() <= 1e-12);
  }
  // Half-period translation in x permutes the coordinates' moduli.
  AmoebaCloud shifted = cloud;
  for (std::size_t i = 0; i < shifted.sources.size(); ++i) {
    AbelianPoint p = cloud.sources[i];
    p.x(0) += 0.5;
    shifted.images[i] = moment_map(embed(e, to_complex(A, p)));
  }
  CHECK(hausdorff_distance(cloud, shifted) <= 1e-6);

  const Embedding ek = Embedding::make(A, Family::kummer, 1);
  const AmoebaCloud kc = amoeba_sample(ek, 16);
  CHECK(kc.images.size() == 16 * 16 / 2 + 2);
  CHECK(kc.images.front().xi.size() == 2);
}

TEST_CASE("hausdorff distance") {
  const SimplexPoint e0{vec({1, 0})}, e1{vec({0, 1})};
  CHECK(hausdorff_distance(1, {e0, e1}, {e0, e1}) == 0.0);
  CHECK(hausdorff_distance(1, {e0}, {e0, e1}) == doctest::Approx(0.8862).epsilon(1e-4));
  CHECK(directed_hausdorff(1, {e0}, {e0, e1}) == 0.0);
  std::mt19937_64 rng(34);
  for (int t = 0; t < 20; ++t) {
    std::vector<SimplexPoint> a, b;
    for (int i = 0; i < 6; ++i) a.push_back({random_simplex(rng, 3)});
    for (int i = 0; i < 4; ++i) b.push_back({random_simplex(rng, 3)});
    std::vector<SimplexPoint> ab = a;
    ab.insert(ab.end(), b.begin(), b.end());
    CHECK(hausdorff_distance(2, a, ab) <= hausdorff_distance(2, a, b) + 1e-15);
  }
}

TEST_CASE("amoeba csv round trip is exact") {
  const Embedding e = Embedding::make(AbelianVariety(period_i(2)), Family::kummer, 1);
  const AmoebaCloud cloud = amoeba_sample(e, 8);
  std::stringstream ss;
  write_amoeba_csv(ss, cloud);
  const AmoebaCloud back = read_amoeba_csv(ss);
  CHECK(back.k == cloud.k);
  CHECK(back.n == cloud.n);
  REQUIRE(back.images.size() == cloud.images.size());
  for (std::size_t i = 0; i < cloud.images.size(); ++i) {
    CHECK(back.images[i].xi == cloud.images[i].xi);
    CHECK(back.sources[i].x == cloud.sources[i].x);
    CHECK(back.sources[i].y == cloud.sources[i].y);
  }
}
