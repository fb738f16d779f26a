#include "compopt/oracles.hpp"

#include <doctest.h>

#include <random>

using namespace compopt;

namespace {

Vec v2(double a, double b) { return (Vec(2) << a, b).finished(); }

Vec random_vec(std::mt19937_64 &rng, Eigen::Index n, double scale) {
  std::uniform_real_distribution<double> U(-scale, scale);
  Vec x(n);
  for (Eigen::Index i = 0; i < n; ++i) x(i) = U(rng);
  return x;
}

} // namespace

TEST_CASE("box projection clamps and the normal cone follows active faces") {
  const auto X = FeasibleSet::box(v2(-1, 0), v2(1, 2));
  CHECK(X.project(v2(3, -1)).isApprox(v2(1, 0)));
  CHECK(X.contains(v2(0.5, 1.0)));
  CHECK_FALSE(X.contains(v2(1.5, 1.0)));
  // At the corner (1, 0) the cone is {(a, -b) : a, b >= 0}.
  CHECK(X.tangent_residual(v2(1, 0), v2(-2, 3)) < 1e-14);
  CHECK(X.tangent_residual(v2(1, 0), v2(2, 0)) == doctest::Approx(2.0));
  CHECK(X.tangent_residual(v2(0, 1), v2(0.3, -0.4)) == doctest::Approx(0.5));
}

TEST_CASE("ball projection and normal cone") {
  const auto X = FeasibleSet::ball(v2(0, 0), 2.0);
  CHECK(X.project(v2(3, 4)).isApprox(v2(1.2, 1.6)));
  CHECK(X.project(v2(0.1, 0.1)).isApprox(v2(0.1, 0.1)));
  // On the boundary at (2, 0): N = {(a, 0) : a >= 0}.
  CHECK(X.tangent_residual(v2(2, 0), v2(-1, 0)) < 1e-14);
  CHECK(X.tangent_residual(v2(2, 0), v2(-1, 0.5)) == doctest::Approx(0.5));
}

TEST_CASE("halfspace projection satisfies the variational inequality") {
  Mat G(2, 2);
  G << 1, 1, -1, 0;
  const Vec h = v2(1, 0);
  const auto X = FeasibleSet::halfspaces(G, h);
  std::mt19937_64 rng(3);
  for (int s = 0; s < 50; ++s) {
    const Vec x = random_vec(rng, 2, 3.0);
    const Vec p = X.project(x);
    CHECK(X.contains(p));
    for (int j = 0; j < 20; ++j) {
      const Vec q = X.project(random_vec(rng, 2, 3.0));
      CHECK((x - p).dot(q - p) <= 1e-9);
    }
  }
}

TEST_CASE("finite point projection breaks ties lexicographically") {
  Mat P(1, 2);
  P << 1, -1;
  const auto K = FeasibleSet::finite_points(P);
  CHECK(K.project(Vec::Constant(1, 0.0))(0) == -1.0);
  CHECK(K.project(Vec::Constant(1, 0.2))(0) == 1.0);
  CHECK_FALSE(K.is_convex());
}

TEST_CASE("distance-squared DC split matches the direct distance") {
  Mat P(2, 3);
  P << 1, 0, -1, 0, 1, 2;
  const auto K = FeasibleSet::finite_points(P);
  const auto dc = distance_squared_dc(K);
  std::mt19937_64 rng(11);
  for (int s = 0; s < 1000; ++s) {
    const Vec x = random_vec(rng, 2, 5.0);
    double best = kInf;
    for (Eigen::Index j = 0; j < P.cols(); ++j) best = std::min(best, (x - P.col(j)).squaredNorm());
    CHECK(std::abs(dc.value(x) - best) <= 1e-10 * (1.0 + best));
  }
}

TEST_CASE("quadratic gradient passes finite differences and convexity flag") {
  Mat Q(2, 2);
  Q << 2, 1, 1, 3;
  const auto f = SmoothFunction::from_quadratic(Q, v2(1, -1), 0.5);
  CHECK(f.convex);
  CHECK(check_gradient(f, v2(0.3, -0.7)).passed);
  CHECK(f.value(v2(1, 0)) == doctest::Approx(0.5 * 2 + 1 + 0.5));
}

TEST_CASE("jacobian check flags a wrong derivative") {
  VectorMapping F;
  F.n = 1;
  F.m = 1;
  F.value = [](const Vec &x) { return Vec::Constant(1, std::sin(x(0))); };
  F.jacobian = [](const Vec &x) { return Mat::Constant(1, 1, std::cos(x(0))); };
  CHECK(check_jacobian(F, Vec::Constant(1, 0.4)).passed);
  F.jacobian = [](const Vec &x) { return Mat::Constant(1, 1, 2 * std::cos(x(0))); };
  CHECK_FALSE(check_jacobian(F, Vec::Constant(1, 0.4)).passed);
}

TEST_CASE("mapping Lipschitz constant needs every component") {
  VectorMapping F;
  F.m = 2;
  F.component_L = {3.0, 4.0};
  CHECK(mapping_lipschitz(F) == doctest::Approx(5.0));
  F.component_L = {3.0, std::nullopt};
  CHECK_THROWS_AS(mapping_lipschitz(F), ConfigurationError);
}

TEST_CASE("polyhedral convex part evaluates the max of its rows") {
  Mat R(2, 1);
  R << 1, -1;
  const auto f = ConvexPart::polyhedral(R, v2(0, 0));
  CHECK(f.value(Vec::Constant(1, -2.0)) == 2.0);
  CHECK(f.subgradient(Vec::Constant(1, 3.0))(0) == 1.0);
  CHECK(f.subgradient(Vec::Constant(1, -3.0))(0) == -1.0);
}

TEST_CASE("dimension mismatches raise InvalidInput") {
  const auto X = FeasibleSet::box(v2(0, 0), v2(1, 1));
  CHECK_THROWS_AS(X.project(Vec::Zero(3)), InvalidInput);
  CHECK_THROWS_AS(FeasibleSet::box(v2(1, 0), v2(0, 1)), InvalidInput);
}
