#include "compopt/outer_function.hpp"

#include <doctest.h>

#include <random>

using namespace compopt;

namespace {

Vec random_vec(std::mt19937_64 &rng, Eigen::Index n, double scale) {
  std::uniform_real_distribution<double> U(-scale, scale);
  Vec x(n);
  for (Eigen::Index i = 0; i < n; ++i) x(i) = U(rng);
  return x;
}

// Subgradient inequality h(w) >= h(z) + <g, w - z> at random pairs.
void check_subgradients(const OuterFunction &h, unsigned long seed) {
  std::mt19937_64 rng(seed);
  for (int s = 0; s < 200; ++s) {
    const Vec z = random_vec(rng, h.dim(), 3.0);
    const Vec w = random_vec(rng, h.dim(), 3.0);
    const double hz = h.value(z);
    if (!std::isfinite(hz)) continue;
    const Vec g = h.subgradient(z);
    CHECK(h.value(w) >= hz + g.dot(w - z) - 1e-10 * (1.0 + std::abs(hz)));
    CHECK(h.subdiff_distance(z, g).distance <= 1e-9);
  }
}

// Capped-simplex support by enumerating vertices: every vertex has all but
// at most one coordinate at a bound.
double support_by_vertices(const Vec &v, const Vec &caps) {
  const auto s = v.size();
  double best = -kInf;
  const long total = 1L << s;
  for (long mask = 0; mask < total; ++mask) {
    for (Eigen::Index free = 0; free < s; ++free) {
      Vec pi(s);
      double sum = 0.0;
      for (Eigen::Index i = 0; i < s; ++i) {
        if (i == free) continue;
        pi(i) = (mask >> i) & 1 ? caps(i) : 0.0;
        sum += pi(i);
      }
      pi(free) = 1.0 - sum;
      if (pi(free) < -1e-12 || pi(free) > caps(free) + 1e-12) continue;
      best = std::max(best, pi.dot(v));
    }
  }
  return best;
}

} // namespace

TEST_CASE("separable piecewise linear values and subdifferentials") {
  const auto h = make_separable_pwl((Vec(2) << 0.5, 0).finished(), (Vec(2) << 0, 2).finished());
  const Vec z = (Vec(2) << -1, 3).finished();
  CHECK(h->value(z) == doctest::Approx(-0.5 + 6));
  // At the kink of the second coordinate the subdifferential is [0, 2].
  const Vec k = (Vec(2) << 1, 0).finished();
  CHECK(h->subdiff_distance(k, (Vec(2) << 0.5, 1.5).finished()).distance < 1e-15);
  CHECK(h->subdiff_distance(k, (Vec(2) << 0.5, 2.5).finished()).distance ==
        doctest::Approx(0.5));
  CHECK(h->monotone());
  check_subgradients(*h, 1);
}

TEST_CASE("values within rounding of a kink keep the full subdifferential") {
  const auto h = make_separable_pwl(Vec::Zero(1), Vec::Constant(1, 1.0));
  CHECK(h->subdiff_distance(Vec::Constant(1, 1e-16), Vec::Constant(1, 0.5)).distance == 0.0);
  CHECK(h->subdiff_distance(Vec::Constant(1, 1e-6), Vec::Constant(1, 0.5)).distance ==
        doctest::Approx(0.5));
}

TEST_CASE("indicator encoding returns infinity outside its domain") {
  const auto h = make_separable_pwl(Vec::Zero(1), Vec::Constant(1, kInf));
  CHECK(h->value(Vec::Constant(1, -1.0)) == 0.0);
  CHECK(std::isinf(h->value(Vec::Constant(1, 1.0))));
  CHECK_THROWS_AS(h->lipschitz_bound(), ConfigurationError);
  // Normal cone at 0 is [0, inf).
  CHECK(h->subdiff_distance(Vec::Zero(1), Vec::Constant(1, 1e6)).distance == 0.0);
}

TEST_CASE("abs and max variants") {
  const auto a = make_abs(3);
  CHECK(a->value((Vec(3) << 1, -2, 0).finished()) == 3.0);
  CHECK(a->lipschitz_bound() == doctest::Approx(std::sqrt(3.0)));
  CHECK_FALSE(a->monotone());
  check_subgradients(*a, 2);
  const auto mx = make_max(3);
  CHECK(mx->value((Vec(3) << 1, -2, 4).finished()) == 4.0);
  CHECK(mx->monotone());
  check_subgradients(*mx, 3);
}

TEST_CASE("scaled hinge") {
  const auto h = make_scaled_hinge(2.0, (Vec(2) << 1, -1).finished());
  CHECK(h->value((Vec(2) << 3, 1).finished()) == 4.0);
  CHECK(h->value((Vec(2) << 1, 3).finished()) == 0.0);
  check_subgradients(*h, 4);
}

TEST_CASE("capped simplex argmax agrees with vertex enumeration") {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> U(0.05, 1.0);
  for (int s = 2; s <= 6; ++s) {
    for (int rep = 0; rep < 40; ++rep) {
      Vec p(s);
      for (int i = 0; i < s; ++i) p(i) = U(rng);
      p /= p.sum();
      const double alpha = std::uniform_real_distribution<double>(0.0, 0.9)(rng);
      const Vec caps = p / (1.0 - alpha);
      const Vec v = random_vec(rng, s, 2.0);
      const Vec pi = capped_simplex_argmax(v, caps);
      CHECK(std::abs(pi.sum() - 1.0) < 1e-12);
      CHECK(pi.minCoeff() >= -1e-15);
      CHECK(((caps - pi).array() >= -1e-15).all());
      CHECK(std::abs(pi.dot(v) - support_by_vertices(v, caps)) <= 1e-10);
    }
  }
}

TEST_CASE("capped simplex support function") {
  const Vec p = (Vec(3) << 0.2, 0.3, 0.5).finished();
  const auto h = make_capped_simplex_support(p, 0.5, 2);
  // Scenario maxima (1, 3, 2); caps (0.4, 0.6, 1): put 0.6 on 3 and 0.4 on 2.
  const Vec u = (Vec(6) << 1, 0, 3, -1, 2, 2).finished();
  CHECK(h->value(u) == doctest::Approx(0.6 * 3 + 0.4 * 2));
  CHECK(h->monotone());
  check_subgradients(*h, 6);
}

TEST_CASE("simplex projection") {
  std::mt19937_64 rng(9);
  for (int s = 0; s < 100; ++s) {
    const Vec y = random_vec(rng, 5, 3.0);
    const Vec p = project_simplex(y);
    CHECK(std::abs(p.sum() - 1.0) < 1e-12);
    CHECK(p.minCoeff() >= 0.0);
    // Optimality: y - p is a multiple of 1 plus a normal of the orthant.
    const Vec q = project_simplex(random_vec(rng, 5, 3.0));
    CHECK((y - p).dot(q - p) <= 1e-10);
  }
}

TEST_CASE("composition with a nondecreasing outer function") {
  const auto hinge = make_separable_pwl(Vec::Zero(1), Vec::Constant(1, 2.0));
  const auto h = make_composed(hinge, {make_max(2)});
  CHECK(h->value((Vec(2) << -1, 0.5).finished()) == 1.0);
  CHECK(h->value((Vec(2) << -1, -0.5).finished()) == 0.0);
  check_subgradients(*h, 7);
  CHECK(as_composed(*h).has_value());
  CHECK_FALSE(as_composed(*hinge).has_value());
  CHECK_THROWS_AS(make_composed(make_abs(1), {make_max(2)}), ConfigurationError);
}

TEST_CASE("generic variant forwards to the oracles") {
  const auto h = make_generic(
      1, [](const Vec &z) { return z(0) * z(0); }, [](const Vec &z) { return Vec(2 * z); },
      std::nullopt, false);
  CHECK(h->value(Vec::Constant(1, 3.0)) == 9.0);
  CHECK_THROWS_AS(h->lipschitz_bound(), ConfigurationError);
}
