#include "compopt/convex_program.hpp"

#include <doctest.h>

using namespace compopt;

TEST_CASE("unconstrained quadratic is solved in closed form") {
  ConvexProgram p(2);
  p.P << 2, 0, 0, 4;
  p.q << -2, -4;
  auto s = solve(p);
  CHECK(s.converged);
  CHECK(s.w(0) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(s.w(1) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("box-constrained QP recovers exact multipliers") {
  // min 0.5|w - (3, -1)|^2 s.t. w <= 1, -w <= 0
  ConvexProgram p(2);
  p.P = Mat::Identity(2, 2);
  p.q << -3, 1;
  for (int i = 0; i < 2; ++i) {
    p.add_linear_inequality(Vec::Unit(2, i), 1.0);
    p.add_linear_inequality(-Vec::Unit(2, i), 0.0);
  }
  auto s = solve(p);
  CHECK(s.converged);
  CHECK(s.polished);
  CHECK(std::abs(s.w(0) - 1.0) < 1e-14);
  CHECK(std::abs(s.w(1)) < 1e-14);
  CHECK(s.lambda(0) == doctest::Approx(2.0));
  CHECK(s.lambda(3) == doctest::Approx(1.0));
  CHECK(s.kkt_residual < 1e-12);
}

TEST_CASE("epigraph LP-like problem with zero curvature in one variable") {
  // min 0.5 d^2 + r  s.t. r >= d - 1, r >= -d - 1  => d = 0, r = -1
  ConvexProgram p(2);
  p.P(0, 0) = 1.0;
  p.q << 0, 1;
  Vec a(2), b(2);
  a << 1, -1;
  b << -1, -1;
  p.add_linear_inequality(a, 1.0);
  p.add_linear_inequality(b, 1.0);
  auto s = solve(p);
  CHECK(s.converged);
  CHECK(std::abs(s.w(0)) < 1e-12);
  CHECK(s.w(1) == doctest::Approx(-1.0));
  CHECK(s.lambda.head(2).sum() == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("quadratic constraint keeps the iterate on the ball") {
  // min -w0 s.t. |w|^2 <= 4  => w = (2, 0)
  ConvexProgram p(2);
  p.q << -1, 0;
  Quadratic g{2.0 * Mat::Identity(2, 2), Vec::Zero(2), -4.0};
  p.add_quadratic_constraint(g);
  auto s = solve(p);
  CHECK(s.converged);
  CHECK(s.w(0) == doctest::Approx(2.0).epsilon(1e-9));
  CHECK(std::abs(s.w(1)) < 1e-9);
}

TEST_CASE("equality constraints") {
  ConvexProgram p(2);
  p.P = Mat::Identity(2, 2);
  p.add_equality(Vec::Ones(2), 1.0);
  auto s = solve(p);
  CHECK(s.converged);
  CHECK(s.w(0) == doctest::Approx(0.5));
  CHECK(s.w(1) == doctest::Approx(0.5));
}

TEST_CASE("KKT residual is recomputed from data") {
  ConvexProgram p(1);
  p.P(0, 0) = 1.0;
  p.add_linear_inequality(Vec::Ones(1), -1.0);
  Vec w = Vec::Constant(1, -1.0), l = Vec::Constant(1, 1.0);
  CHECK(kkt_residual(p, w, l, Vec(0)) < 1e-15);
  CHECK(kkt_residual(p, Vec::Constant(1, 0.0), l, Vec(0)) == doctest::Approx(1.0));
}
