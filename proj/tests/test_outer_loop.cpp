#include "compopt/outer_loop.hpp"
#include "compopt/problems.hpp"

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

} // namespace

TEST_CASE("soft-min lies within eta below the min") {
  const auto groups = buffered_groups();
  std::mt19937_64 rng(21);
  for (double eta : {1.0, 0.1, 0.01}) {
    const auto F = make_lse(groups, eta);
    for (int s = 0; s < 200; ++s) {
      const Vec x = random_vec(rng, 2, 2.0);
      const Vec v = F.value(x);
      for (size_t i = 0; i < groups.size(); ++i) {
        double mn = kInf;
        for (const auto &psi : groups[i].psi) mn = std::min(mn, psi.value(x));
        const auto ii = static_cast<Eigen::Index>(i);
        CHECK(v(ii) <= mn + 1e-12);
        CHECK(v(ii) >= mn - eta - 1e-12);
      }
    }
  }
}

TEST_CASE("soft-min Jacobian passes finite differences") {
  const auto groups = buffered_groups();
  std::mt19937_64 rng(22);
  for (double eta : {1.0, 0.1}) {
    const auto F = make_lse(groups, eta);
    for (int s = 0; s < 20; ++s) CHECK(check_jacobian(F, random_vec(rng, 2, 2.0), 1e-6, 1e-4).passed);
  }
}

TEST_CASE("single-piece groups reproduce the piece") {
  LseGroup g;
  g.psi.push_back(SmoothFunction::from_quadratic(Mat::Identity(1, 1), Vec::Constant(1, 1.0), 0.0));
  const auto F = make_lse({g}, 0.3);
  CHECK(F.value(Vec::Constant(1, 2.0))(0) == doctest::Approx(4.0));
}

TEST_CASE("schedule validation and parameter updates") {
  Schedule s;
  s.length = 0;
  CHECK_THROWS_AS(s.validate(), ConfigurationError);
  s = Schedule{};
  s.tol_factor = 1.5;
  CHECK_THROWS_AS(s.validate(), ConfigurationError);
  s = Schedule{};
  ApproxParams p0;
  const auto p3 = s.params_at(p0, 3);
  CHECK(p3.eta == doctest::Approx(0.125));
  CHECK(p3.theta == doctest::Approx(8.0));
  CHECK(s.tol_at(2) == doctest::Approx(0.0025));
}

TEST_CASE("sine counterexample: near-stationary with diverging multipliers") {
  const auto inst = build_instance("sincounter");
  Schedule s;
  s.length = 21;
  s.theta_factor = 2.0;
  s.divergence_threshold = 1e3;
  s.warm_start = WarmStart::Initial;
  const auto r = run_outer(*inst.family, s, InnerSolver::Bundle, inst.x0);
  REQUIRE(r.rows.size() == 21);
  for (const auto &row : r.rows) {
    CAPTURE(row.nu);
    CHECK(row.near_stationary);
    CHECK(row.y_norm == doctest::Approx(std::pow(2.0, row.nu)).epsilon(1e-9));
    REQUIRE(row.actual_residual.has_value());
    CHECK(row.actual_residual->total >= 0.5);
  }
  CHECK(r.diagnostics.divergent);
  CHECK(r.diagnostics.first_flag >= 0);
  CHECK(r.diagnostics.first_flag <= 20);
}

TEST_CASE("halting on divergence stops the schedule") {
  const auto inst = build_instance("sincounter");
  Schedule s;
  s.length = 21;
  s.divergence_threshold = 1e3;
  s.warm_start = WarmStart::Initial;
  s.halt_on_divergence = true;
  const auto r = run_outer(*inst.family, s, InnerSolver::Bundle, inst.x0);
  CHECK(r.halted_on_divergence);
  CHECK(r.rows.size() < 21);
}

TEST_CASE("exact penalty family recovers the constrained minimizer") {
  // (x - 2)^2 subject to x <= 1: theta >= 2 makes the hinge penalty exact.
  const auto inst = build_instance("hingeconvex");
  Schedule s;
  s.length = 6;
  const auto r = run_outer(*inst.family, s, InnerSolver::Bundle, inst.x0);
  REQUIRE(r.completed);
  CHECK(r.rows.back().x(0) == doctest::Approx(1.0).epsilon(1e-6));
  REQUIRE(r.rows.back().actual_residual.has_value());
  CHECK(r.rows.back().actual_residual->total < 1e-6);
}

TEST_CASE("identity family degenerates to repeated inner runs") {
  ApproximationFamily fam;
  fam.name = "abs1d";
  fam.kind = FamilyKind::Identity;
  fam.generate = [](const ApproxParams &) { return build_instance("abs1d").problem; };
  Schedule s;
  s.length = 4;
  const auto r = run_outer(fam, s, InnerSolver::Bundle, Vec::Constant(1, 3.0));
  REQUIRE(r.rows.size() == 4);
  for (const auto &row : r.rows) CHECK(std::abs(row.x(0)) < 1e-6);
}

TEST_CASE("distance penalty family with the DC inner solver") {
  const auto inst = build_instance("distpen2");
  Schedule s;
  s.length = 5;
  const auto r = run_outer(*inst.family, s, InnerSolver::Dc, inst.x0);
  REQUIRE(r.completed);
  for (const auto &row : r.rows) CHECK(row.approx_residual.total <= row.certified_tol * (1 + 1e-12) + 1e-15);
}
