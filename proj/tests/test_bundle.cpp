#include "compopt/bundle.hpp"
#include "compopt/problems.hpp"

#include <doctest.h>

using namespace compopt;

TEST_CASE("configuration errors name the field") {
  BundleConfig c;
  c.kappa = 1.5;
  CHECK_THROWS_WITH_AS(c.validate(), doctest::Contains("kappa"), ConfigurationError);
  c = BundleConfig{};
  c.tau = 1.0;
  CHECK_THROWS_WITH_AS(c.validate(), doctest::Contains("tau"), ConfigurationError);
  c = BundleConfig{};
  c.t0 = c.t_max * 2;
  CHECK_THROWS_AS(c.validate(), ConfigurationError);
  c = BundleConfig{};
  c.max_iter = 0;
  CHECK_THROWS_AS(c.validate(), ConfigurationError);
}

TEST_CASE("quartic converges to a stationary point") {
  const auto inst = build_instance("quartic");
  BundleConfig c;
  const auto r = bundle_run(inst.problem, c, inst.x0);
  REQUIRE(r.converged);
  CHECK(r.iterations <= 500);
  const double x = r.x(0);
  CHECK(std::min({std::abs(x + 1), std::abs(x), std::abs(x - 1)}) < 1e-4);
  CHECK(r.measure.breakdown.total <= 1e-6);
  CHECK(r.certificate.t_min == doctest::Approx(0.1 / 16));
  CHECK(r.certificate.t_min_from_constants);
}

TEST_CASE("every shipped bundle instance converges with invariants intact") {
  for (const auto &name : instance_names()) {
    const auto inst = build_instance(name);
    if (!inst.flags.bundle) continue;
    CAPTURE(name);
    BundleConfig c;
    double last_center = kInf;
    BundleObserver obs = [&](const BundleState &st, const BundleRecord &rec) {
      CHECK(std::abs(st.model_value(st.Fc) - inst.problem.h->value(st.Fc)) <=
            1e-12 * (1 + std::abs(st.Fc.norm())));
      CHECK((rec.x_next - rec.center).squaredNorm() / (2 * rec.t) <= rec.v + 1e-12);
      CHECK(rec.center_objective <= last_center + 1e-12);
      last_center = rec.center_objective;
      if (rec.kind == StepKind::Serious)
        CHECK(rec.center_objective - rec.candidate_objective >= 0.5 * c.kappa * rec.v - 1e-12);
      CHECK(rec.t <= c.t_max);
    };
    const auto r = bundle_run(inst.problem, c, inst.x0, obs);
    CHECK(r.converged);
    CHECK(r.serious + r.null_steps + r.backtracking + 1 == r.iterations);
    CHECK(r.measure.breakdown.total <= r.certificate.eps + 1e-9);
  }
}

TEST_CASE("structured model reaches the same point as the flat model") {
  const auto inst = build_instance("buffered");
  BundleConfig flat;
  BundleConfig structured;
  structured.structured = true;
  const auto a = bundle_run(inst.problem, flat, inst.x0);
  const auto b = bundle_run(inst.problem, structured, inst.x0);
  REQUIRE(a.converged);
  REQUIRE(b.converged);
  CHECK((a.x - b.x).norm() < 1e-6);
}

TEST_CASE("structured mode requires a composed h") {
  const auto inst = build_instance("quartic");
  BundleConfig c;
  c.structured = true;
  CHECK_THROWS_AS(bundle_run(inst.problem, c, inst.x0), ConfigurationError);
}

TEST_CASE("iteration cap stops the run unconverged") {
  const auto inst = build_instance("quartic");
  BundleConfig c;
  c.max_iter = 1;
  const auto r = bundle_run(inst.problem, c, inst.x0);
  CHECK_FALSE(r.converged);
  CHECK(r.iterations == 1);
}

TEST_CASE("starting point outside X is rejected") {
  const auto inst = build_instance("quartic");
  CHECK_THROWS_AS(bundle_run(inst.problem, BundleConfig{}, Vec::Constant(1, 5.0)), InfeasiblePoint);
}
