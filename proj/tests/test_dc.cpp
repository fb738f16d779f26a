#include "compopt/dc.hpp"
#include "compopt/problems.hpp"

#include <doctest.h>

using namespace compopt;

TEST_CASE("configuration errors name the field") {
  DcConfig c;
  c.t = 0.0;
  CHECK_THROWS_WITH_AS(c.validate(), doctest::Contains("t"), ConfigurationError);
  c = DcConfig{};
  c.e = -1.0;
  CHECK_THROWS_AS(c.validate(), ConfigurationError);
}

TEST_CASE("one DC step on the distance instance from 0.2 lands at 0.6") {
  const auto inst = build_instance("distpen");
  DcConfig c;
  auto st = dc_init(inst.problem, c, inst.x0);
  const auto rec = dc_step(st, inst.problem, c);
  CHECK(rec.x_next(0) == doctest::Approx(0.6).epsilon(1e-12));
}

TEST_CASE("iterates follow the closed-form fixed-point recursion") {
  // x_{k+1} = (1 + x_k) / 2 while x_k > 0, so x_k = 1 - 0.8 / 2^k.
  const auto inst = build_instance("distpen");
  DcConfig c;
  auto st = dc_init(inst.problem, c, inst.x0);
  for (int k = 1; k <= 20; ++k) {
    dc_step(st, inst.problem, c);
    CHECK(std::abs(st.x(0) - (1.0 - 0.8 / std::pow(2.0, k))) <= 1e-12);
  }
  // v_k = |1 - x_k|^2 / 4 here, so Tol = 1e-13 stops within 1e-6 of 1.
  c.tol = 1e-13;
  const auto r = dc_run(inst.problem, c, inst.x0);
  CHECK(r.converged);
  CHECK(std::abs(r.x(0) - 1.0) <= 1e-6);
}

TEST_CASE("DC runs keep their descent invariants") {
  for (const auto &name : instance_names()) {
    const auto inst = build_instance(name);
    if (!inst.flags.dc) continue;
    CAPTURE(name);
    DcConfig c;
    DcObserver obs = [&](const DcRecord &rec) {
      CHECK(rec.objective <= rec.prev_objective + 1e-12 * (1 + std::abs(rec.prev_objective)));
      CHECK(rec.e >= -1e-12);
      CHECK(rec.v >= rec.step_norm * rec.step_norm / (2 * c.t) - 1e-12);
    };
    const auto r = dc_run(inst.problem, c, inst.x0, DcVariant::Dc, obs);
    CHECK(r.converged);
    CHECK(r.residual.total <= r.certificate.eps + 1e-9);
  }
}

TEST_CASE("proximal distance iterates coincide with the DC iterates") {
  for (const char *name : {"distpen", "distpen2"}) {
    CAPTURE(name);
    const auto inst = build_instance(name);
    DcConfig c;
    auto a = dc_init(inst.problem, c, inst.x0);
    auto b = dc_init(inst.problem, c, inst.x0);
    for (int k = 0; k < 50; ++k) {
      const auto ra = dc_step(a, inst.problem, c);
      const auto rb = proximal_distance_step(b, inst.problem, c);
      CHECK((ra.x_next - rb.x_next).norm() <= 1e-8);
    }
  }
}

TEST_CASE("proximal distance step needs the distance structure") {
  const auto inst = build_instance("sparse-concave");
  DcConfig c;
  auto st = dc_init(inst.problem, c, inst.x0);
  CHECK_THROWS_AS(proximal_distance_step(st, inst.problem, c), InvalidInput);
}

TEST_CASE("sparse concave instance reaches a certified point") {
  const auto inst = build_instance("sparse-concave");
  DcConfig c;
  const auto r = dc_run(inst.problem, c, inst.x0);
  CHECK(r.converged);
  CHECK(r.final_v <= c.tol);
  CHECK(r.certificate.eps < 1e-3);
}
