#include "compopt/bundle.hpp"
#include "compopt/master.hpp"
#include "compopt/problems.hpp"

#include <doctest.h>

using namespace compopt;

namespace {

struct AbsSetup {
  SmoothFunction f0 = SmoothFunction::zero(1);
  FeasibleSet X = FeasibleSet::whole(1);
  OuterPtr h = make_abs(1);
  BundleMasterSpec spec;

  explicit AbsSetup(double t) {
    spec.f0 = &f0;
    spec.X = &X;
    spec.x_hat = Vec::Constant(1, 3.0);
    spec.t = t;
    spec.Fc = Vec::Constant(1, 3.0);
    spec.J = Mat::Identity(1, 1);
    spec.center_value = 3.0;
  }
};

} // namespace

TEST_CASE("single-cut master takes a gradient step") {
  AbsSetup s(1.0);
  CuttingPlaneModel model({Linearization::of(*s.h, s.spec.Fc, CutTag::Center)});
  const auto sol = solve_bundle_cp(s.spec, model);
  CHECK(sol.x_next(0) == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(sol.alpha(0) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(sol.y_next(0) == doctest::Approx(1.0).epsilon(1e-12));
  const auto chk = verify_bundle_cp(s.spec, model, sol);
  CHECK(chk.kkt <= 1e-9 * chk.scale);
}

TEST_CASE("two-cut master lands on the kink with the right multipliers") {
  // min |x| + (x - 3)^2 / 8: x = 0, with alpha_1 - alpha_2 = 3/4.
  AbsSetup s(4.0);
  CuttingPlaneModel model({Linearization::of(*s.h, s.spec.Fc, CutTag::Center),
                           Linearization::of(*s.h, Vec::Constant(1, -1.0), CutTag::Trial)});
  const auto sol = solve_bundle_cp(s.spec, model);
  CHECK(std::abs(sol.x_next(0)) < 1e-10);
  CHECK(sol.alpha(0) == doctest::Approx(0.875).epsilon(1e-9));
  CHECK(sol.alpha(1) == doctest::Approx(0.125).epsilon(1e-9));
  CHECK(std::abs(sol.alpha.sum() - 1.0) <= 1e-10);
  CHECK(sol.alpha.minCoeff() >= -1e-12);
}

TEST_CASE("box constraint binds in the master") {
  AbsSetup s(10.0);
  s.X = FeasibleSet::box(Vec::Constant(1, 1.0), Vec::Constant(1, 5.0));
  CuttingPlaneModel model({Linearization::of(*s.h, s.spec.Fc, CutTag::Center)});
  const auto sol = solve_bundle_cp(s.spec, model);
  CHECK(sol.x_next(0) == doctest::Approx(1.0).epsilon(1e-12));
  const auto chk = verify_bundle_cp(s.spec, model, sol);
  CHECK(chk.kkt <= 1e-9 * chk.scale);
}

TEST_CASE("empty model raises UninitializedModel") {
  AbsSetup s(1.0);
  CHECK_THROWS_AS(solve_bundle_cp(s.spec, CuttingPlaneModel{}), UninitializedModel);
}

TEST_CASE("distance master is a projection of the shifted point") {
  SmoothFunction f0 = SmoothFunction::zero(2);
  FeasibleSet X = FeasibleSet::box(Vec::Zero(2), Vec::Ones(2));
  DistanceMasterSpec spec;
  spec.f0 = &f0;
  spec.X = &X;
  spec.p_hat = (Vec(2) << 2.0, 0.5).finished();
  spec.mu = 3.0;
  const auto sol = solve_distance(spec);
  CHECK(sol.x_next.isApprox((Vec(2) << 1.0, 0.5).finished(), 1e-12));
  const auto chk = verify_distance(spec, sol);
  CHECK(chk.kkt <= 1e-9 * chk.scale);
}

TEST_CASE("structured master agrees with the flattened cutting-plane master") {
  const Instance inst = build_instance("buffered");
  const CompositeProblem &P = inst.problem;
  BundleConfig cfg;
  cfg.structured = true;
  int compared = 0;
  BundleObserver obs = [&](const BundleState &st, const BundleRecord &rec) {
    REQUIRE(st.structured.has_value());
    BundleMasterSpec spec;
    spec.f0 = &P.f0;
    spec.X = &P.X;
    spec.x_hat = st.center;
    spec.t = rec.t;
    spec.Fc = st.Fc;
    spec.J = st.Jc;
    spec.center_value = st.center_value;
    const auto flat = flatten_structured(*st.structured);
    const auto sol = solve_bundle_cp(spec, flat);
    CHECK((sol.x_next - rec.x_next).norm() <= 1e-8);
    CHECK(rec.master_kkt <= 1e-9 * rec.master_scale);
    ++compared;
  };
  const auto res = bundle_run(P, cfg, inst.x0, obs);
  CHECK(res.converged);
  CHECK(compared == res.iterations);
}

TEST_CASE("master dump carries the model") {
  AbsSetup s(1.0);
  CuttingPlaneModel model({Linearization::of(*s.h, s.spec.Fc, CutTag::Center)});
  const auto j = master_to_json(s.spec, model);
  CHECK(j.contains("model"));
}
