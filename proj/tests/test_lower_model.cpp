#include "compopt/lower_model.hpp"

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

bool below(const CuttingPlaneModel &model, const OuterFunction &h, std::mt19937_64 &rng) {
  for (int s = 0; s < 500; ++s) {
    const Vec z = random_vec(rng, h.dim(), 5.0);
    if (model.evaluate(z) > h.value(z) + 1e-10) return false;
  }
  return true;
}

} // namespace

TEST_CASE("linearizations are exact at their anchor and minorize h") {
  const auto h = make_abs(2);
  const Vec z = (Vec(2) << 1, -2).finished();
  const auto cut = Linearization::of(*h, z, CutTag::Center);
  CHECK(cut.eval(z) == h->value(z));
  CHECK(cut.offset() == doctest::Approx(0.0));
  std::mt19937_64 rng(1);
  CHECK(below(CuttingPlaneModel({cut}), *h, rng));
}

TEST_CASE("model is the max of its cuts and reports active weights") {
  const auto h = make_abs(1);
  CuttingPlaneModel model({Linearization::of(*h, Vec::Constant(1, 2.0), CutTag::Center),
                           Linearization::of(*h, Vec::Constant(1, -1.0), CutTag::Trial)});
  CHECK(model.evaluate(Vec::Constant(1, 0.5)) == 0.5);
  CHECK(model.evaluate(Vec::Constant(1, -3.0)) == 3.0);
  const Vec w = model.active_weights(Vec::Zero(1));
  CHECK(w(0) == doctest::Approx(0.5));
  CHECK(w(1) == doctest::Approx(0.5));
  CHECK(model.subgradient(Vec::Constant(1, 1.0))(0) == 1.0);
  CHECK(model.combine((Vec(2) << 0.25, 0.75).finished())(0) == doctest::Approx(-0.5));
}

TEST_CASE("convex combinations of cuts stay below h") {
  const auto h = make_max(3);
  std::mt19937_64 rng(2);
  std::vector<Linearization> cuts;
  for (int j = 0; j < 4; ++j) cuts.push_back(Linearization::of(*h, random_vec(rng, 3, 2.0), CutTag::Trial));
  const Vec w = (Vec(4) << 0.1, 0.2, 0.3, 0.4).finished();
  const Vec z = random_vec(rng, 3, 1.0);
  const auto agg = Linearization::combination(cuts, w, z);
  CHECK(agg.tag == CutTag::Aggregate);
  CHECK(below(CuttingPlaneModel({agg}), *h, rng));
  double direct = 0.0;
  for (int j = 0; j < 4; ++j) direct += w(j) * cuts[j].eval(z);
  CHECK(agg.eval(z) == doctest::Approx(direct));
}

TEST_CASE("serious-step reset keeps only the center cut") {
  const auto h = make_abs(1);
  CuttingPlaneModel model({Linearization::of(*h, Vec::Constant(1, 2.0), CutTag::Center),
                           Linearization::of(*h, Vec::Constant(1, -1.0), CutTag::Trial)});
  const auto center = Linearization::of(*h, Vec::Constant(1, -0.5), CutTag::Center);
  model.update_after_serious(center, (Vec(2) << 0.5, 0.5).finished(), BundlePolicy{});
  REQUIRE(model.size() == 1);
  CHECK(model.cuts()[0].eval(Vec::Constant(1, -0.5)) == 0.5);
}

TEST_CASE("null step keeps the center and trial cuts and interpolates at the center") {
  const auto h = make_abs(2);
  std::mt19937_64 rng(3);
  const Vec zc = random_vec(rng, 2, 2.0);
  const auto center = Linearization::of(*h, zc, CutTag::Center);
  CuttingPlaneModel model({center});
  BundlePolicy policy;
  for (int k = 0; k < 30; ++k) {
    const Vec zt = random_vec(rng, 2, 3.0);
    const auto trial = Linearization::of(*h, zt, CutTag::Trial);
    const Vec alpha = model.active_weights(zt);
    const auto agg = Linearization::combination(model.cuts(), alpha, zt);
    model.update_after_null(center, trial, agg, alpha, policy);
    CHECK(model.evaluate(zt) == doctest::Approx(h->value(zt)));
    CHECK(std::abs(model.evaluate(zc) - h->value(zc)) <= 1e-12);
    CHECK(model.size() <= static_cast<size_t>(policy.max_bundle));
    CHECK(below(model, *h, rng));
  }
}

TEST_CASE("pruning compresses to the bundle limit without losing the minorant property") {
  const auto h = make_max(2);
  std::mt19937_64 rng(4);
  std::vector<Linearization> cuts;
  for (int j = 0; j < 20; ++j) cuts.push_back(Linearization::of(*h, random_vec(rng, 2, 2.0), CutTag::Trial));
  CuttingPlaneModel model(cuts);
  BundlePolicy policy;
  policy.max_bundle = 5;
  const Vec z = random_vec(rng, 2, 1.0);
  const Vec alpha = Vec::Constant(20, 1.0 / 20);
  const auto agg = Linearization::combination(model.cuts(), alpha, z);
  model.prune(alpha, policy, &agg);
  CHECK(model.size() <= 5);
  CHECK(below(model, *h, rng));
}

TEST_CASE("structured model is a minorant built from component models") {
  const auto h0 = make_separable_pwl(Vec::Zero(1), Vec::Constant(1, 1.5));
  const auto comp = make_max(3);
  const auto h = make_composed(h0, {comp});
  StructuredModel model(h0, {comp});
  std::mt19937_64 rng(5);
  const Vec zc = random_vec(rng, 3, 1.0);
  model.update_after_serious(zc, {Vec()}, BundlePolicy{});
  CHECK(std::abs(model.evaluate(zc) - h->value(zc)) <= 1e-12);
  for (int k = 0; k < 10; ++k) {
    const Vec zt = random_vec(rng, 3, 2.0);
    const Vec mu = Vec::Constant(static_cast<Eigen::Index>(model.inner()[0].size()),
                                 1.0 / static_cast<double>(model.inner()[0].size()));
    const auto agg = Linearization::combination(model.inner()[0].cuts(), mu, zt);
    model.update_after_null(zc, zt, {agg}, {mu}, BundlePolicy{});
    CHECK(std::abs(model.evaluate(zt) - h->value(zt)) <= 1e-12);
    for (int s = 0; s < 200; ++s) {
      const Vec z = random_vec(rng, 3, 4.0);
      CHECK(model.evaluate(z) <= h->value(z) + 1e-10);
    }
  }
}
