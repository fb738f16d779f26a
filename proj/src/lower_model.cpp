#include "compopt/lower_model.hpp"

#include <algorithm>
#include <numeric>

namespace compopt {

namespace {

nlohmann::json vec_json(const Vec &v) {
  return std::vector<double>(v.data(), v.data() + v.size());
}

void add_unique(std::vector<Linearization> &cuts, const Linearization &c) {
  for (const auto &o : cuts)
    if (o.same_plane(c)) return;
  cuts.push_back(c);
}

} // namespace

std::string to_string(CutTag t) {
  switch (t) {
  case CutTag::Center: return "center";
  case CutTag::Trial: return "trial";
  case CutTag::Aggregate: return "aggregate";
  }
  return "?";
}

bool Linearization::same_plane(const Linearization &o) const {
  return slope == o.slope && offset() == o.offset();
}

Linearization Linearization::of(const OuterFunction &h, const Vec &z, CutTag tag) {
  Linearization c;
  c.anchor = z;
  c.value = h.value(z);
  if (!std::isfinite(c.value)) throw OracleFailure("linearization at a point where h is infinite");
  c.slope = h.subgradient(z);
  c.tag = tag;
  return c;
}

Linearization Linearization::combination(const std::vector<Linearization> &cuts,
                                         const Vec &w, const Vec &z) {
  if (cuts.empty() || static_cast<Eigen::Index>(cuts.size()) != w.size())
    throw InvalidInput("combination: weight count mismatch");
  Vec wp = w.cwiseMax(0.0);
  const double s = wp.sum();
  if (!(s > 0)) throw InvalidInput("combination: weights sum to zero");
  wp /= s;
  Linearization a;
  a.anchor = z;
  a.value = 0.0;
  a.slope = Vec::Zero(cuts[0].slope.size());
  a.tag = CutTag::Aggregate;
  for (size_t j = 0; j < cuts.size(); ++j) {
    const double wj = wp(static_cast<Eigen::Index>(j));
    if (wj == 0) continue;
    a.value += wj * cuts[j].eval(z);
    a.slope += wj * cuts[j].slope;
  }
  return a;
}

Eigen::Index CuttingPlaneModel::dim() const {
  if (cuts_.empty()) throw UninitializedModel("model has no cuts");
  return cuts_[0].slope.size();
}

double CuttingPlaneModel::evaluate(const Vec &z) const {
  if (cuts_.empty()) throw UninitializedModel("evaluate on an empty model");
  require_dim(z, dim(), "model evaluate");
  double v = -kInf;
  for (const auto &c : cuts_) v = std::max(v, c.eval(z));
  return v;
}

Vec CuttingPlaneModel::active_weights(const Vec &z) const {
  const double top = evaluate(z);
  Vec w = Vec::Zero(static_cast<Eigen::Index>(cuts_.size()));
  for (size_t j = 0; j < cuts_.size(); ++j)
    if (cuts_[j].eval(z) == top) w(static_cast<Eigen::Index>(j)) = 1.0;
  return w / w.sum();
}

Vec CuttingPlaneModel::subgradient(const Vec &z) const { return combine(active_weights(z)); }

Vec CuttingPlaneModel::combine(const Vec &alpha) const {
  if (static_cast<Eigen::Index>(cuts_.size()) != alpha.size())
    throw InvalidInput("combine: multiplier count mismatch");
  Vec y = Vec::Zero(dim());
  for (size_t j = 0; j < cuts_.size(); ++j) y += alpha(static_cast<Eigen::Index>(j)) * cuts_[j].slope;
  return y;
}

double CuttingPlaneModel::max_slope_norm() const {
  double m = 0.0;
  for (const auto &c : cuts_) m = std::max(m, c.slope.norm());
  return m;
}

void CuttingPlaneModel::update_after_serious(const Linearization &center, const Vec &alpha,
                                             const BundlePolicy &policy) {
  std::vector<Linearization> next{center};
  next[0].tag = CutTag::Center;
  if (policy.after_serious == BundlePolicy::Serious::RetainActive &&
      alpha.size() == static_cast<Eigen::Index>(cuts_.size())) {
    for (size_t j = 0; j < cuts_.size(); ++j)
      if (alpha(static_cast<Eigen::Index>(j)) > policy.activity_threshold) {
        Linearization c = cuts_[j];
        if (c.tag == CutTag::Center) c.tag = CutTag::Trial;
        add_unique(next, c);
      }
  }
  cuts_ = std::move(next);
  if (static_cast<int>(cuts_.size()) > policy.max_bundle) cuts_.resize(static_cast<size_t>(std::max(policy.max_bundle, 1)));
}

void CuttingPlaneModel::update_after_null(const Linearization &center,
                                          const Linearization &trial,
                                          const Linearization &aggregate, const Vec &alpha,
                                          const BundlePolicy &policy) {
  prune(alpha, policy, &aggregate);
  std::vector<Linearization> next;
  Linearization c = center;
  c.tag = CutTag::Center;
  next.push_back(c);
  Linearization tr = trial;
  tr.tag = CutTag::Trial;
  add_unique(next, tr);
  for (const auto &k : cuts_)
    if (k.tag != CutTag::Center) add_unique(next, k);
  cuts_ = std::move(next);
}

void CuttingPlaneModel::prune(const Vec &alpha, const BundlePolicy &policy,
                              const Linearization *aggregate) {
  if (alpha.size() != static_cast<Eigen::Index>(cuts_.size()))
    throw InvalidInput("prune: multiplier count mismatch");
  std::vector<size_t> keep;
  bool dropped_weight = false;
  for (size_t j = 0; j < cuts_.size(); ++j) {
    const double a = alpha(static_cast<Eigen::Index>(j));
    if (a > policy.activity_threshold || cuts_[j].tag == CutTag::Center) keep.push_back(j);
    else if (a > 0) dropped_weight = true;
  }
  // Leave room for center, trial and aggregate.
  const size_t cap = static_cast<size_t>(std::max(policy.max_bundle - 3, 1));
  if (keep.size() > cap) {
    std::stable_sort(keep.begin(), keep.end(), [&](size_t a, size_t b) {
      return alpha(static_cast<Eigen::Index>(a)) > alpha(static_cast<Eigen::Index>(b));
    });
    keep.resize(cap);
    std::sort(keep.begin(), keep.end());
    dropped_weight = true;
  }
  std::vector<Linearization> next;
  for (size_t j : keep) next.push_back(cuts_[j]);
  if (dropped_weight && aggregate) {
    Linearization a = *aggregate;
    a.tag = CutTag::Aggregate;
    add_unique(next, a);
  }
  cuts_ = std::move(next);
}

nlohmann::json CuttingPlaneModel::to_json() const {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto &c : cuts_)
    arr.push_back({{"anchor", vec_json(c.anchor)},
                   {"value", c.value},
                   {"slope", vec_json(c.slope)},
                   {"tag", to_string(c.tag)}});
  return {{"kind", "cutting-plane"}, {"cuts", arr}};
}

StructuredModel::StructuredModel(OuterPtr h0, std::vector<OuterPtr> components)
    : h0_(std::move(h0)), comps_(std::move(components)), inner_(comps_.size()) {
  if (!h0_ || comps_.empty()) throw InvalidInput("structured model: missing parts");
  if (!h0_->monotone()) throw ConfigurationError("structured model: h0 must be nondecreasing");
  if (h0_->dim() != static_cast<Eigen::Index>(comps_.size()))
    throw InvalidInput("structured model: h0 dimension mismatch");
}

bool StructuredModel::empty() const {
  if (inner_.empty()) return true;
  for (const auto &m : inner_)
    if (m.empty()) return true;
  return false;
}

Eigen::Index StructuredModel::dim() const {
  if (comps_.empty()) throw UninitializedModel("structured model without components");
  return comps_[0]->dim();
}

size_t StructuredModel::size() const {
  size_t s = 0;
  for (const auto &m : inner_) s += m.size();
  return s;
}

Vec StructuredModel::inner_values(const Vec &z) const {
  if (empty()) throw UninitializedModel("evaluate on an empty structured model");
  Vec r(ncomp());
  for (Eigen::Index i = 0; i < ncomp(); ++i) r(i) = inner_[static_cast<size_t>(i)].evaluate(z);
  return r;
}

double StructuredModel::evaluate(const Vec &z) const { return h0_->value(inner_values(z)); }

Vec StructuredModel::assemble(const Vec &lambda, const std::vector<Vec> &slopes) {
  if (slopes.empty() || lambda.size() != static_cast<Eigen::Index>(slopes.size()))
    throw InvalidInput("assemble: size mismatch");
  Vec y = Vec::Zero(slopes[0].size());
  for (size_t i = 0; i < slopes.size(); ++i) y += lambda(static_cast<Eigen::Index>(i)) * slopes[i];
  return y;
}

Vec StructuredModel::subgradient(const Vec &z) const {
  Vec lam = h0_->subgradient(inner_values(z));
  std::vector<Vec> s;
  for (const auto &m : inner_) s.push_back(m.subgradient(z));
  return assemble(lam, s);
}

void StructuredModel::update_after_serious(const Vec &z_center, const std::vector<Vec> &mu,
                                           const BundlePolicy &policy) {
  for (size_t i = 0; i < inner_.size(); ++i) {
    Linearization c = Linearization::of(*comps_[i], z_center, CutTag::Center);
    Vec a = i < mu.size() ? mu[i] : Vec();
    if (inner_[i].empty()) inner_[i] = CuttingPlaneModel({c});
    else inner_[i].update_after_serious(c, a, policy);
  }
}

void StructuredModel::update_after_null(const Vec &z_center, const Vec &z_trial,
                                        const std::vector<Linearization> &aggregates,
                                        const std::vector<Vec> &mu,
                                        const BundlePolicy &policy) {
  if (aggregates.size() != inner_.size() || mu.size() != inner_.size())
    throw InvalidInput("structured update: per-component data missing");
  for (size_t i = 0; i < inner_.size(); ++i) {
    Linearization c = Linearization::of(*comps_[i], z_center, CutTag::Center);
    Linearization t = Linearization::of(*comps_[i], z_trial, CutTag::Trial);
    // The aggregate row is required here regardless of which cuts survive.
    auto &m = inner_[i];
    m.prune(mu[i], policy, nullptr);
    std::vector<Linearization> cuts = m.cuts();
    Linearization a = aggregates[i];
    a.tag = CutTag::Aggregate;
    std::vector<Linearization> all{c};
    for (const auto &x : {t, a})
      if (std::none_of(all.begin(), all.end(), [&](const Linearization &o) { return o.same_plane(x); }))
        all.push_back(x);
    for (const auto &x : cuts)
      if (x.tag != CutTag::Center &&
          std::none_of(all.begin(), all.end(), [&](const Linearization &o) { return o.same_plane(x); }))
        all.push_back(x);
    m = CuttingPlaneModel(std::move(all));
  }
}

nlohmann::json StructuredModel::to_json() const {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto &m : inner_) arr.push_back(m.to_json());
  return {{"kind", "structured"}, {"h0", h0_ ? h0_->variant() : ""}, {"inner", arr}};
}

} // namespace compopt
