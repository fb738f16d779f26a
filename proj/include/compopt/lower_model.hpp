#pragma once

#include "compopt/common.hpp"
#include "compopt/outer_function.hpp"

#include <nlohmann/json.hpp>

#include <string>
#include <vector>

namespace compopt {

enum class CutTag { Center, Trial, Aggregate };
std::string to_string(CutTag t);

/// Affine minorant value + <slope, z - anchor>.
struct Linearization {
  Vec anchor;
  double value = 0.0;
  Vec slope;
  CutTag tag = CutTag::Trial;

  double eval(const Vec &z) const { return value + slope.dot(z - anchor); }
  double offset() const { return value - slope.dot(anchor); }
  bool same_plane(const Linearization &o) const;

  /// Exact linearization of h at z.
  static Linearization of(const OuterFunction &h, const Vec &z, CutTag tag);
  /// sum_j w_j cut_j with w >= 0, sum w = 1, anchored at z.
  static Linearization combination(const std::vector<Linearization> &cuts,
                                   const Vec &w, const Vec &z);
};

struct BundlePolicy {
  enum class Serious { Reset, RetainActive };
  Serious after_serious = Serious::Reset;
  double activity_threshold = 1e-12;
  int max_bundle = 50;
};

/// max_j cut_j(z).
class CuttingPlaneModel {
public:
  CuttingPlaneModel() = default;
  explicit CuttingPlaneModel(std::vector<Linearization> cuts) : cuts_(std::move(cuts)) {}

  bool empty() const { return cuts_.empty(); }
  size_t size() const { return cuts_.size(); }
  const std::vector<Linearization> &cuts() const { return cuts_; }
  Eigen::Index dim() const;

  double evaluate(const Vec &z) const;
  /// Average slope of the maximizing cuts.
  Vec subgradient(const Vec &z) const;
  /// Weights of the maximizing cuts (uniform over ties).
  Vec active_weights(const Vec &z) const;
  /// sum_j alpha_j s_j.
  Vec combine(const Vec &alpha) const;
  double max_slope_norm() const;

  /// Serious step: the new model majorizes the center cut. Reset keeps only
  /// that cut; RetainActive also keeps cuts with alpha above threshold.
  void update_after_serious(const Linearization &center, const Vec &alpha,
                            const BundlePolicy &policy);
  /// Null or backtracking step: keep active cuts, the center and trial cuts,
  /// and the aggregate whenever weight was discarded.
  void update_after_null(const Linearization &center, const Linearization &trial,
                         const Linearization &aggregate, const Vec &alpha,
                         const BundlePolicy &policy);
  /// Drop cuts with alpha <= threshold (keeping tagged center/trial cuts) and
  /// compress to at most max_bundle cuts via the aggregate.
  void prune(const Vec &alpha, const BundlePolicy &policy,
             const Linearization *aggregate = nullptr);

  nlohmann::json to_json() const;

private:
  std::vector<Linearization> cuts_;
};

/// h0(hc_1(z), ..., hc_d(z)) with one cutting-plane model per component.
class StructuredModel {
public:
  StructuredModel() = default;
  StructuredModel(OuterPtr h0, std::vector<OuterPtr> components);

  bool empty() const;
  Eigen::Index dim() const;
  Eigen::Index ncomp() const { return static_cast<Eigen::Index>(inner_.size()); }
  const OuterPtr &h0() const { return h0_; }
  const std::vector<OuterPtr> &components() const { return comps_; }
  const std::vector<CuttingPlaneModel> &inner() const { return inner_; }
  size_t size() const;

  Vec inner_values(const Vec &z) const;
  double evaluate(const Vec &z) const;
  /// lambda_i from dh0 at the inner values, times each inner subgradient.
  Vec subgradient(const Vec &z) const;
  /// sum_i lambda_i s_i.
  static Vec assemble(const Vec &lambda, const std::vector<Vec> &slopes);

  /// Each inner model becomes the single cut of h_i at z_center (plus
  /// retained active cuts under RetainActive).
  void update_after_serious(const Vec &z_center, const std::vector<Vec> &mu,
                            const BundlePolicy &policy);
  /// Inner model i keeps its active cuts, the cut at the last serious
  /// anchor, the trial cut at z_trial, and the aggregate cut.
  void update_after_null(const Vec &z_center, const Vec &z_trial,
                         const std::vector<Linearization> &aggregates,
                         const std::vector<Vec> &mu, const BundlePolicy &policy);

  nlohmann::json to_json() const;

private:
  OuterPtr h0_;
  std::vector<OuterPtr> comps_;
  std::vector<CuttingPlaneModel> inner_;
};

} // namespace compopt
