#pragma once

#include "compopt/convex_program.hpp"
#include "compopt/lower_model.hpp"
#include "compopt/oracles.hpp"

#include <nlohmann/json.hpp>

#include <vector>

namespace compopt {

struct MasterOptions {
  double tol = 1e-12;
  int max_iter = 10000;
  /// Solutions whose re-verified residual exceeds tol_master * scale raise
  /// MasterFailure.
  double tol_master = 1e-10;
};

/// Linearized data at the center: min f0(x) + model(Fc + J (x - x_hat))
/// + |x - x_hat|^2 / (2t) over X.
struct BundleMasterSpec {
  const SmoothFunction *f0 = nullptr;
  const FeasibleSet *X = nullptr;
  Vec x_hat;
  double t = 1.0;
  Vec Fc;
  Mat J;
  /// Center objective value, only used for the residual scale.
  double center_value = 0.0;
};

/// DC master: min f0(x) + h(Fbar(x)) + |x - x_k|^2 / (2t), with
/// Fbar_i(x) = f1_i(x) - f2_i(x_k) - <s2_i, x - x_k>.
struct DcMasterSpec {
  const SmoothFunction *f0 = nullptr;
  const FeasibleSet *X = nullptr;
  const OuterFunction *h = nullptr;
  const std::vector<DcComponent> *components = nullptr;
  Vec x_k;
  double t = 1.0;
  Vec f2_values;
  /// Column i holds s2_i.
  Mat f2_slopes;
  double center_value = 0.0;
};

/// min f0(x) + (mu/2) |x - p_hat|^2 over X.
struct DistanceMasterSpec {
  const SmoothFunction *f0 = nullptr;
  const FeasibleSet *X = nullptr;
  Vec p_hat;
  double mu = 1.0;
};

struct MasterSolution {
  Vec x_next;
  Vec z_next;
  Vec y_next;
  /// Model value at z_next (bundle variants) or h(z_next) (DC).
  double model_value = 0.0;
  /// Cut multipliers (flat bundle master).
  Vec alpha;
  /// Structured master: lambda~_i, per-component cut multipliers mu_ij,
  /// aggregate inner slopes s_i, and convex weights producing them.
  Vec lambda_tilde;
  std::vector<Vec> mu;
  std::vector<Vec> inner_slopes;
  std::vector<Vec> inner_weights;
  /// DC: column i is the subgradient of f1_i used as witness at x_next.
  Mat f1_witness;
  double kkt_residual = kInf;
  double scale = 1.0;
  int iterations = 0;
  bool polished = false;
};

MasterSolution solve_bundle_cp(const BundleMasterSpec &spec, const CuttingPlaneModel &model,
                               const MasterOptions &opts = {});
MasterSolution solve_bundle_structured(const BundleMasterSpec &spec,
                                       const StructuredModel &model,
                                       const MasterOptions &opts = {});
MasterSolution solve_dc(const DcMasterSpec &spec, const MasterOptions &opts = {});
MasterSolution solve_distance(const DistanceMasterSpec &spec, const MasterOptions &opts = {});

/// Independent re-verification of a returned solution.
struct MasterCheck {
  double stationarity = 0.0;
  double multiplier_sum_error = 0.0;
  double min_multiplier = 0.0;
  double complementarity = 0.0;
  double dual_feasibility = 0.0;
  double kkt = 0.0;
  double scale = 1.0;
};

MasterCheck verify_bundle_cp(const BundleMasterSpec &spec, const CuttingPlaneModel &model,
                             const MasterSolution &sol);
MasterCheck verify_bundle_structured(const BundleMasterSpec &spec,
                                     const StructuredModel &model, const MasterSolution &sol);
MasterCheck verify_dc(const DcMasterSpec &spec, const MasterSolution &sol);
MasterCheck verify_distance(const DistanceMasterSpec &spec, const MasterSolution &sol);

/// Flat cutting-plane model equal to h0(max_j cut_j) for a scalar piecewise
/// linear nondecreasing h0 (pieces read from its epigraph-free formula by
/// evaluating slopes); used to cross-check the structured master.
CuttingPlaneModel flatten_structured(const StructuredModel &model);

/// Dump of a bundle master instance for external cross-checking.
nlohmann::json master_to_json(const BundleMasterSpec &spec, const CuttingPlaneModel &model);

} // namespace compopt
