#pragma once

#include "compopt/lower_model.hpp"
#include "compopt/master.hpp"
#include "compopt/problem.hpp"
#include "compopt/stationarity.hpp"

#include <nlohmann/json.hpp>

#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace compopt {

enum class StepKind { Serious, Null, Backtracking, Stop };
std::string to_string(StepKind k);

struct BundleConfig {
  double kappa = 0.1;
  double tau = 2.0;
  double t_lower0 = 0.1;
  double t0 = 1.0;
  double t_max = 100.0;
  double tol = 1e-8;
  int max_iter = 500;
  /// Use the h0 o H model when h is a composition.
  bool structured = false;
  BundlePolicy policy;
  MasterOptions master;

  /// Throws ConfigurationError naming the offending field.
  void validate() const;
};

struct BundleState {
  Vec center;
  double center_value = 0.0;
  Vec Fc;
  Mat Jc;
  Linearization center_cut;
  CuttingPlaneModel flat;
  std::optional<StructuredModel> structured;
  double t = 1.0;
  double t_lower = 0.1;
  int k = 0;
  int serious_streak = 0;

  double model_value(const Vec &z) const;
  size_t model_size() const;
  nlohmann::json model_json() const;
};

struct BundleRecord {
  int k = 0;
  StepKind kind = StepKind::Null;
  double v = 0.0;
  double t = 0.0;
  double t_next = 0.0;
  double t_lower = 0.0;
  double step_norm = 0.0;
  /// f0(x_{k+1}) + h(F(x_{k+1})).
  double candidate_objective = 0.0;
  /// f0(x_{k+1}) + h(z_{k+1}).
  double linearized_objective = 0.0;
  double center_objective = 0.0;
  size_t model_size = 0;
  Vec center;
  Vec x_next;
  Vec y_next;
  Vec z_next;
  double master_kkt = 0.0;
  double master_scale = 1.0;
  Vec alpha;
};

/// Called after the master solve and classification of step k, before the
/// state (center, model, t) is updated.
using BundleObserver = std::function<void(const BundleState &, const BundleRecord &)>;

BundleState bundle_init(const CompositeProblem &problem, const BundleConfig &config,
                        const Vec &x0);
BundleRecord bundle_step(BundleState &state, const CompositeProblem &problem,
                         const BundleConfig &config, const BundleObserver *observer = nullptr);

/// Computable surrogate of the bundle epsilon-certificate, with
/// z* = F(x_{k+1}) and y* = y_{k+1}.
struct BundleCertificate {
  double eps = 0.0;
  double primal = 0.0;
  double prox = 0.0;
  double jacobian = 0.0;
  double t_min = 0.0;
  /// False when t_min comes from the observed t-floor because L_h or L_F
  /// is unavailable or only estimated.
  bool t_min_from_constants = false;
  nlohmann::json to_json() const;
};

/// t_min = kappa / (2 tau L_h L_F) when both constants are available.
std::optional<double> bundle_t_min(const CompositeProblem &problem, const BundleConfig &config);

BundleCertificate epsilon_certificate(const CompositeProblem &problem, const BundleRecord &last,
                                      const BundleConfig &config, double observed_t_lower);

struct BundleResult {
  Vec x;
  bool converged = false;
  int iterations = 0;
  int serious = 0;
  int null_steps = 0;
  int backtracking = 0;
  double final_v = kInf;
  std::vector<BundleRecord> log;
  BundleCertificate certificate;
  StationarityMeasure measure;
  /// Violations of the t floor; only possible with estimated constants.
  std::vector<std::string> warnings;
};

BundleResult bundle_run(const CompositeProblem &problem, const BundleConfig &config,
                        const Vec &x0, const BundleObserver &observer = nullptr);

} // namespace compopt
