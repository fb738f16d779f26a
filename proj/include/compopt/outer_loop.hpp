#pragma once

#include "compopt/bundle.hpp"
#include "compopt/dc.hpp"
#include "compopt/problem.hpp"
#include "compopt/stationarity.hpp"

#include <nlohmann/json.hpp>

#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace compopt {

/// The smooth pieces psi_k, k in K_j, behind one min-type mapping component.
struct LseGroup {
  std::vector<SmoothFunction> psi;
};

/// LSE_eta(x) = -(eta / ln|K|) ln sum_k exp(-(ln|K| / eta) psi_k(x)),
/// evaluated with a min-shift; |K| = 1 returns psi itself. `component_L`
/// is attached as given (it depends on X and is not derived here).
VectorMapping make_lse(std::vector<LseGroup> groups, double eta,
                       std::vector<std::optional<double>> component_L = {});

/// theta * sum_i max{0, z_i}.
OuterPtr make_hinge_penalty(Eigen::Index m, double theta);
/// rho * max{0, inner(z)} for a scalar convex inner function.
OuterPtr make_hinge_penalty(OuterPtr inner, double rho);
/// sum_i (rho_i/2) z_i + sum_i eta_i max{0, z_{q+i}}.
OuterPtr make_distance_penalty(const Vec &rho, const Vec &eta);

enum class FamilyKind { Identity, LseSmoothing, HingePenalty, DistancePenalty };
std::string to_string(FamilyKind k);

/// Smoothing and penalty parameters of one approximating problem.
struct ApproxParams {
  double eta = 1.0;
  double rho = 1.0;
  double theta = 1.0;
  nlohmann::json to_json() const;
};

struct ApproximationFamily {
  std::string name;
  FamilyKind kind = FamilyKind::Identity;
  ApproxParams initial;
  std::function<CompositeProblem(const ApproxParams &)> generate;
  /// Residual of x against the actual problem, when its h is evaluable.
  std::function<ResidualBreakdown(const Vec &)> actual_residual;
};

/// Start of inner run nu: the previous outer iterate, or x0 every time.
enum class WarmStart { Previous, Initial };
std::string to_string(WarmStart w);

struct Schedule {
  int length = 10;
  /// Tol^nu = tol0 * tol_factor^nu.
  double tol0 = 1e-2;
  double tol_factor = 0.5;
  double eta_factor = 0.5;
  double rho_factor = 2.0;
  double theta_factor = 2.0;
  /// First index nu (parameters at nu are initial * factor^nu).
  int first = 0;
  bool halt_on_divergence = false;
  /// Defaults to 1e6 (1 + |y^first|).
  std::optional<double> divergence_threshold;
  WarmStart warm_start = WarmStart::Previous;

  ApproxParams params_at(const ApproxParams &initial, int nu) const;
  double tol_at(int nu) const;
  void validate() const;
};

enum class InnerSolver { Bundle, Dc, ProximalDistance };
std::string to_string(InnerSolver s);

struct OuterRow {
  int nu = 0;
  ApproxParams params;
  double tol = 0.0;
  int inner_iterations = 0;
  bool inner_converged = false;
  double certificate = 0.0;
  /// max(certificate, Tol^nu): the tolerance the row is certified at.
  double certified_tol = 0.0;
  ResidualBreakdown approx_residual;
  bool near_stationary = false;
  std::optional<ResidualBreakdown> actual_residual;
  Vec x;
  Vec y;
  double y_norm = 0.0;
  std::string failure;
  nlohmann::json to_json() const;
};

struct OuterResult {
  std::vector<OuterRow> rows;
  MultiplierReport diagnostics;
  bool completed = false;
  bool halted_on_divergence = false;
  std::string failure;
  nlohmann::json to_json() const;
};

struct InnerConfigs {
  BundleConfig bundle;
  DcConfig dc;
};

OuterResult run_outer(const ApproximationFamily &family, const Schedule &schedule,
                      InnerSolver inner, const Vec &x0, const InnerConfigs &configs = {});

} // namespace compopt
