#pragma once

#include "compopt/master.hpp"
#include "compopt/problem.hpp"
#include "compopt/stationarity.hpp"

#include <nlohmann/json.hpp>

#include <functional>
#include <optional>
#include <vector>

namespace compopt {

struct DcConfig {
  double t = 1.0;
  double tol = 1e-8;
  int max_iter = 500;
  /// Epsilon-subdifferential parameter; defaults to max(tol, 1e-12).
  std::optional<double> e;
  MasterOptions master;

  double eps_param() const { return e ? *e : std::max(tol, 1e-12); }
  /// Throws ConfigurationError naming the offending field.
  void validate() const;
};

struct DcState {
  Vec x;
  double objective = 0.0;
  Vec f2_values;
  /// Column i is s2_i in df2_i(x).
  Mat f2_slopes;
  int k = 0;
};

struct DcRecord {
  int k = 0;
  bool stop = false;
  double v = 0.0;
  double e = 0.0;
  double step_norm = 0.0;
  double objective = 0.0;
  double prev_objective = 0.0;
  Vec x;
  Vec x_next;
  Vec y_next;
  Vec z_next;
  Mat f1_witness;
  Mat f2_slopes;
  double master_kkt = 0.0;
  double master_scale = 1.0;
};

using DcObserver = std::function<void(const DcRecord &)>;

enum class DcVariant { Dc, ProximalDistance };

DcState dc_init(const CompositeProblem &problem, const DcConfig &config, const Vec &x0);
DcRecord dc_step(DcState &state, const CompositeProblem &problem, const DcConfig &config);
/// Specialization for sum_i (rho_i/2) dist^2(x, K_i) with projections.
DcRecord proximal_distance_step(DcState &state, const CompositeProblem &problem,
                                const DcConfig &config);

struct DcCertificate {
  double eps = 0.0;
  double primal = 0.0;
  double prox = 0.0;
  double dual = 0.0;
  /// False when the third term is a witness-based upper bound (e_k > e).
  bool dual_exact = true;
  nlohmann::json to_json() const;
};

DcCertificate dc_epsilon_certificate(const CompositeProblem &problem, const DcRecord &last,
                                     const DcConfig &config);

struct DcResult {
  Vec x;
  bool converged = false;
  int iterations = 0;
  double final_v = kInf;
  double final_e = kInf;
  std::vector<DcRecord> log;
  DcCertificate certificate;
  /// Residual of (x_{k+1}, y_{k+1}, z_{k+1}) with the master witnesses.
  ResidualBreakdown residual;
  StationarityTriple triple;
};

DcResult dc_run(const CompositeProblem &problem, const DcConfig &config, const Vec &x0,
                DcVariant variant = DcVariant::Dc, const DcObserver &observer = nullptr);

} // namespace compopt
