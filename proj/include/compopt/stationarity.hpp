#pragma once

#include "compopt/problem.hpp"

#include <nlohmann/json.hpp>

#include <optional>
#include <vector>

namespace compopt {

enum class DMode { SmoothGradient, DcPair };

struct StationarityTriple {
  Vec x;
  Vec y;
  Vec z;
};

/// Components of dist(0, S(x, y, z)).
struct ResidualBreakdown {
  double r_primal = 0.0;
  double r_dual = 0.0;
  double r_stat = 0.0;
  double total = 0.0;
  bool dual_exact = true;
  bool stat_exact = true;

  bool exact() const { return dual_exact && stat_exact; }
  nlohmann::json to_json() const;
};

/// Subgradient witnesses for the DC mode: column i of f1 is in df1_i(x),
/// column i of f2 in the e-subdifferential of f2_i at x.
struct DcWitness {
  Mat f1;
  Mat f2;
};

/// Residual of a triple. DcPair mode uses witness subgradients (from
/// `witness` or the oracles at x) and is flagged inexact unless every DC
/// part is smooth.
ResidualBreakdown residual(const CompositeProblem &problem, DMode mode,
                           const StationarityTriple &triple,
                           const DcWitness *witness = nullptr);

/// True iff the (upper bound on the) residual total is at most eps.
bool check_near_stationary(const CompositeProblem &problem, DMode mode,
                           const StationarityTriple &triple, double eps,
                           const DcWitness *witness = nullptr);

struct StationarityMeasure {
  StationarityTriple triple;
  ResidualBreakdown breakdown;
  /// True when the minimum over (y, z) is provably attained by the
  /// candidates examined (scalar separable-type h).
  bool exact = false;
};

/// Minimizes the residual over y for z in {F(x)} + kink snaps + extra_z
/// (smooth mode). Each y-minimization is a small convex QP.
StationarityMeasure stationarity_measure(const CompositeProblem &problem, const Vec &x,
                                         const std::vector<Vec> &extra_z = {});

/// Best y for a fixed (x, z) in smooth mode.
Vec best_multiplier(const CompositeProblem &problem, const Vec &x, const Vec &z);

struct MultiplierRecord {
  Vec y;
  bool residual_passed = true;
};

struct MultiplierReport {
  std::vector<double> norms;
  double threshold = 0.0;
  bool divergent = false;
  /// Index of the first record exceeding the threshold with a passing
  /// residual, or -1.
  int first_flag = -1;
  nlohmann::json to_json() const;
};

/// Default threshold is 1e6 * (1 + |y_0|).
MultiplierReport multiplier_diagnostics(const std::vector<MultiplierRecord> &seq,
                                        std::optional<double> threshold = std::nullopt);

} // namespace compopt
