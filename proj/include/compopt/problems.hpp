#pragma once

#include "compopt/outer_loop.hpp"
#include "compopt/problem.hpp"

#include <map>
#include <optional>
#include <string>
#include <vector>

namespace compopt {

using Params = std::map<std::string, double>;

/// Which solvers an instance satisfies the standing assumptions of.
struct InstanceFlags {
  bool bundle = false;
  bool structured = false;
  bool dc = false;
  bool proximal_distance = false;
};

struct Instance {
  std::string name;
  std::string description;
  CompositeProblem problem;
  Vec x0;
  InstanceFlags flags;
  Params params;
  /// Global approximation family and the inner solver it is meant for.
  std::optional<ApproximationFamily> family;
  InnerSolver family_inner = InnerSolver::Bundle;
  /// Box scanned by the grid oracle (n <= 2).
  std::optional<std::pair<Vec, Vec>> grid_box;
  /// Numeric data is synthetic rather than taken from an application.
  bool synthetic = false;
};

std::vector<std::string> instance_names();
/// Unknown names or parameter keys raise RegistryError.
Instance build_instance(const std::string &name, const Params &params = {});

/// The smooth pieces behind the buffered instance's mapping, one group per
/// (scenario, cut set) in scenario-major order.
std::vector<LseGroup> buffered_groups();

/// Sampled checks of the instance's assumption flags: convexity and
/// gradient consistency of f0, Jacobian consistency and half-Lipschitz
/// constants of F, convexity/Lipschitz/monotonicity of h, convexity of the
/// DC parts.
struct FlagReport {
  bool passed = true;
  std::vector<std::string> failures;
};
FlagReport certify_flags(const Instance &inst, unsigned long seed = 7, int samples = 200);

/// Brute-force residual reference on a 1-D or 2-D grid.
struct GridSpec {
  Vec lo;
  Vec hi;
  double step = 1e-3;
  /// Points whose residual is at most `tol` are reported as stationary.
  double tol = 1e-2;
};

struct GridResult {
  std::vector<Vec> points;
  std::vector<double> residuals;
  /// Grid points with residual <= tol.
  std::vector<Vec> stationary;
  /// Lowest-residual point of each connected run of stationary points.
  std::vector<Vec> representatives;
};

/// Minimal residual at x over a discretized (y, z) search with local
/// refinement; independent of the QP-based stationarity measure.
double grid_residual(const CompositeProblem &problem, const Vec &x, DMode mode);

GridResult grid_oracle(const CompositeProblem &problem, const GridSpec &spec, DMode mode);

} // namespace compopt
