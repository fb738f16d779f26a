#pragma once

#include "compopt/oracles.hpp"
#include "compopt/outer_function.hpp"

#include <optional>
#include <string>
#include <vector>

namespace compopt {

/// Penalty structure sum_i (rho_i / 2) dist^2(x, K_i).
struct DistanceStructure {
  std::vector<FeasibleSet> sets;
  Vec rho;
};

/// minimize f0(x) + h(F(x)) over X. F is either a smooth mapping (bundle
/// method) or a list of DC components (DC methods); both may be present.
struct CompositeProblem {
  std::string name;
  FeasibleSet X = FeasibleSet::whole(1);
  SmoothFunction f0 = SmoothFunction::zero(1);
  OuterPtr h;
  std::optional<VectorMapping> F;
  std::vector<DcComponent> dc;
  std::optional<DistanceStructure> distance;
  /// False when Lipschitz constants are estimates rather than valid bounds.
  bool constants_exact = true;

  Eigen::Index n() const { return X.dim(); }
  Eigen::Index m() const { return h ? h->dim() : 0; }
  bool has_smooth_map() const { return F.has_value(); }
  bool has_dc() const { return !dc.empty(); }

  Vec map_value(const Vec &x) const {
    if (F) return F->value(x);
    Vec z(static_cast<Eigen::Index>(dc.size()));
    for (size_t i = 0; i < dc.size(); ++i) z(static_cast<Eigen::Index>(i)) = dc[i].value(x);
    return z;
  }
  double objective(const Vec &x) const { return f0.value(x) + h->value(map_value(x)); }
  void validate() const;
};

} // namespace compopt
