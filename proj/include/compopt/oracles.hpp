#pragma once

#include "compopt/common.hpp"
#include "compopt/convex_program.hpp"

#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace compopt {

/// Real-valued smooth function on R^n.
struct SmoothFunction {
  Eigen::Index dim = 0;
  std::function<double(const Vec &)> value;
  std::function<Vec(const Vec &)> gradient;
  /// Optional; masters need either this or `quadratic`.
  std::function<Mat(const Vec &)> hessian;
  std::optional<Quadratic> quadratic;
  bool convex = false;
  std::optional<double> grad_lipschitz;

  static SmoothFunction zero(Eigen::Index n);
  /// 0.5 x'Qx + q'x + c.
  static SmoothFunction from_quadratic(const Mat &Q, const Vec &q, double c);

  bool has_second_order() const { return quadratic.has_value() || bool(hessian); }
  Mat hessian_at(const Vec &x) const;
};

/// Smooth mapping F: R^n -> R^m with per-component constants L_i such that
/// |grad f_i(x) - grad f_i(x')| <= (L_i / 2) |x - x'| on X.
struct VectorMapping {
  Eigen::Index n = 0;
  Eigen::Index m = 0;
  std::function<Vec(const Vec &)> value;
  std::function<Mat(const Vec &)> jacobian;
  std::vector<std::optional<double>> component_L;
};

/// sqrt(sum L_i^2). Throws ConfigurationError if some L_i is missing.
double mapping_lipschitz(const VectorMapping &F);

/// Convex function given in one of three forms. Only the first two can
/// appear inside a convex master problem.
struct ConvexPart {
  enum class Kind { Smooth, Polyhedral, Oracle };
  Kind kind = Kind::Oracle;
  Eigen::Index dim = 0;
  SmoothFunction smooth;
  /// Polyhedral form: max_l (rows(l) . x + offsets(l)).
  Mat rows;
  Vec offsets;
  std::function<double(const Vec &)> oracle_value;
  std::function<Vec(const Vec &)> oracle_subgradient;

  static ConvexPart from_smooth(SmoothFunction f);
  static ConvexPart polyhedral(Mat rows, Vec offsets);
  static ConvexPart oracle(Eigen::Index n, std::function<double(const Vec &)> v,
                           std::function<Vec(const Vec &)> s);

  double value(const Vec &x) const;
  Vec subgradient(const Vec &x) const;
};

/// f = f1 - f2 with both parts convex.
struct DcComponent {
  ConvexPart f1;
  ConvexPart f2;
  double value(const Vec &x) const { return f1.value(x) - f2.value(x); }
};

class FeasibleSet {
public:
  enum class Kind { Whole, Box, Ball, Halfspaces, FinitePoints };

  static FeasibleSet whole(Eigen::Index n);
  static FeasibleSet box(Vec lo, Vec hi);
  static FeasibleSet ball(Vec center, double radius);
  /// { x : G x <= h }; must be nonempty.
  static FeasibleSet halfspaces(Mat G, Vec h);
  /// Columns of `points` are the elements.
  static FeasibleSet finite_points(Mat points);

  Kind kind() const { return kind_; }
  std::string kind_name() const;
  Eigen::Index dim() const { return n_; }
  bool is_convex() const { return kind_ != Kind::FinitePoints; }

  const Vec &lower() const { return lo_; }
  const Vec &upper() const { return hi_; }
  const Vec &center() const { return center_; }
  double radius() const { return radius_; }
  const Mat &G() const { return G_; }
  const Vec &h() const { return h_; }
  const Mat &points() const { return points_; }

  bool contains(const Vec &x, double tol) const;
  bool contains(const Vec &x) const { return contains(x, feasibility_tolerance(x)); }

  /// Euclidean projection. Ties on finite point sets go to the
  /// lexicographically smallest minimizer.
  Vec project(const Vec &x) const;

  /// Generators of N_X(x) (columns); N_X(x) is their nonnegative hull.
  /// Only for convex kinds.
  Mat normal_generators(const Vec &x) const;

  /// min over n in N_X(x) of |v + n|.
  double tangent_residual(const Vec &x, const Vec &v) const;

  /// Appends the constraint x_hat + w.head(n) in X to `prog`.
  void append_step_constraints(ConvexProgram &prog, const Vec &x_hat) const;

private:
  Kind kind_ = Kind::Whole;
  Eigen::Index n_ = 0;
  Vec lo_, hi_, center_, h_;
  double radius_ = 0.0;
  Mat G_, points_;
};

/// Distance-squared to the nearest element of a finite set, with the DC
/// split dist^2(x, K) = |x|^2 - max_{u in K} (2<x,u> - |u|^2).
DcComponent distance_squared_dc(const FeasibleSet &K);

struct FdCheck {
  double max_rel_error = 0.0;
  bool passed = true;
};

/// Central differences against the oracle gradient.
FdCheck check_gradient(const SmoothFunction &f, const Vec &x, double step = 1e-6,
                       double rel_tol = 1e-4);
FdCheck check_jacobian(const VectorMapping &F, const Vec &x, double step = 1e-6,
                       double rel_tol = 1e-4);

} // namespace compopt
