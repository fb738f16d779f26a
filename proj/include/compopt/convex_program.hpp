#pragma once

#include "compopt/common.hpp"

#include <functional>
#include <vector>

namespace compopt {

/// Twice differentiable convex function of the full decision vector.
struct SmoothTerm {
  std::function<double(const Vec &)> value;
  std::function<Vec(const Vec &)> gradient;
  std::function<Mat(const Vec &)> hessian;
};

/// Quadratic function 0.5 w'Qw + q'w + c (Q symmetric PSD).
struct Quadratic {
  Mat Q;
  Vec q;
  double c = 0.0;

  double value(const Vec &w) const { return 0.5 * w.dot(Q * w) + q.dot(w) + c; }
  Vec gradient(const Vec &w) const { return Q * w + q; }
  SmoothTerm as_term() const;
};

/// minimize   0.5 w'Pw + q'w + sum_k phi_k(w)
/// subject to C w <= d,  g_i(w) <= 0,  A w = b.
///
/// All phi_k and g_i must be convex.
struct ConvexProgram {
  explicit ConvexProgram(Eigen::Index nvar);

  Eigen::Index nvar;
  Mat P;
  Vec q;
  std::vector<SmoothTerm> objective_terms;
  Mat C;
  Vec d;
  std::vector<SmoothTerm> constraints;
  Mat A;
  Vec b;

  void add_linear_inequality(const Vec &row, double rhs);
  void add_equality(const Vec &row, double rhs);
  void add_quadratic_constraint(const Quadratic &g);
  void add_objective_term(SmoothTerm t) { objective_terms.push_back(std::move(t)); }

  Eigen::Index num_linear() const { return C.rows(); }
  Eigen::Index num_nonlinear() const {
    return static_cast<Eigen::Index>(constraints.size());
  }
  bool is_qp() const { return objective_terms.empty() && constraints.empty(); }

  double objective(const Vec &w) const;
  Vec objective_gradient(const Vec &w) const;
  /// Stacked inequality values [Cw - d; g(w)].
  Vec inequality_values(const Vec &w) const;
  Mat inequality_jacobian(const Vec &w) const;
};

struct ConvexProgramOptions {
  double tol = 1e-12;
  int max_iter = 200;
  bool polish = true;
};

struct ConvexProgramSolution {
  Vec w;
  /// Multipliers of the linear rows, then of the nonlinear constraints.
  Vec lambda;
  Vec nu;
  double kkt_residual = kInf;
  int iterations = 0;
  bool converged = false;
  bool polished = false;
};

/// Primal-dual interior point (Mehrotra predictor-corrector) followed, for
/// pure QPs, by an equality-constrained solve on the identified active set.
ConvexProgramSolution solve(const ConvexProgram &prog,
                            const ConvexProgramOptions &opts = {},
                            const Vec *w0 = nullptr);

/// Max-norm KKT residual of (w, lambda, nu), recomputed from the data.
double kkt_residual(const ConvexProgram &prog, const Vec &w, const Vec &lambda,
                    const Vec &nu);

/// Scale used to make KKT tolerances relative.
double data_scale(const ConvexProgram &prog);

} // namespace compopt
