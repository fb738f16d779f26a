#pragma once

#include "compopt/common.hpp"

#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace compopt {

/// { g0 + W theta : C theta <= d, A theta = b }, always bounded.
struct SubdiffPolytope {
  Vec g0;
  Mat W;
  Mat C;
  Vec d;
  Mat A;
  Vec b;

  Eigen::Index dim() const { return g0.size(); }
  Eigen::Index nparam() const { return W.cols(); }
  static SubdiffPolytope point(const Vec &g);
  /// Product of intervals [lo_i, hi_i].
  static SubdiffPolytope box(const Vec &lo, const Vec &hi);
};

/// Euclidean distance from y to the polytope (small QP).
double polytope_distance(const SubdiffPolytope &P, const Vec &y);

/// h(z) = min_u { a'z + c'u : B z - E u <= g }.
struct PolyEpigraph {
  Vec a;
  Vec c;
  Mat B;
  Mat E;
  Vec g;

  Eigen::Index dim() const { return a.size(); }
  Eigen::Index naux() const { return c.size(); }
};

struct SubdiffDistance {
  double distance = 0.0;
  bool exact = true;
};

/// Convex outer function h: R^m -> R (or the indicator-valued
/// separable variant, which may return +inf).
class OuterFunction {
public:
  virtual ~OuterFunction() = default;

  virtual std::string variant() const = 0;
  virtual Eigen::Index dim() const = 0;
  virtual double value(const Vec &z) const = 0;
  virtual Vec subgradient(const Vec &z) const = 0;
  virtual SubdiffDistance subdiff_distance(const Vec &z, const Vec &y) const;
  /// Throws ConfigurationError if no bound is available.
  virtual double lipschitz_bound() const = 0;
  /// True when the bound is an overestimate rather than a tight constant.
  virtual bool lipschitz_conservative() const { return false; }
  virtual bool monotone() const = 0;
  virtual std::optional<SubdiffPolytope> subdiff_polytope(const Vec &z) const {
    (void)z;
    return std::nullopt;
  }
  virtual std::optional<PolyEpigraph> epigraph() const { return std::nullopt; }
  /// Nearby points on the nonsmooth locus, used when choosing witnesses z.
  virtual std::vector<Vec> kink_snaps(const Vec &z) const {
    (void)z;
    return {};
  }
  /// Scalar break points per coordinate for separable variants (empty
  /// otherwise); used by the brute-force grid oracle.
  virtual std::vector<double> coordinate_kinks() const { return {}; }

protected:
  void check(const Vec &z, const char *what) const { require_dim(z, dim(), what); }
};

using OuterPtr = std::shared_ptr<const OuterFunction>;

/// sum a_i z_i + sum b_i max{0, z_i}; b_i = +inf encodes the indicator of
/// z_i <= 0 (added to a_i z_i).
OuterPtr make_separable_pwl(Vec a, Vec b);
/// rho * max{0, w'z}.
OuterPtr make_scaled_hinge(double rho, Vec w);
/// max over the capped simplex { pi : sum pi = 1, 0 <= pi_i <= p_i/(1-alpha) }
/// of sum_i pi_i max_j u_ij, with u laid out scenario-major (u_i1..u_iq).
OuterPtr make_capped_simplex_support(Vec p, double alpha, Eigen::Index q);
/// sum |z_i|.
OuterPtr make_abs(Eigen::Index m);
/// max_i z_i.
OuterPtr make_max(Eigen::Index m);
OuterPtr make_generic(Eigen::Index m, std::function<double(const Vec &)> value,
                      std::function<Vec(const Vec &)> subgradient,
                      std::optional<double> lipschitz, bool monotone);
/// h0 o (h_1, ..., h_d); h0 must be nondecreasing.
OuterPtr make_composed(OuterPtr h0, std::vector<OuterPtr> components,
                       std::optional<double> lipschitz_override = std::nullopt);

/// Accessors for variants whose parameters other modules need.
struct ComposedView {
  OuterPtr h0;
  std::vector<OuterPtr> components;
};
std::optional<ComposedView> as_composed(const OuterFunction &h);

struct SeparableView {
  Vec a;
  Vec b;
};
std::optional<SeparableView> as_separable(const OuterFunction &h);

/// Closed-form maximizer of pi'v over the capped simplex (sorting).
Vec capped_simplex_argmax(const Vec &v, const Vec &caps);

/// Euclidean projection onto the unit simplex.
Vec project_simplex(const Vec &y);

} // namespace compopt
