#include "compopt/oracles.hpp"

#include <algorithm>

namespace compopt {

SmoothFunction SmoothFunction::zero(Eigen::Index n) {
  return from_quadratic(Mat::Zero(n, n), Vec::Zero(n), 0.0);
}

SmoothFunction SmoothFunction::from_quadratic(const Mat &Q, const Vec &q,
                                              double c) {
  if (Q.rows() != Q.cols() || Q.rows() != q.size())
    throw InvalidInput("from_quadratic: dimension mismatch");
  Quadratic quad{0.5 * (Q + Q.transpose()), q, c};
  SmoothFunction f;
  f.dim = q.size();
  f.value = [quad](const Vec &x) { return quad.value(x); };
  f.gradient = [quad](const Vec &x) { return quad.gradient(x); };
  f.hessian = [quad](const Vec &) { return quad.Q; };
  f.quadratic = quad;
  Eigen::SelfAdjointEigenSolver<Mat> es(quad.Q, Eigen::EigenvaluesOnly);
  f.convex = q.size() == 0 || es.eigenvalues().minCoeff() >= -1e-12;
  f.grad_lipschitz = q.size() ? es.eigenvalues().cwiseAbs().maxCoeff() : 0.0;
  return f;
}

Mat SmoothFunction::hessian_at(const Vec &x) const {
  if (quadratic) return quadratic->Q;
  if (hessian) return hessian(x);
  throw ConfigurationError("smooth function has no second-order information");
}

double mapping_lipschitz(const VectorMapping &F) {
  if (static_cast<Eigen::Index>(F.component_L.size()) != F.m)
    throw ConfigurationError("mapping_lipschitz: component constants missing");
  double s = 0.0;
  for (const auto &L : F.component_L) {
    if (!L) throw ConfigurationError("mapping_lipschitz: component constant missing");
    if (*L < 0) throw ConfigurationError("mapping_lipschitz: negative constant");
    s += (*L) * (*L);
  }
  return std::sqrt(s);
}

ConvexPart ConvexPart::from_smooth(SmoothFunction f) {
  ConvexPart p;
  p.kind = Kind::Smooth;
  p.dim = f.dim;
  p.smooth = std::move(f);
  return p;
}

ConvexPart ConvexPart::polyhedral(Mat rows, Vec offsets) {
  if (rows.rows() != offsets.size() || rows.rows() == 0)
    throw InvalidInput("polyhedral part: need matching nonempty pieces");
  ConvexPart p;
  p.kind = Kind::Polyhedral;
  p.dim = rows.cols();
  p.rows = std::move(rows);
  p.offsets = std::move(offsets);
  return p;
}

ConvexPart ConvexPart::oracle(Eigen::Index n, std::function<double(const Vec &)> v,
                              std::function<Vec(const Vec &)> s) {
  ConvexPart p;
  p.kind = Kind::Oracle;
  p.dim = n;
  p.oracle_value = std::move(v);
  p.oracle_subgradient = std::move(s);
  return p;
}

double ConvexPart::value(const Vec &x) const {
  switch (kind) {
  case Kind::Smooth:
    return smooth.value(x);
  case Kind::Polyhedral:
    return (rows * x + offsets).maxCoeff();
  case Kind::Oracle:
    return oracle_value(x);
  }
  return 0.0;
}

Vec ConvexPart::subgradient(const Vec &x) const {
  switch (kind) {
  case Kind::Smooth:
    return smooth.gradient(x);
  case Kind::Polyhedral: {
    // Average of the maximizing pieces.
    Vec vals = rows * x + offsets;
    const double top = vals.maxCoeff();
    const double tol = 1e-14 * (1.0 + std::abs(top));
    Vec g = Vec::Zero(dim);
    int cnt = 0;
    for (Eigen::Index l = 0; l < vals.size(); ++l)
      if (vals(l) >= top - tol) {
        g += rows.row(l).transpose();
        ++cnt;
      }
    return g / cnt;
  }
  case Kind::Oracle:
    return oracle_subgradient(x);
  }
  return Vec();
}

FeasibleSet FeasibleSet::whole(Eigen::Index n) {
  if (n <= 0) throw InvalidInput("whole: dimension must be positive");
  FeasibleSet s;
  s.kind_ = Kind::Whole;
  s.n_ = n;
  return s;
}

FeasibleSet FeasibleSet::box(Vec lo, Vec hi) {
  if (lo.size() != hi.size() || lo.size() == 0)
    throw InvalidInput("box: bound dimensions differ");
  if ((lo.array() > hi.array()).any()) throw InvalidInput("box: empty");
  FeasibleSet s;
  s.kind_ = Kind::Box;
  s.n_ = lo.size();
  s.lo_ = std::move(lo);
  s.hi_ = std::move(hi);
  return s;
}

FeasibleSet FeasibleSet::ball(Vec center, double radius) {
  if (center.size() == 0 || !(radius >= 0))
    throw InvalidInput("ball: bad center or radius");
  FeasibleSet s;
  s.kind_ = Kind::Ball;
  s.n_ = center.size();
  s.center_ = std::move(center);
  s.radius_ = radius;
  return s;
}

FeasibleSet FeasibleSet::halfspaces(Mat G, Vec h) {
  if (G.rows() != h.size() || G.cols() == 0)
    throw InvalidInput("halfspaces: dimension mismatch");
  FeasibleSet s;
  s.kind_ = Kind::Halfspaces;
  s.n_ = G.cols();
  s.G_ = std::move(G);
  s.h_ = std::move(h);
  return s;
}

FeasibleSet FeasibleSet::finite_points(Mat points) {
  if (points.cols() == 0 || points.rows() == 0)
    throw InvalidInput("finite_points: empty set");
  FeasibleSet s;
  s.kind_ = Kind::FinitePoints;
  s.n_ = points.rows();
  s.points_ = std::move(points);
  return s;
}

std::string FeasibleSet::kind_name() const {
  switch (kind_) {
  case Kind::Whole: return "whole-space";
  case Kind::Box: return "box";
  case Kind::Ball: return "euclidean-ball";
  case Kind::Halfspaces: return "halfspace-intersection";
  case Kind::FinitePoints: return "finite-point-set";
  }
  return "?";
}

bool FeasibleSet::contains(const Vec &x, double tol) const {
  require_dim(x, n_, "contains");
  switch (kind_) {
  case Kind::Whole:
    return x.allFinite();
  case Kind::Box:
    return ((x - hi_).array() <= tol).all() && ((lo_ - x).array() <= tol).all();
  case Kind::Ball:
    return (x - center_).norm() <= radius_ + tol;
  case Kind::Halfspaces:
    return ((G_ * x - h_).array() <= tol).all();
  case Kind::FinitePoints:
    for (Eigen::Index j = 0; j < points_.cols(); ++j)
      if ((points_.col(j) - x).norm() <= tol) return true;
    return false;
  }
  return false;
}

namespace {

bool lex_less(const Vec &a, const Vec &b) {
  for (Eigen::Index i = 0; i < a.size(); ++i) {
    if (a(i) < b(i)) return true;
    if (a(i) > b(i)) return false;
  }
  return false;
}

} // namespace

Vec FeasibleSet::project(const Vec &x) const {
  require_dim(x, n_, "project");
  require_finite(x, "project");
  switch (kind_) {
  case Kind::Whole:
    return x;
  case Kind::Box:
    return x.cwiseMax(lo_).cwiseMin(hi_);
  case Kind::Ball: {
    Vec r = x - center_;
    const double nr = r.norm();
    if (nr <= radius_) return x;
    return center_ + (radius_ / nr) * r;
  }
  case Kind::Halfspaces: {
    if (((G_ * x - h_).array() <= 0).all()) return x;
    ConvexProgram prog(n_);
    prog.P = Mat::Identity(n_, n_);
    prog.q = -x;
    for (Eigen::Index i = 0; i < G_.rows(); ++i)
      prog.add_linear_inequality(G_.row(i).transpose(), h_(i));
    auto sol = solve(prog);
    if (!sol.converged) throw MasterFailure("halfspace projection did not converge");
    return sol.w;
  }
  case Kind::FinitePoints: {
    Eigen::Index best = 0;
    double bd = (points_.col(0) - x).squaredNorm();
    for (Eigen::Index j = 1; j < points_.cols(); ++j) {
      const double dj = (points_.col(j) - x).squaredNorm();
      if (dj < bd || (dj == bd && lex_less(points_.col(j), points_.col(best)))) {
        best = j;
        bd = dj;
      }
    }
    return points_.col(best);
  }
  }
  return x;
}

Mat FeasibleSet::normal_generators(const Vec &x) const {
  require_dim(x, n_, "normal_generators");
  const double tol = feasibility_tolerance(x);
  if (!contains(x, tol)) throw InfeasiblePoint("normal cone requested at infeasible point");
  std::vector<Vec> cols;
  switch (kind_) {
  case Kind::Whole:
    break;
  case Kind::Box:
    for (Eigen::Index i = 0; i < n_; ++i) {
      if (x(i) >= hi_(i) - tol) cols.push_back(Vec::Unit(n_, i));
      if (x(i) <= lo_(i) + tol) cols.push_back(-Vec::Unit(n_, i));
    }
    break;
  case Kind::Ball: {
    Vec r = x - center_;
    if (r.norm() >= radius_ - tol) {
      if (radius_ == 0.0) {
        for (Eigen::Index i = 0; i < n_; ++i) {
          cols.push_back(Vec::Unit(n_, i));
          cols.push_back(-Vec::Unit(n_, i));
        }
      } else {
        cols.push_back(r / r.norm());
      }
    }
    break;
  }
  case Kind::Halfspaces:
    for (Eigen::Index i = 0; i < G_.rows(); ++i)
      if (G_.row(i).dot(x) >= h_(i) - tol) cols.push_back(G_.row(i).transpose());
    break;
  case Kind::FinitePoints:
    throw Unsupported("normal cone of a finite point set is not supported");
  }
  Mat N(n_, static_cast<Eigen::Index>(cols.size()));
  for (size_t j = 0; j < cols.size(); ++j) N.col(static_cast<Eigen::Index>(j)) = cols[j];
  return N;
}

double FeasibleSet::tangent_residual(const Vec &x, const Vec &v) const {
  require_dim(v, n_, "tangent_residual");
  const double tol = feasibility_tolerance(x);
  if (!contains(x, tol)) throw InfeasiblePoint("tangent_residual: x not in set");
  switch (kind_) {
  case Kind::Whole:
    return v.norm();
  case Kind::Box: {
    // Componentwise: normals n_i >= 0 at the upper face, <= 0 at the lower face.
    double s = 0.0;
    for (Eigen::Index i = 0; i < n_; ++i) {
      const bool up = x(i) >= hi_(i) - tol;
      const bool low = x(i) <= lo_(i) + tol;
      double r = v(i);
      if (up && low) r = 0.0;
      else if (up) r = std::max(r, 0.0);
      else if (low) r = std::min(r, 0.0);
      s += r * r;
    }
    return std::sqrt(s);
  }
  case Kind::Ball: {
    Mat N = normal_generators(x);
    if (N.cols() == 0) return v.norm();
    if (N.cols() == 1) {
      const double a = std::max(0.0, -v.dot(N.col(0)));
      return (v + a * N.col(0)).norm();
    }
    return 0.0; // degenerate radius 0: normal cone is everything
  }
  case Kind::Halfspaces: {
    Mat N = normal_generators(x);
    if (N.cols() == 0) return v.norm();
    ConvexProgram prog(N.cols());
    prog.P = N.transpose() * N;
    prog.q = N.transpose() * v;
    for (Eigen::Index j = 0; j < N.cols(); ++j)
      prog.add_linear_inequality(-Vec::Unit(N.cols(), j), 0.0);
    auto sol = solve(prog);
    Vec mu = sol.w.cwiseMax(0.0);
    return (v + N * mu).norm();
  }
  case Kind::FinitePoints:
    throw Unsupported("tangent_residual on a finite point set");
  }
  return v.norm();
}

void FeasibleSet::append_step_constraints(ConvexProgram &prog,
                                          const Vec &x_hat) const {
  require_dim(x_hat, n_, "append_step_constraints");
  if (prog.nvar < n_) throw InvalidInput("append_step_constraints: too few variables");
  auto row = [&](const Vec &a) {
    Vec r = Vec::Zero(prog.nvar);
    r.head(n_) = a;
    return r;
  };
  switch (kind_) {
  case Kind::Whole:
    return;
  case Kind::Box:
    for (Eigen::Index i = 0; i < n_; ++i) {
      if (std::isfinite(hi_(i)))
        prog.add_linear_inequality(row(Vec::Unit(n_, i)), hi_(i) - x_hat(i));
      if (std::isfinite(lo_(i)))
        prog.add_linear_inequality(row(-Vec::Unit(n_, i)), x_hat(i) - lo_(i));
    }
    return;
  case Kind::Halfspaces:
    for (Eigen::Index i = 0; i < G_.rows(); ++i)
      prog.add_linear_inequality(row(G_.row(i).transpose()),
                                 h_(i) - G_.row(i).dot(x_hat));
    return;
  case Kind::Ball: {
    Quadratic g;
    g.Q = Mat::Zero(prog.nvar, prog.nvar);
    g.Q.topLeftCorner(n_, n_) = 2.0 * Mat::Identity(n_, n_);
    g.q = row(2.0 * (x_hat - center_));
    g.c = (x_hat - center_).squaredNorm() - radius_ * radius_;
    prog.add_quadratic_constraint(g);
    return;
  }
  case Kind::FinitePoints:
    throw Unsupported("a finite point set cannot be a solver feasible set");
  }
}

DcComponent distance_squared_dc(const FeasibleSet &K) {
  if (K.kind() != FeasibleSet::Kind::FinitePoints)
    throw InvalidInput("distance_squared_dc expects a finite point set");
  const Eigen::Index n = K.dim();
  DcComponent c;
  c.f1 = ConvexPart::from_smooth(
      SmoothFunction::from_quadratic(2.0 * Mat::Identity(n, n), Vec::Zero(n), 0.0));
  c.f2 = ConvexPart::oracle(
      n,
      [K](const Vec &x) {
        Vec u = K.project(x);
        return 2.0 * x.dot(u) - u.squaredNorm();
      },
      [K](const Vec &x) { return Vec(2.0 * K.project(x)); });
  return c;
}

FdCheck check_gradient(const SmoothFunction &f, const Vec &x, double step,
                       double rel_tol) {
  FdCheck out;
  Vec g = f.gradient(x);
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    Vec xp = x, xm = x;
    xp(i) += step;
    xm(i) -= step;
    const double fd = (f.value(xp) - f.value(xm)) / (2 * step);
    const double err = std::abs(fd - g(i)) / std::max(1.0, std::abs(g(i)));
    out.max_rel_error = std::max(out.max_rel_error, err);
  }
  out.passed = out.max_rel_error <= rel_tol;
  return out;
}

FdCheck check_jacobian(const VectorMapping &F, const Vec &x, double step,
                       double rel_tol) {
  FdCheck out;
  Mat J = F.jacobian(x);
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    Vec xp = x, xm = x;
    xp(i) += step;
    xm(i) -= step;
    Vec fd = (F.value(xp) - F.value(xm)) / (2 * step);
    for (Eigen::Index r = 0; r < F.m; ++r) {
      const double err = std::abs(fd(r) - J(r, i)) / std::max(1.0, std::abs(J(r, i)));
      out.max_rel_error = std::max(out.max_rel_error, err);
    }
  }
  out.passed = out.max_rel_error <= rel_tol;
  return out;
}

} // namespace compopt
