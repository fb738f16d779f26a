#include "compopt/convex_program.hpp"

#include <algorithm>

namespace compopt {

SmoothTerm Quadratic::as_term() const {
  Quadratic self = *this;
  return SmoothTerm{[self](const Vec &w) { return self.value(w); },
                    [self](const Vec &w) { return self.gradient(w); },
                    [self](const Vec &) { return self.Q; }};
}

ConvexProgram::ConvexProgram(Eigen::Index n)
    : nvar(n), P(Mat::Zero(n, n)), q(Vec::Zero(n)), C(0, n), d(0), A(0, n),
      b(0) {
  if (n <= 0) throw InvalidInput("ConvexProgram: need at least one variable");
}

void ConvexProgram::add_linear_inequality(const Vec &row, double rhs) {
  require_dim(row, nvar, "add_linear_inequality");
  C.conservativeResize(C.rows() + 1, nvar);
  C.row(C.rows() - 1) = row.transpose();
  d.conservativeResize(d.size() + 1);
  d(d.size() - 1) = rhs;
}

void ConvexProgram::add_equality(const Vec &row, double rhs) {
  require_dim(row, nvar, "add_equality");
  A.conservativeResize(A.rows() + 1, nvar);
  A.row(A.rows() - 1) = row.transpose();
  b.conservativeResize(b.size() + 1);
  b(b.size() - 1) = rhs;
}

void ConvexProgram::add_quadratic_constraint(const Quadratic &g) {
  constraints.push_back(g.as_term());
}

double ConvexProgram::objective(const Vec &w) const {
  double v = 0.5 * w.dot(P * w) + q.dot(w);
  for (const auto &t : objective_terms) v += t.value(w);
  return v;
}

Vec ConvexProgram::objective_gradient(const Vec &w) const {
  Vec g = P * w + q;
  for (const auto &t : objective_terms) g += t.gradient(w);
  return g;
}

Vec ConvexProgram::inequality_values(const Vec &w) const {
  Vec G(num_linear() + num_nonlinear());
  if (num_linear()) G.head(num_linear()) = C * w - d;
  for (Eigen::Index i = 0; i < num_nonlinear(); ++i)
    G(num_linear() + i) = constraints[i].value(w);
  return G;
}

Mat ConvexProgram::inequality_jacobian(const Vec &w) const {
  Mat J(num_linear() + num_nonlinear(), nvar);
  if (num_linear()) J.topRows(num_linear()) = C;
  for (Eigen::Index i = 0; i < num_nonlinear(); ++i)
    J.row(num_linear() + i) = constraints[i].gradient(w).transpose();
  return J;
}

double data_scale(const ConvexProgram &prog) {
  double s = 1.0;
  if (prog.q.size()) s = std::max(s, prog.q.lpNorm<Eigen::Infinity>());
  if (prog.d.size()) s = std::max(s, prog.d.lpNorm<Eigen::Infinity>());
  if (prog.b.size()) s = std::max(s, prog.b.lpNorm<Eigen::Infinity>());
  return s;
}

double kkt_residual(const ConvexProgram &prog, const Vec &w, const Vec &lambda,
                    const Vec &nu) {
  Vec G = prog.inequality_values(w);
  Mat J = prog.inequality_jacobian(w);
  Vec rd = prog.objective_gradient(w);
  if (G.size()) rd += J.transpose() * lambda;
  if (prog.A.rows()) rd += prog.A.transpose() * nu;
  double r = rd.lpNorm<Eigen::Infinity>();
  for (Eigen::Index i = 0; i < G.size(); ++i) {
    r = std::max(r, std::max(G(i), 0.0));
    r = std::max(r, std::max(-lambda(i), 0.0));
    r = std::max(r, std::abs(lambda(i) * G(i)));
  }
  if (prog.A.rows())
    r = std::max(r, (prog.A * w - prog.b).lpNorm<Eigen::Infinity>());
  return r;
}

namespace {

Mat lagrangian_hessian(const ConvexProgram &prog, const Vec &w,
                       const Vec &lambda) {
  Mat H = prog.P;
  for (const auto &t : prog.objective_terms) H += t.hessian(w);
  for (Eigen::Index i = 0; i < prog.num_nonlinear(); ++i)
    H += lambda(prog.num_linear() + i) * prog.constraints[i].hessian(w);
  return H;
}

double max_step(const Vec &v, const Vec &dv) {
  double a = 1.0;
  for (Eigen::Index i = 0; i < v.size(); ++i)
    if (dv(i) < 0) a = std::min(a, -v(i) / dv(i));
  return a;
}

struct NewtonSystem {
  Mat M;
  bool has_eq = false;
  Eigen::LDLT<Mat> ldlt;
  Eigen::ColPivHouseholderQR<Mat> qr;
  bool use_qr = false;
  Eigen::Index n = 0;

  void factor(const Mat &reduced, const Mat &A) {
    n = reduced.rows();
    has_eq = A.rows() > 0;
    if (!has_eq) {
      M = reduced;
      ldlt.compute(M);
      use_qr = ldlt.info() != Eigen::Success || !ldlt.isPositive();
      if (use_qr) qr.compute(M);
      return;
    }
    const Eigen::Index p = A.rows();
    M = Mat::Zero(n + p, n + p);
    M.topLeftCorner(n, n) = reduced;
    M.topRightCorner(n, p) = A.transpose();
    M.bottomLeftCorner(p, n) = A;
    use_qr = true;
    qr.compute(M);
  }

  Vec solve(const Vec &rhs) const {
    return use_qr ? Vec(qr.solve(rhs)) : Vec(ldlt.solve(rhs));
  }
};

// Equality-constrained solve on a guessed active set. Returns false when the
// guess is inconsistent with the KKT conditions.
bool polish_active_set(const ConvexProgram &prog, double tol,
                       ConvexProgramSolution &sol) {
  const Eigen::Index n = prog.nvar;
  const Eigen::Index m = prog.num_linear();
  const Eigen::Index p = prog.A.rows();
  Vec slack = prog.d - prog.C * sol.w;
  std::vector<Eigen::Index> active;
  for (Eigen::Index i = 0; i < m; ++i)
    if (sol.lambda(i) > slack(i)) active.push_back(i);
  const auto na = static_cast<Eigen::Index>(active.size());

  Mat K = Mat::Zero(n + na + p, n + na + p);
  Vec rhs = Vec::Zero(n + na + p);
  K.topLeftCorner(n, n) = prog.P;
  rhs.head(n) = -prog.q;
  for (Eigen::Index a = 0; a < na; ++a) {
    K.block(0, n + a, n, 1) = prog.C.row(active[a]).transpose();
    K.block(n + a, 0, 1, n) = prog.C.row(active[a]);
    rhs(n + a) = prog.d(active[a]);
  }
  if (p) {
    K.block(0, n + na, n, p) = prog.A.transpose();
    K.block(n + na, 0, p, n) = prog.A;
    rhs.tail(p) = prog.b;
  }
  Eigen::CompleteOrthogonalDecomposition<Mat> cod(K);
  Vec x = cod.solve(rhs);
  if (!x.allFinite()) return false;
  if ((K * x - rhs).lpNorm<Eigen::Infinity>() > tol) return false;

  Vec w = x.head(n);
  Vec lambda = Vec::Zero(m);
  for (Eigen::Index a = 0; a < na; ++a) {
    double l = x(n + a);
    if (l < -tol) return false;
    lambda(active[a]) = std::max(l, 0.0);
  }
  Vec nu = p ? Vec(x.tail(p)) : Vec(0);
  double r = kkt_residual(prog, w, lambda, nu);
  if (r > std::max(sol.kkt_residual, tol)) return false;
  sol.w = w;
  sol.lambda = lambda;
  sol.nu = nu;
  sol.kkt_residual = r;
  sol.polished = true;
  return true;
}

} // namespace

ConvexProgramSolution solve(const ConvexProgram &prog,
                            const ConvexProgramOptions &opts, const Vec *w0) {
  const Eigen::Index n = prog.nvar;
  const Eigen::Index mi = prog.num_linear() + prog.num_nonlinear();
  const Eigen::Index p = prog.A.rows();
  const bool nonlinear = !prog.is_qp();
  const double scale = data_scale(prog);
  const double tol = opts.tol * scale;

  ConvexProgramSolution sol;
  Vec w = w0 ? *w0 : Vec::Zero(n);
  require_dim(w, n, "solve: initial point");
  Vec nu = Vec::Zero(p);
  Vec G = prog.inequality_values(w);
  Vec s = (-G).cwiseMax(1.0);
  Vec lambda = Vec::Ones(mi);

  auto residuals = [&](const Vec &w_, const Vec &s_, const Vec &l_,
                       const Vec &nu_, Vec &rd, Vec &rp, Vec &re) {
    rd = prog.objective_gradient(w_);
    if (mi) rd += prog.inequality_jacobian(w_).transpose() * l_;
    if (p) rd += prog.A.transpose() * nu_;
    rp = mi ? Vec(prog.inequality_values(w_) + s_) : Vec(0);
    re = p ? Vec(prog.A * w_ - prog.b) : Vec(0);
  };
  auto merit = [&](const Vec &rd, const Vec &rp, const Vec &re, const Vec &s_,
                   const Vec &l_) {
    double v = rd.squaredNorm() + rp.squaredNorm() + re.squaredNorm();
    if (mi) v += s_.cwiseProduct(l_).squaredNorm();
    return v;
  };

  Vec rd, rp, re;
  int it = 0;
  for (; it < opts.max_iter; ++it) {
    residuals(w, s, lambda, nu, rd, rp, re);
    const double mu = mi ? s.dot(lambda) / static_cast<double>(mi) : 0.0;
    const double err =
        std::max({rd.size() ? rd.lpNorm<Eigen::Infinity>() : 0.0,
                  rp.size() ? rp.lpNorm<Eigen::Infinity>() : 0.0,
                  re.size() ? re.lpNorm<Eigen::Infinity>() : 0.0, mu});
    if (err <= tol) break;

    Mat H = lagrangian_hessian(prog, w, lambda);
    Mat J = mi ? prog.inequality_jacobian(w) : Mat(0, n);
    Vec D = mi ? Vec(lambda.cwiseQuotient(s)) : Vec(0);
    Mat reduced = H;
    if (mi) reduced += J.transpose() * D.asDiagonal() * J;
    // Tiny diagonal shift keeps the factorization well defined when the
    // objective has no curvature in some direction (epigraph variables).
    const double reg = 1e-14 * (1.0 + reduced.diagonal().cwiseAbs().maxCoeff());
    reduced.diagonal().array() += reg;
    NewtonSystem sys;
    sys.factor(reduced, prog.A);

    auto direction = [&](const Vec &rc, Vec &dw, Vec &ds, Vec &dl, Vec &dnu) {
      Vec top = -rd;
      if (mi) top -= J.transpose() * (D.cwiseProduct(rp) - rc.cwiseQuotient(s));
      Vec rhs(n + p);
      rhs.head(n) = top;
      if (p) rhs.tail(p) = -re;
      Vec x = sys.solve(rhs);
      dw = x.head(n);
      dnu = p ? Vec(x.tail(p)) : Vec(0);
      if (mi) {
        Vec jdw = J * dw;
        ds = -rp - jdw;
        dl = D.cwiseProduct(jdw + rp) - rc.cwiseQuotient(s);
      } else {
        ds.resize(0);
        dl.resize(0);
      }
    };

    Vec dw, ds, dl, dnu;
    if (mi) {
      Vec rc_aff = s.cwiseProduct(lambda);
      direction(rc_aff, dw, ds, dl, dnu);
      double a_aff = std::min(max_step(s, ds), max_step(lambda, dl));
      double mu_aff = (s + a_aff * ds).dot(lambda + a_aff * dl) /
                      static_cast<double>(mi);
      double sigma = std::pow(std::max(mu_aff, 0.0) / std::max(mu, 1e-300), 3);
      sigma = std::min(sigma, 1.0);
      Vec rc = rc_aff + ds.cwiseProduct(dl) -
               Vec::Constant(mi, sigma * mu);
      direction(rc, dw, ds, dl, dnu);
    } else {
      direction(Vec(0), dw, ds, dl, dnu);
    }
    if (!dw.allFinite()) break;

    double alpha = 1.0;
    if (mi) alpha = std::min(1.0, 0.99 * std::min(max_step(s, ds),
                                                  max_step(lambda, dl)));
    if (nonlinear) {
      const double m0 = merit(rd, rp, re, s, lambda);
      for (int ls = 0; ls < 60; ++ls) {
        Vec rd2, rp2, re2;
        Vec s2 = mi ? Vec(s + alpha * ds) : Vec(0);
        Vec l2 = mi ? Vec(lambda + alpha * dl) : Vec(0);
        residuals(w + alpha * dw, s2, l2, nu + alpha * dnu, rd2, rp2, re2);
        if (merit(rd2, rp2, re2, s2, l2) <= (1.0 - 1e-4 * alpha) * m0) break;
        alpha *= 0.5;
      }
    }
    w += alpha * dw;
    if (p) nu += alpha * dnu;
    if (mi) {
      s += alpha * ds;
      lambda += alpha * dl;
      s = s.cwiseMax(1e-300);
      lambda = lambda.cwiseMax(1e-300);
    }
  }

  sol.w = w;
  sol.lambda = lambda;
  sol.nu = nu;
  sol.iterations = it;
  sol.kkt_residual = kkt_residual(prog, w, lambda, nu);
  if (opts.polish && prog.is_qp() && mi > 0)
    polish_active_set(prog, std::max(1e3 * tol, 1e-12), sol);
  sol.converged = sol.kkt_residual <= std::max(1e2 * tol, 1e-10 * scale);
  return sol;
}

} // namespace compopt
