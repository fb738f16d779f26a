#include "compopt/outer_function.hpp"

#include "compopt/convex_program.hpp"

#include <algorithm>
#include <numeric>

namespace compopt {

SubdiffPolytope SubdiffPolytope::point(const Vec &g) {
  SubdiffPolytope P;
  P.g0 = g;
  P.W = Mat::Zero(g.size(), 0);
  P.C = Mat::Zero(0, 0);
  P.d = Vec::Zero(0);
  P.A = Mat::Zero(0, 0);
  P.b = Vec::Zero(0);
  return P;
}

SubdiffPolytope SubdiffPolytope::box(const Vec &lo, const Vec &hi) {
  const Eigen::Index m = lo.size();
  std::vector<Eigen::Index> free;
  for (Eigen::Index i = 0; i < m; ++i)
    if (hi(i) > lo(i)) free.push_back(i);
  const auto k = static_cast<Eigen::Index>(free.size());
  SubdiffPolytope P;
  P.g0 = lo;
  P.W = Mat::Zero(m, k);
  std::vector<std::pair<Eigen::Index, double>> upper;
  for (Eigen::Index j = 0; j < k; ++j) {
    P.W(free[j], j) = 1.0;
    if (std::isfinite(hi(free[j]))) upper.emplace_back(j, hi(free[j]) - lo(free[j]));
  }
  const auto nu = static_cast<Eigen::Index>(upper.size());
  P.C = Mat::Zero(k + nu, k);
  P.d = Vec::Zero(k + nu);
  for (Eigen::Index j = 0; j < k; ++j) P.C(j, j) = -1.0;
  for (Eigen::Index r = 0; r < nu; ++r) {
    P.C(k + r, upper[r].first) = 1.0;
    P.d(k + r) = upper[r].second;
  }
  P.A = Mat::Zero(0, k);
  P.b = Vec::Zero(0);
  return P;
}

double polytope_distance(const SubdiffPolytope &P, const Vec &y) {
  require_dim(y, P.dim(), "polytope_distance");
  const Eigen::Index k = P.nparam();
  if (k == 0) return (P.g0 - y).norm();
  ConvexProgram prog(k);
  prog.P = P.W.transpose() * P.W;
  prog.q = P.W.transpose() * (P.g0 - y);
  for (Eigen::Index r = 0; r < P.C.rows(); ++r)
    prog.add_linear_inequality(P.C.row(r).transpose(), P.d(r));
  for (Eigen::Index r = 0; r < P.A.rows(); ++r)
    prog.add_equality(P.A.row(r).transpose(), P.b(r));
  auto sol = solve(prog);
  if (!sol.converged) throw MasterFailure("polytope distance QP did not converge");
  return (P.g0 + P.W * sol.w - y).norm();
}

SubdiffDistance OuterFunction::subdiff_distance(const Vec &z, const Vec &y) const {
  check(z, "subdiff_distance");
  require_dim(y, dim(), "subdiff_distance");
  if (auto P = subdiff_polytope(z)) return {polytope_distance(*P, y), true};
  return {(y - subgradient(z)).norm(), false};
}

Vec project_simplex(const Vec &y) {
  const Eigen::Index n = y.size();
  Vec u = y;
  std::sort(u.data(), u.data() + n, std::greater<>());
  double cum = 0.0, theta = 0.0;
  for (Eigen::Index j = 0; j < n; ++j) {
    cum += u(j);
    const double t = (cum - 1.0) / static_cast<double>(j + 1);
    if (u(j) - t > 0) theta = t;
  }
  return (y.array() - theta).cwiseMax(0.0);
}

Vec capped_simplex_argmax(const Vec &v, const Vec &caps) {
  const Eigen::Index s = v.size();
  std::vector<Eigen::Index> order(static_cast<size_t>(s));
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](Eigen::Index a, Eigen::Index b) { return v(a) > v(b); });
  Vec pi = Vec::Zero(s);
  double left = 1.0;
  for (Eigen::Index i : order) {
    if (left <= 0) break;
    pi(i) = std::min(caps(i), left);
    left -= pi(i);
  }
  return pi;
}

namespace {

std::vector<double> snap_radii(const Vec &z) {
  const double s = 1.0 + (z.size() ? z.lpNorm<Eigen::Infinity>() : 0.0);
  return {1e-12 * s, 1e-9 * s, 1e-6 * s, 1e-3 * s};
}

void push_unique(std::vector<Vec> &out, const Vec &z, const Vec &orig) {
  if (z == orig) return;
  for (const auto &o : out)
    if (o == z) return;
  out.push_back(z);
}

// Inner values this close to a kink are treated as on it when forming
// subdifferentials.
double kink_tie(const Vec &z) {
  return 1e-13 * (1.0 + (z.size() ? z.lpNorm<Eigen::Infinity>() : 0.0));
}

class SeparablePwl final : public OuterFunction {
public:
  SeparablePwl(Vec a, Vec b) : a_(std::move(a)), b_(std::move(b)) {
    if (a_.size() != b_.size() || a_.size() == 0)
      throw InvalidInput("separable-pwl: a and b must have equal positive length");
    if ((b_.array() < 0).any() || b_.hasNaN())
      throw InvalidInput("separable-pwl: b must be nonnegative");
  }
  std::string variant() const override { return "separable-pwl"; }
  Eigen::Index dim() const override { return a_.size(); }
  const Vec &a() const { return a_; }
  const Vec &b() const { return b_; }

  double value(const Vec &z) const override {
    check(z, "value");
    double v = 0.0;
    for (Eigen::Index i = 0; i < z.size(); ++i) {
      v += a_(i) * z(i);
      if (z(i) > 0) v += std::isinf(b_(i)) ? kInf : b_(i) * z(i);
    }
    return v;
  }
  Vec subgradient(const Vec &z) const override {
    check(z, "subgradient");
    Vec g = a_;
    for (Eigen::Index i = 0; i < z.size(); ++i)
      if (z(i) > 0) {
        if (std::isinf(b_(i))) throw InvalidInput("separable-pwl: z outside domain");
        g(i) += b_(i);
      }
    return g;
  }
  SubdiffDistance subdiff_distance(const Vec &z, const Vec &y) const override {
    check(z, "subdiff_distance");
    require_dim(y, dim(), "subdiff_distance");
    const double tie = kink_tie(z);
    double s = 0.0;
    for (Eigen::Index i = 0; i < z.size(); ++i) {
      double lo = a_(i), hi = a_(i);
      if (z(i) > tie) {
        if (std::isinf(b_(i))) return {kInf, true};
        lo = hi = a_(i) + b_(i);
      } else if (z(i) >= -tie) {
        hi = a_(i) + b_(i);
      }
      const double r = y(i) - std::clamp(y(i), lo, hi);
      s += r * r;
    }
    return {std::sqrt(s), true};
  }
  std::optional<SubdiffPolytope> subdiff_polytope(const Vec &z) const override {
    check(z, "subdiff_polytope");
    const double tie = kink_tie(z);
    Vec lo = a_, hi = a_;
    for (Eigen::Index i = 0; i < z.size(); ++i) {
      if (z(i) > tie) {
        if (std::isinf(b_(i))) return std::nullopt;
        lo(i) = hi(i) = a_(i) + b_(i);
      } else if (z(i) >= -tie) {
        hi(i) = a_(i) + b_(i);
      }
    }
    return SubdiffPolytope::box(lo, hi);
  }
  double lipschitz_bound() const override {
    if (!b_.allFinite())
      throw ConfigurationError("separable-pwl with indicator parts has no Lipschitz bound");
    return (a_.cwiseAbs() + b_).norm();
  }
  bool monotone() const override { return (a_.array() >= 0).all(); }
  std::optional<PolyEpigraph> epigraph() const override {
    const Eigen::Index m = dim();
    std::vector<Eigen::Index> hinge, ind;
    for (Eigen::Index i = 0; i < m; ++i) {
      if (std::isinf(b_(i))) ind.push_back(i);
      else if (b_(i) > 0) hinge.push_back(i);
    }
    const auto k = static_cast<Eigen::Index>(hinge.size());
    const auto rows = 2 * k + static_cast<Eigen::Index>(ind.size());
    PolyEpigraph e;
    e.a = a_;
    e.c = Vec::Zero(k);
    e.B = Mat::Zero(rows, m);
    e.E = Mat::Zero(rows, k);
    e.g = Vec::Zero(rows);
    for (Eigen::Index j = 0; j < k; ++j) {
      e.c(j) = b_(hinge[j]);
      e.B(2 * j, hinge[j]) = 1.0;
      e.E(2 * j, j) = 1.0;
      e.E(2 * j + 1, j) = 1.0;
    }
    for (size_t r = 0; r < ind.size(); ++r) e.B(2 * k + static_cast<Eigen::Index>(r), ind[r]) = 1.0;
    return e;
  }
  std::vector<Vec> kink_snaps(const Vec &z) const override {
    std::vector<Vec> out;
    for (double r : snap_radii(z)) {
      Vec s = z;
      for (Eigen::Index i = 0; i < z.size(); ++i)
        if (std::abs(z(i)) <= r && b_(i) > 0) s(i) = 0.0;
      push_unique(out, s, z);
    }
    return out;
  }
  std::vector<double> coordinate_kinks() const override { return {0.0}; }

private:
  Vec a_, b_;
};

class ScaledHinge final : public OuterFunction {
public:
  ScaledHinge(double rho, Vec w) : rho_(rho), w_(std::move(w)) {
    if (!(rho_ >= 0) || w_.size() == 0) throw InvalidInput("scaled-hinge: bad parameters");
  }
  std::string variant() const override { return "scaled-hinge"; }
  Eigen::Index dim() const override { return w_.size(); }
  double value(const Vec &z) const override {
    check(z, "value");
    return rho_ * std::max(0.0, w_.dot(z));
  }
  Vec subgradient(const Vec &z) const override {
    check(z, "subgradient");
    return w_.dot(z) > 0 ? Vec(rho_ * w_) : Vec(Vec::Zero(dim()));
  }
  SubdiffDistance subdiff_distance(const Vec &z, const Vec &y) const override {
    check(z, "subdiff_distance");
    const double g = w_.dot(z);
    if (g != 0) return {(y - subgradient(z)).norm(), true};
    const Vec seg = rho_ * w_;
    const double ss = seg.squaredNorm();
    const double th = ss > 0 ? std::clamp(y.dot(seg) / ss, 0.0, 1.0) : 0.0;
    return {(y - th * seg).norm(), true};
  }
  std::optional<SubdiffPolytope> subdiff_polytope(const Vec &z) const override {
    check(z, "subdiff_polytope");
    if (w_.dot(z) != 0) return SubdiffPolytope::point(subgradient(z));
    SubdiffPolytope P;
    P.g0 = Vec::Zero(dim());
    P.W = rho_ * w_;
    P.C = Mat(2, 1);
    P.C << -1.0, 1.0;
    P.d = Vec(2);
    P.d << 0.0, 1.0;
    P.A = Mat::Zero(0, 1);
    P.b = Vec::Zero(0);
    return P;
  }
  double lipschitz_bound() const override { return rho_ * w_.norm(); }
  bool monotone() const override { return (w_.array() >= 0).all(); }
  std::optional<PolyEpigraph> epigraph() const override {
    PolyEpigraph e;
    e.a = Vec::Zero(dim());
    e.c = Vec::Constant(1, rho_);
    e.B = Mat::Zero(2, dim());
    e.B.row(0) = w_.transpose();
    e.E = Mat::Ones(2, 1);
    e.g = Vec::Zero(2);
    return e;
  }
  std::vector<Vec> kink_snaps(const Vec &z) const override {
    std::vector<Vec> out;
    const double g = w_.dot(z);
    for (double r : snap_radii(z))
      if (std::abs(g) <= r * w_.norm()) push_unique(out, Vec(z - (g / w_.squaredNorm()) * w_), z);
    return out;
  }

private:
  double rho_;
  Vec w_;
};

class CappedSimplexSupport final : public OuterFunction {
public:
  CappedSimplexSupport(Vec p, double alpha, Eigen::Index q) : q_(q) {
    if (!(alpha >= 0 && alpha < 1)) throw InvalidInput("capped simplex: alpha must be in [0,1)");
    if (p.size() == 0 || q <= 0 || (p.array() <= 0).any())
      throw InvalidInput("capped simplex: probabilities must be positive");
    caps_ = p / (1.0 - alpha);
    if (caps_.sum() < 1.0 - 1e-12) throw InvalidInput("capped simplex: empty polytope");
  }
  std::string variant() const override { return "support-capped-simplex"; }
  Eigen::Index dim() const override { return caps_.size() * q_; }
  Eigen::Index scenarios() const { return caps_.size(); }

  Vec scenario_max(const Vec &u) const {
    Vec v(scenarios());
    for (Eigen::Index i = 0; i < scenarios(); ++i) v(i) = u.segment(i * q_, q_).maxCoeff();
    return v;
  }
  double value(const Vec &u) const override {
    check(u, "value");
    Vec v = scenario_max(u);
    return capped_simplex_argmax(v, caps_).dot(v);
  }
  Vec subgradient(const Vec &u) const override {
    check(u, "subgradient");
    Vec v = scenario_max(u);
    Vec pi = capped_simplex_argmax(v, caps_);
    Vec g = Vec::Zero(dim());
    for (Eigen::Index i = 0; i < scenarios(); ++i) {
      if (pi(i) == 0) continue;
      int cnt = 0;
      for (Eigen::Index j = 0; j < q_; ++j) cnt += u(i * q_ + j) == v(i);
      for (Eigen::Index j = 0; j < q_; ++j)
        if (u(i * q_ + j) == v(i)) g(i * q_ + j) = pi(i) / cnt;
    }
    return g;
  }
  std::optional<SubdiffPolytope> subdiff_polytope(const Vec &u) const override {
    check(u, "subdiff_polytope");
    const Eigen::Index s = scenarios();
    Vec v = scenario_max(u);
    // Threshold where the greedy fill completes; scenarios strictly above it
    // carry their cap, strictly below carry nothing.
    Vec pistar = capped_simplex_argmax(v, caps_);
    double eta = kInf;
    for (Eigen::Index i = 0; i < s; ++i)
      if (pistar(i) > 0) eta = std::min(eta, v(i));
    // Ties are decided up to rounding so that exact ties stay ties.
    const double tie = kink_tie(u);
    std::vector<Eigen::Index> free_pi;
    Vec fixed_pi = Vec::Zero(s);
    std::vector<bool> is_free(static_cast<size_t>(s), false);
    for (Eigen::Index i = 0; i < s; ++i) {
      if (v(i) > eta + tie) fixed_pi(i) = caps_(i);
      else if (v(i) >= eta - tie) {
        free_pi.push_back(i);
        is_free[static_cast<size_t>(i)] = true;
      }
    }
    // omega_ij for argmax entries of scenarios with possibly positive weight.
    std::vector<std::pair<Eigen::Index, Eigen::Index>> omega;
    for (Eigen::Index i = 0; i < s; ++i) {
      if (!is_free[static_cast<size_t>(i)] && fixed_pi(i) == 0) continue;
      for (Eigen::Index j = 0; j < q_; ++j)
        if (u(i * q_ + j) >= v(i) - tie) omega.emplace_back(i, j);
    }
    const auto no = static_cast<Eigen::Index>(omega.size());
    const auto nf = static_cast<Eigen::Index>(free_pi.size());
    const Eigen::Index k = no + nf;
    SubdiffPolytope P;
    P.g0 = Vec::Zero(dim());
    P.W = Mat::Zero(dim(), k);
    for (Eigen::Index c = 0; c < no; ++c)
      P.W(omega[c].first * q_ + omega[c].second, c) = 1.0;
    P.C = Mat::Zero(k + nf, k);
    P.d = Vec::Zero(k + nf);
    for (Eigen::Index c = 0; c < k; ++c) P.C(c, c) = -1.0;
    for (Eigen::Index f = 0; f < nf; ++f) {
      P.C(k + f, no + f) = 1.0;
      P.d(k + f) = caps_(free_pi[f]);
    }
    std::vector<Eigen::Index> eq_scen;
    for (Eigen::Index i = 0; i < s; ++i)
      if (is_free[static_cast<size_t>(i)] || fixed_pi(i) > 0) eq_scen.push_back(i);
    const auto ne = static_cast<Eigen::Index>(eq_scen.size());
    P.A = Mat::Zero(ne + 1, k);
    P.b = Vec::Zero(ne + 1);
    for (Eigen::Index r = 0; r < ne; ++r) {
      const Eigen::Index i = eq_scen[r];
      for (Eigen::Index c = 0; c < no; ++c)
        if (omega[c].first == i) P.A(r, c) = 1.0;
      if (is_free[static_cast<size_t>(i)]) {
        auto it = std::find(free_pi.begin(), free_pi.end(), i);
        P.A(r, no + (it - free_pi.begin())) = -1.0;
      } else {
        P.b(r) = fixed_pi(i);
      }
    }
    for (Eigen::Index f = 0; f < nf; ++f) P.A(ne, no + f) = 1.0;
    P.b(ne) = 1.0 - fixed_pi.sum();
    if (nf == 0) {
      P.A.conservativeResize(ne, k);
      P.b.conservativeResize(ne);
    }
    return P;
  }
  double lipschitz_bound() const override {
    // max |pi| over the capped simplex: fill the largest caps first.
    Vec c = caps_;
    std::sort(c.data(), c.data() + c.size(), std::greater<>());
    double left = 1.0, s = 0.0;
    for (Eigen::Index i = 0; i < c.size() && left > 0; ++i) {
      const double t = std::min(c(i), left);
      s += t * t;
      left -= t;
    }
    return std::sqrt(s);
  }
  bool monotone() const override { return true; }
  std::optional<PolyEpigraph> epigraph() const override {
    // CVaR form: min eta + sum cap_i xi_i, xi_i >= u_ij - eta, xi >= 0.
    const Eigen::Index s = scenarios();
    const Eigen::Index m = dim();
    PolyEpigraph e;
    e.a = Vec::Zero(m);
    e.c = Vec(1 + s);
    e.c(0) = 1.0;
    e.c.tail(s) = caps_;
    e.B = Mat::Zero(m + s, m);
    e.E = Mat::Zero(m + s, 1 + s);
    e.g = Vec::Zero(m + s);
    for (Eigen::Index i = 0; i < s; ++i) {
      for (Eigen::Index j = 0; j < q_; ++j) {
        const Eigen::Index r = i * q_ + j;
        e.B(r, r) = 1.0;
        e.E(r, 0) = 1.0;
        e.E(r, 1 + i) = 1.0;
      }
      e.E(m + i, 1 + i) = 1.0;
    }
    return e;
  }

private:
  Vec caps_;
  Eigen::Index q_;
};

class AbsValue final : public OuterFunction {
public:
  explicit AbsValue(Eigen::Index m) : m_(m) {
    if (m <= 0) throw InvalidInput("abs-value: dimension must be positive");
  }
  std::string variant() const override { return "abs-value"; }
  Eigen::Index dim() const override { return m_; }
  double value(const Vec &z) const override {
    check(z, "value");
    return z.lpNorm<1>();
  }
  Vec subgradient(const Vec &z) const override {
    check(z, "subgradient");
    return z.unaryExpr([](double t) { return t > 0 ? 1.0 : (t < 0 ? -1.0 : 0.0); });
  }
  SubdiffDistance subdiff_distance(const Vec &z, const Vec &y) const override {
    check(z, "subdiff_distance");
    require_dim(y, m_, "subdiff_distance");
    double s = 0.0;
    for (Eigen::Index i = 0; i < m_; ++i) {
      const double r = z(i) == 0 ? y(i) - std::clamp(y(i), -1.0, 1.0)
                                 : y(i) - (z(i) > 0 ? 1.0 : -1.0);
      s += r * r;
    }
    return {std::sqrt(s), true};
  }
  std::optional<SubdiffPolytope> subdiff_polytope(const Vec &z) const override {
    Vec lo = subgradient(z), hi = lo;
    for (Eigen::Index i = 0; i < m_; ++i)
      if (z(i) == 0) {
        lo(i) = -1.0;
        hi(i) = 1.0;
      }
    return SubdiffPolytope::box(lo, hi);
  }
  double lipschitz_bound() const override { return std::sqrt(static_cast<double>(m_)); }
  bool monotone() const override { return false; }
  std::optional<PolyEpigraph> epigraph() const override {
    PolyEpigraph e;
    e.a = Vec::Zero(m_);
    e.c = Vec::Ones(m_);
    e.B = Mat::Zero(2 * m_, m_);
    e.E = Mat::Zero(2 * m_, m_);
    e.g = Vec::Zero(2 * m_);
    for (Eigen::Index i = 0; i < m_; ++i) {
      e.B(2 * i, i) = 1.0;
      e.B(2 * i + 1, i) = -1.0;
      e.E(2 * i, i) = 1.0;
      e.E(2 * i + 1, i) = 1.0;
    }
    return e;
  }
  std::vector<Vec> kink_snaps(const Vec &z) const override {
    std::vector<Vec> out;
    for (double r : snap_radii(z))
      push_unique(out, Vec(z.unaryExpr([r](double t) { return std::abs(t) <= r ? 0.0 : t; })), z);
    return out;
  }
  std::vector<double> coordinate_kinks() const override { return {0.0}; }

private:
  Eigen::Index m_;
};

class MaxCoordinates final : public OuterFunction {
public:
  explicit MaxCoordinates(Eigen::Index m) : m_(m) {
    if (m <= 0) throw InvalidInput("max-of-coordinates: dimension must be positive");
  }
  std::string variant() const override { return "max-of-coordinates"; }
  Eigen::Index dim() const override { return m_; }
  double value(const Vec &z) const override {
    check(z, "value");
    return z.maxCoeff();
  }
  Vec subgradient(const Vec &z) const override {
    check(z, "subgradient");
    const double top = z.maxCoeff();
    Vec g = (z.array() == top).cast<double>();
    return g / g.sum();
  }
  SubdiffDistance subdiff_distance(const Vec &z, const Vec &y) const override {
    check(z, "subdiff_distance");
    require_dim(y, m_, "subdiff_distance");
    const double top = z.maxCoeff();
    std::vector<Eigen::Index> act;
    double s = 0.0;
    for (Eigen::Index i = 0; i < m_; ++i) {
      if (z(i) == top) act.push_back(i);
      else s += y(i) * y(i);
    }
    Vec ya(static_cast<Eigen::Index>(act.size()));
    for (size_t j = 0; j < act.size(); ++j) ya(static_cast<Eigen::Index>(j)) = y(act[j]);
    s += (project_simplex(ya) - ya).squaredNorm();
    return {std::sqrt(s), true};
  }
  std::optional<SubdiffPolytope> subdiff_polytope(const Vec &z) const override {
    check(z, "subdiff_polytope");
    const double top = z.maxCoeff();
    std::vector<Eigen::Index> act;
    for (Eigen::Index i = 0; i < m_; ++i)
      if (z(i) == top) act.push_back(i);
    const auto k = static_cast<Eigen::Index>(act.size());
    SubdiffPolytope P;
    P.g0 = Vec::Zero(m_);
    P.W = Mat::Zero(m_, k);
    for (Eigen::Index j = 0; j < k; ++j) P.W(act[j], j) = 1.0;
    P.C = -Mat::Identity(k, k);
    P.d = Vec::Zero(k);
    P.A = Mat::Ones(1, k);
    P.b = Vec::Ones(1);
    return P;
  }
  double lipschitz_bound() const override { return 1.0; }
  bool monotone() const override { return true; }
  std::optional<PolyEpigraph> epigraph() const override {
    PolyEpigraph e;
    e.a = Vec::Zero(m_);
    e.c = Vec::Ones(1);
    e.B = Mat::Identity(m_, m_);
    e.E = Mat::Ones(m_, 1);
    e.g = Vec::Zero(m_);
    return e;
  }
  std::vector<Vec> kink_snaps(const Vec &z) const override {
    std::vector<Vec> out;
    const double top = z.maxCoeff();
    for (double r : snap_radii(z))
      push_unique(out, Vec(z.unaryExpr([&](double t) { return t >= top - r ? top : t; })), z);
    return out;
  }

private:
  Eigen::Index m_;
};

class GenericOracle final : public OuterFunction {
public:
  GenericOracle(Eigen::Index m, std::function<double(const Vec &)> v,
                std::function<Vec(const Vec &)> s, std::optional<double> L, bool mono)
      : m_(m), v_(std::move(v)), s_(std::move(s)), L_(L), mono_(mono) {
    if (m <= 0 || !v_ || !s_) throw InvalidInput("generic-oracle: bad arguments");
  }
  std::string variant() const override { return "generic-oracle"; }
  Eigen::Index dim() const override { return m_; }
  double value(const Vec &z) const override {
    check(z, "value");
    return v_(z);
  }
  Vec subgradient(const Vec &z) const override {
    check(z, "subgradient");
    return s_(z);
  }
  double lipschitz_bound() const override {
    if (!L_) throw ConfigurationError("generic-oracle: no Lipschitz bound supplied");
    return *L_;
  }
  bool monotone() const override { return mono_; }

private:
  Eigen::Index m_;
  std::function<double(const Vec &)> v_;
  std::function<Vec(const Vec &)> s_;
  std::optional<double> L_;
  bool mono_;
};

class Composed final : public OuterFunction {
public:
  Composed(OuterPtr h0, std::vector<OuterPtr> comps, std::optional<double> L)
      : h0_(std::move(h0)), comps_(std::move(comps)), L_(L) {
    if (!h0_ || comps_.empty()) throw InvalidInput("composed: missing parts");
    if (h0_->dim() != static_cast<Eigen::Index>(comps_.size()))
      throw InvalidInput("composed: h0 dimension must equal number of components");
    if (!h0_->monotone()) throw ConfigurationError("composed: h0 must be nondecreasing");
    m_ = comps_[0]->dim();
    for (const auto &c : comps_)
      if (!c || c->dim() != m_) throw InvalidInput("composed: component dimensions differ");
  }
  std::string variant() const override { return "composed"; }
  Eigen::Index dim() const override { return m_; }
  const OuterPtr &h0() const { return h0_; }
  const std::vector<OuterPtr> &components() const { return comps_; }

  Vec inner(const Vec &z) const {
    Vec r(static_cast<Eigen::Index>(comps_.size()));
    for (size_t i = 0; i < comps_.size(); ++i) r(static_cast<Eigen::Index>(i)) = comps_[i]->value(z);
    return r;
  }
  /// inner(z) with values within rounding distance of a kink of h0 moved
  /// onto it, so z on the kink in exact arithmetic keeps the full
  /// subdifferential of h0 there.
  Vec inner_snapped(const Vec &z) const {
    Vec r = inner(z);
    const double tol = kink_tie(z);
    for (double k : h0_->coordinate_kinks())
      for (Eigen::Index i = 0; i < r.size(); ++i)
        if (std::abs(r(i) - k) <= tol) r(i) = k;
    return r;
  }
  double value(const Vec &z) const override {
    check(z, "value");
    return h0_->value(inner(z));
  }
  Vec subgradient(const Vec &z) const override {
    check(z, "subgradient");
    Vec lam = h0_->subgradient(inner(z));
    Vec g = Vec::Zero(m_);
    for (size_t i = 0; i < comps_.size(); ++i) {
      const double l = lam(static_cast<Eigen::Index>(i));
      if (l != 0) g += l * comps_[i]->subgradient(z);
    }
    return g;
  }
  std::optional<SubdiffPolytope> subdiff_polytope(const Vec &z) const override {
    check(z, "subdiff_polytope");
    // {sum lambda_i g_i}: lambda in dh0, g_i in dh_i. Substituting
    // phi_i = lambda_i theta_i makes the set linear in (theta_0, phi).
    auto P0 = h0_->subdiff_polytope(inner_snapped(z));
    if (!P0) return std::nullopt;
    std::vector<SubdiffPolytope> Pi;
    for (const auto &c : comps_) {
      auto p = c->subdiff_polytope(z);
      if (!p) return std::nullopt;
      Pi.push_back(std::move(*p));
    }
    const Eigen::Index d = static_cast<Eigen::Index>(comps_.size());
    const Eigen::Index k0 = P0->nparam();
    Eigen::Index k = k0, rc = P0->C.rows(), ra = P0->A.rows();
    for (const auto &p : Pi) {
      k += p.nparam();
      rc += p.C.rows();
      ra += p.A.rows();
    }
    SubdiffPolytope P;
    P.g0 = Vec::Zero(m_);
    P.W = Mat::Zero(m_, k);
    P.C = Mat::Zero(rc, k);
    P.d = Vec::Zero(rc);
    P.A = Mat::Zero(ra, k);
    P.b = Vec::Zero(ra);
    P.C.topLeftCorner(P0->C.rows(), k0) = P0->C;
    P.d.head(P0->C.rows()) = P0->d;
    P.A.topLeftCorner(P0->A.rows(), k0) = P0->A;
    P.b.head(P0->A.rows()) = P0->b;
    Eigen::Index col = k0, crow = P0->C.rows(), arow = P0->A.rows();
    for (Eigen::Index i = 0; i < d; ++i) {
      const auto &p = Pi[static_cast<size_t>(i)];
      const double l0 = P0->g0(i);
      const Vec lrow = k0 ? Vec(P0->W.row(i).transpose()) : Vec(0);
      P.g0 += l0 * p.g0;
      if (k0) P.W.leftCols(k0) += p.g0 * lrow.transpose();
      const Eigen::Index ki = p.nparam();
      P.W.block(0, col, m_, ki) = p.W;
      for (Eigen::Index r = 0; r < p.C.rows(); ++r) {
        P.C.block(crow + r, col, 1, ki) = p.C.row(r);
        if (k0) P.C.block(crow + r, 0, 1, k0) = -p.d(r) * lrow.transpose();
        P.d(crow + r) = p.d(r) * l0;
      }
      for (Eigen::Index r = 0; r < p.A.rows(); ++r) {
        P.A.block(arow + r, col, 1, ki) = p.A.row(r);
        if (k0) P.A.block(arow + r, 0, 1, k0) = -p.b(r) * lrow.transpose();
        P.b(arow + r) = p.b(r) * l0;
      }
      col += ki;
      crow += p.C.rows();
      arow += p.A.rows();
    }
    return P;
  }
  double lipschitz_bound() const override {
    if (L_) return *L_;
    double s = 0.0;
    for (const auto &c : comps_) {
      const double l = c->lipschitz_bound();
      s += l * l;
    }
    return h0_->lipschitz_bound() * std::sqrt(s);
  }
  bool lipschitz_conservative() const override { return !L_.has_value(); }
  bool monotone() const override {
    for (const auto &c : comps_)
      if (!c->monotone()) return false;
    return true;
  }
  std::optional<PolyEpigraph> epigraph() const override {
    auto e0 = h0_->epigraph();
    if (!e0) return std::nullopt;
    std::vector<PolyEpigraph> ei;
    for (const auto &c : comps_) {
      auto e = c->epigraph();
      if (!e) return std::nullopt;
      ei.push_back(std::move(*e));
    }
    const Eigen::Index d = static_cast<Eigen::Index>(comps_.size());
    Eigen::Index naux = d + e0->naux(), rows = e0->B.rows() + d;
    for (const auto &e : ei) {
      naux += e.naux();
      rows += e.B.rows();
    }
    PolyEpigraph E;
    E.a = Vec::Zero(m_);
    E.c = Vec::Zero(naux);
    E.c.head(d) = e0->a;
    E.c.segment(d, e0->naux()) = e0->c;
    E.B = Mat::Zero(rows, m_);
    E.E = Mat::Zero(rows, naux);
    E.g = Vec::Zero(rows);
    const Eigen::Index r0 = e0->B.rows();
    E.E.block(0, 0, r0, d) = -e0->B;
    E.E.block(0, d, r0, e0->naux()) = e0->E;
    E.g.head(r0) = e0->g;
    Eigen::Index row = r0, col = d + e0->naux();
    for (Eigen::Index i = 0; i < d; ++i) {
      const auto &e = ei[static_cast<size_t>(i)];
      // a_i'z + c_i'u_i - r_i <= 0
      E.B.row(row) = e.a.transpose();
      E.E(row, i) = 1.0;
      E.E.block(row, col, 1, e.naux()) = -e.c.transpose();
      ++row;
      E.B.block(row, 0, e.B.rows(), m_) = e.B;
      E.E.block(row, col, e.B.rows(), e.naux()) = e.E;
      E.g.segment(row, e.B.rows()) = e.g;
      row += e.B.rows();
      col += e.naux();
    }
    return E;
  }
  std::vector<Vec> kink_snaps(const Vec &z) const override {
    std::vector<Vec> out;
    for (const auto &c : comps_)
      for (auto &s : c->kink_snaps(z)) push_unique(out, s, z);
    return out;
  }

private:
  OuterPtr h0_;
  std::vector<OuterPtr> comps_;
  std::optional<double> L_;
  Eigen::Index m_ = 0;
};

} // namespace

OuterPtr make_separable_pwl(Vec a, Vec b) {
  return std::make_shared<SeparablePwl>(std::move(a), std::move(b));
}
OuterPtr make_scaled_hinge(double rho, Vec w) {
  return std::make_shared<ScaledHinge>(rho, std::move(w));
}
OuterPtr make_capped_simplex_support(Vec p, double alpha, Eigen::Index q) {
  return std::make_shared<CappedSimplexSupport>(std::move(p), alpha, q);
}
OuterPtr make_abs(Eigen::Index m) { return std::make_shared<AbsValue>(m); }
OuterPtr make_max(Eigen::Index m) { return std::make_shared<MaxCoordinates>(m); }
OuterPtr make_generic(Eigen::Index m, std::function<double(const Vec &)> value,
                      std::function<Vec(const Vec &)> subgradient,
                      std::optional<double> lipschitz, bool monotone) {
  return std::make_shared<GenericOracle>(m, std::move(value), std::move(subgradient),
                                         lipschitz, monotone);
}
OuterPtr make_composed(OuterPtr h0, std::vector<OuterPtr> components,
                       std::optional<double> lipschitz_override) {
  return std::make_shared<Composed>(std::move(h0), std::move(components),
                                    lipschitz_override);
}

std::optional<ComposedView> as_composed(const OuterFunction &h) {
  if (auto c = dynamic_cast<const Composed *>(&h)) return ComposedView{c->h0(), c->components()};
  return std::nullopt;
}

std::optional<SeparableView> as_separable(const OuterFunction &h) {
  if (auto s = dynamic_cast<const SeparablePwl *>(&h)) return SeparableView{s->a(), s->b()};
  return std::nullopt;
}

} // namespace compopt
