#include "compopt/problems.hpp"

#include <algorithm>
#include <deque>
#include <numbers>
#include <random>

namespace compopt {

namespace {

constexpr double kPi = std::numbers::pi;

/// Looks up a parameter, rejecting keys the instance does not know.
class ParamReader {
public:
  ParamReader(std::string instance, Params defaults, const Params &overrides)
      : instance_(std::move(instance)), values_(std::move(defaults)) {
    for (const auto &[k, v] : overrides) {
      auto it = values_.find(k);
      if (it == values_.end())
        throw RegistryError("instance '" + instance_ + "': unknown parameter '" + k + "'");
      if (!std::isfinite(v))
        throw RegistryError("instance '" + instance_ + "': parameter '" + k + "' is not finite");
      it->second = v;
    }
  }
  double operator[](const std::string &k) const { return values_.at(k); }
  double positive(const std::string &k) const {
    const double v = values_.at(k);
    if (!(v > 0)) throw RegistryError("instance '" + instance_ + "': '" + k + "' must be positive");
    return v;
  }
  const Params &all() const { return values_; }

private:
  std::string instance_;
  Params values_;
};

Vec vec1(double a) { return Vec::Constant(1, a); }
Vec vec2(double a, double b) {
  Vec v(2);
  v << a, b;
  return v;
}

VectorMapping scalar_map(std::function<double(double)> f, std::function<double(double)> df,
                         std::optional<double> L) {
  VectorMapping F;
  F.n = 1;
  F.m = 1;
  F.value = [f](const Vec &x) { return vec1(f(x(0))); };
  F.jacobian = [df](const Vec &x) { return Mat::Constant(1, 1, df(x(0))); };
  F.component_L = {L};
  return F;
}

/// Affine scalar function a'x + b as a DC component (f2 = 0).
DcComponent affine_dc(const Vec &a, double b) {
  DcComponent c;
  c.f1 = ConvexPart::polyhedral(a.transpose(), vec1(b));
  c.f2 = ConvexPart::polyhedral(Mat::Zero(1, a.size()), vec1(0.0));
  return c;
}

VectorMapping affine_map(const Mat &A, const Vec &b) {
  VectorMapping F;
  F.n = A.cols();
  F.m = A.rows();
  F.value = [A, b](const Vec &x) { return Vec(A * x + b); };
  F.jacobian = [A](const Vec &) { return A; };
  F.component_L.assign(static_cast<size_t>(A.rows()), 0.0);
  return F;
}

OuterPtr indicator_nonpositive(Eigen::Index m) {
  return make_separable_pwl(Vec::Zero(m), Vec::Constant(m, kInf));
}

Vec read_x0(const ParamReader &p, Eigen::Index n) {
  if (n == 1) return vec1(p["x0"]);
  Vec x(n);
  for (Eigen::Index i = 0; i < n; ++i) x(i) = p["x0_" + std::to_string(i + 1)];
  return x;
}

Instance make_abs1d(const Params &over) {
  ParamReader p("abs1d", {{"x0", 3.0}}, over);
  Instance inst;
  inst.name = "abs1d";
  inst.description = "|x| on the real line; stationary set {0}";
  auto &P = inst.problem;
  P.name = inst.name;
  P.X = FeasibleSet::whole(1);
  P.f0 = SmoothFunction::zero(1);
  P.h = make_abs(1);
  P.F = affine_map(Mat::Identity(1, 1), Vec::Zero(1));
  inst.x0 = read_x0(p, 1);
  inst.flags.bundle = true;
  inst.grid_box = {{vec1(-1.0), vec1(1.0)}};
  inst.params = p.all();
  return inst;
}

CompositeProblem sincounter_problem(double theta) {
  CompositeProblem P;
  P.name = "sincounter";
  P.X = FeasibleSet::whole(1);
  P.f0 = SmoothFunction::zero(1);
  P.h = make_hinge_penalty(1, theta);
  P.F = scalar_map([](double x) { return std::sin(x); }, [](double x) { return std::cos(x); }, 2.0);
  return P;
}

Instance make_sincounter(const Params &over) {
  ParamReader p("sincounter", {{"theta", 1.0}, {"x0", kPi / 2}}, over);
  Instance inst;
  inst.name = "sincounter";
  inst.description =
      "theta max{0, sin x}, the penalized form of sin x <= 0; multipliers diverge at pi/2";
  inst.problem = sincounter_problem(p.positive("theta"));
  inst.x0 = read_x0(p, 1);
  inst.flags.bundle = true;
  inst.grid_box = {{vec1(-kPi), vec1(kPi)}};

  CompositeProblem actual = sincounter_problem(1.0);
  actual.h = indicator_nonpositive(1);
  ApproximationFamily fam;
  fam.name = "sincounter";
  fam.kind = FamilyKind::HingePenalty;
  fam.initial.theta = p["theta"];
  fam.generate = [](const ApproxParams &a) { return sincounter_problem(a.theta); };
  fam.actual_residual = [actual](const Vec &x) {
    return stationarity_measure(actual, x).breakdown;
  };
  inst.family = fam;
  inst.params = p.all();
  return inst;
}

Instance make_quartic(const Params &over) {
  ParamReader p("quartic", {{"x0", 2.0}}, over);
  Instance inst;
  inst.name = "quartic";
  inst.description = "|x^2 - 1| on [-2, 2]; stationary set {-1, 0, 1}";
  auto &P = inst.problem;
  P.name = inst.name;
  P.X = FeasibleSet::box(vec1(-2.0), vec1(2.0));
  P.f0 = SmoothFunction::zero(1);
  P.h = make_abs(1);
  P.F = scalar_map([](double x) { return x * x - 1.0; }, [](double x) { return 2.0 * x; }, 4.0);
  inst.x0 = read_x0(p, 1);
  inst.flags.bundle = true;
  inst.grid_box = {{vec1(-2.0), vec1(2.0)}};
  inst.params = p.all();
  return inst;
}

CompositeProblem hingeconvex_problem(double theta) {
  CompositeProblem P;
  P.name = "hingeconvex";
  P.X = FeasibleSet::box(vec1(-5.0), vec1(5.0));
  P.f0 = SmoothFunction::from_quadratic(Mat::Constant(1, 1, 2.0), vec1(-4.0), 4.0);
  P.h = make_hinge_penalty(1, theta);
  P.F = affine_map(Mat::Identity(1, 1), vec1(-1.0));
  P.dc = {affine_dc(vec1(1.0), -1.0)};
  return P;
}

Instance make_hingeconvex(const Params &over) {
  ParamReader p("hingeconvex", {{"theta", 1.0}, {"x0", 0.0}}, over);
  Instance inst;
  inst.name = "hingeconvex";
  inst.description = "(x - 2)^2 + theta max{0, x - 1} on [-5, 5]; penalized form of x <= 1";
  inst.problem = hingeconvex_problem(p.positive("theta"));
  inst.x0 = read_x0(p, 1);
  inst.flags.bundle = true;
  inst.flags.dc = true;
  inst.grid_box = {{vec1(-5.0), vec1(5.0)}};

  CompositeProblem actual = hingeconvex_problem(1.0);
  actual.h = indicator_nonpositive(1);
  ApproximationFamily fam;
  fam.name = "hingeconvex";
  fam.kind = FamilyKind::HingePenalty;
  fam.initial.theta = p["theta"];
  fam.generate = [](const ApproxParams &a) { return hingeconvex_problem(a.theta); };
  fam.actual_residual = [actual](const Vec &x) {
    return stationarity_measure(actual, x).breakdown;
  };
  inst.family = fam;
  inst.params = p.all();
  return inst;
}

/// Synthetic scenario data: psi_ik(x) = |x|^2/4 + g_ik'x + d_ik.
struct BufferedData {
  static constexpr int s = 5;
  static constexpr int r = 3;
  std::vector<std::vector<int>> cut_sets{{0, 1}, {2}};
  Vec p = (Vec(5) << 0.1, 0.15, 0.2, 0.25, 0.3).finished();
  double alpha = 0.8;

  Vec g(int i, int k) const {
    const double a = 0.7 * i + 1.3 * k;
    return vec2(std::cos(a), std::sin(a));
  }
  double d(int i, int k) const { return -0.6 + 0.15 * i - 0.1 * k; }
  SmoothFunction psi(int i, int k) const {
    return SmoothFunction::from_quadratic(0.5 * Mat::Identity(2, 2), g(i, k), d(i, k));
  }
};

} // namespace

std::vector<LseGroup> buffered_groups() {
  const BufferedData D;
  std::vector<LseGroup> groups;
  for (int i = 0; i < D.s; ++i)
    for (const auto &K : D.cut_sets) {
      LseGroup g;
      for (int k : K) g.psi.push_back(D.psi(i, k));
      groups.push_back(std::move(g));
    }
  return groups;
}

namespace {

CompositeProblem buffered_problem(double eta, double rho) {
  const BufferedData D;
  std::vector<std::optional<double>> L;
  for (int i = 0; i < D.s; ++i)
    for (const auto &K : D.cut_sets) {
      double diam = 0.0;
      for (int k : K)
        for (int l : K) diam = std::max(diam, (D.g(i, k) - D.g(i, l)).norm());
      // Hessian of the soft-min is a weighted mean of the psi Hessians (0.5 I)
      // minus c times a gradient covariance; gradient differences are
      // constant here, so the covariance is at most diam^2 / 4.
      const double c = K.size() > 1 ? std::log(static_cast<double>(K.size())) / eta : 0.0;
      L.push_back(2.0 * (0.5 + c * diam * diam / 4.0));
    }
  CompositeProblem P;
  P.name = "buffered";
  P.X = FeasibleSet::box(Vec::Constant(2, -2.0), Vec::Constant(2, 2.0));
  P.f0 = SmoothFunction::from_quadratic(Mat::Identity(2, 2), -vec2(1.5, 1.0), 0.5 * 3.25);
  P.F = make_lse(buffered_groups(), eta, std::move(L));
  P.h = make_hinge_penalty(make_capped_simplex_support(D.p, D.alpha, 2), rho);
  return P;
}

Instance make_buffered(const Params &over) {
  ParamReader p("buffered", {{"eta", 0.5}, {"rho", 1.0}, {"x0_1", 0.0}, {"x0_2", 0.0}}, over);
  Instance inst;
  inst.name = "buffered";
  inst.description =
      "buffered failure probability constraint, LSE-smoothed and hinge-penalized "
      "(s = 5 scenarios, cut sets {1,2} and {3}, alpha = 0.8; synthetic data)";
  inst.problem = buffered_problem(p.positive("eta"), p.positive("rho"));
  inst.x0 = read_x0(p, 2);
  inst.flags.bundle = true;
  inst.flags.structured = true;
  inst.synthetic = true;
  inst.grid_box = {{Vec::Constant(2, -2.0), Vec::Constant(2, 2.0)}};

  ApproximationFamily fam;
  fam.name = "buffered";
  fam.kind = FamilyKind::LseSmoothing;
  fam.initial.eta = p["eta"];
  fam.initial.rho = p["rho"];
  fam.generate = [](const ApproxParams &a) { return buffered_problem(a.eta, a.rho); };
  inst.family = fam;
  inst.params = p.all();
  return inst;
}

/// Columns of the finite sets used by the distance instances.
struct DistanceData {
  std::vector<Mat> sets;
  Vec rho;
  /// f0 = 0.5 x'Qx + q'x.
  Mat Q;
  Vec q;
  /// Hard constraint a'x + b <= 0 used by the approximation family.
  Vec a;
  double b = 0.0;
};

/// Soft penalties alone (eta empty) or with the hinge-penalized hard
/// constraint appended as the last component.
CompositeProblem distance_problem(const std::string &name, const DistanceData &D,
                                  std::optional<double> eta) {
  CompositeProblem P;
  P.name = name;
  const Eigen::Index n = D.Q.rows();
  P.X = FeasibleSet::whole(n);
  P.f0 = SmoothFunction::from_quadratic(D.Q, D.q, 0.0);
  DistanceStructure ds;
  ds.rho = D.rho;
  for (const auto &pts : D.sets) {
    ds.sets.push_back(FeasibleSet::finite_points(pts));
    P.dc.push_back(distance_squared_dc(ds.sets.back()));
  }
  if (eta) {
    P.dc.push_back(affine_dc(D.a, D.b));
    P.h = make_distance_penalty(D.rho, vec1(*eta));
  } else {
    P.h = make_separable_pwl(0.5 * D.rho, Vec::Zero(D.rho.size()));
    P.distance = std::move(ds);
  }
  return P;
}

Instance finish_distance(Instance inst, const DistanceData &D) {
  ApproximationFamily fam;
  fam.name = inst.name;
  fam.kind = FamilyKind::DistancePenalty;
  fam.initial.theta = inst.params.at("theta");
  const std::string name = inst.name;
  fam.generate = [name, D](const ApproxParams &a) { return distance_problem(name, D, a.theta); };
  inst.family = fam;
  inst.family_inner = InnerSolver::Dc;
  inst.flags.dc = true;
  inst.flags.proximal_distance = true;
  return inst;
}

Instance make_distpen(const Params &over) {
  ParamReader p("distpen",
                {{"rho", 1.0}, {"f0_weight", 0.0}, {"hard", 0.5}, {"theta", 1.0}, {"x0", 0.2}},
                over);
  if (p["f0_weight"] < 0) throw RegistryError("instance 'distpen': 'f0_weight' must be >= 0");
  p.positive("theta");
  DistanceData D;
  D.sets = {(Mat(1, 2) << -1.0, 1.0).finished()};
  D.rho = vec1(p.positive("rho"));
  D.Q = Mat::Constant(1, 1, 2.0 * p["f0_weight"]);
  D.q = Vec::Zero(1);
  D.a = vec1(1.0);
  D.b = -p["hard"];
  Instance inst;
  inst.name = "distpen";
  inst.description = "f0_weight x^2 + (rho/2) dist^2(x, {-1, 1}); family adds x <= hard";
  inst.problem = distance_problem(inst.name, D, std::nullopt);
  inst.x0 = read_x0(p, 1);
  inst.grid_box = {{vec1(-2.0), vec1(2.0)}};
  inst.params = p.all();
  return finish_distance(std::move(inst), D);
}

Instance make_distpen2(const Params &over) {
  ParamReader p("distpen2",
                {{"rho_1", 1.0}, {"rho_2", 2.0}, {"f0_weight", 0.05}, {"theta", 1.0},
                 {"x0_1", 0.3}, {"x0_2", -0.2}},
                over);
  if (p["f0_weight"] < 0) throw RegistryError("instance 'distpen2': 'f0_weight' must be >= 0");
  p.positive("theta");
  DistanceData D;
  D.sets = {(Mat(2, 2) << 1.0, 0.0, 0.0, 1.0).finished(),
            (Mat(2, 2) << 1.0, -1.0, 1.0, 0.0).finished()};
  D.rho = vec2(p.positive("rho_1"), p.positive("rho_2"));
  D.Q = 2.0 * p["f0_weight"] * Mat::Identity(2, 2);
  D.q = Vec::Zero(2);
  D.a = vec2(1.0, 1.0);
  D.b = -1.0;
  Instance inst;
  inst.name = "distpen2";
  inst.description = "f0_weight |x|^2 + sum (rho_i/2) dist^2(x, K_i) with K_1 = {e1, e2}, "
                     "K_2 = {(1,1), (-1,0)}; family adds x1 + x2 <= 1";
  inst.problem = distance_problem(inst.name, D, std::nullopt);
  inst.x0 = read_x0(p, 2);
  inst.grid_box = {{Vec::Constant(2, -2.0), Vec::Constant(2, 2.0)}};
  inst.params = p.all();
  return finish_distance(std::move(inst), D);
}

Instance make_sparse_concave(const Params &over) {
  ParamReader p("sparse-concave",
                {{"delta", 0.5}, {"tau", 2.0}, {"x0_1", 1.0}, {"x0_2", 1.0}}, over);
  const double delta = p.positive("delta");
  const double tau = p["tau"];
  if (tau < 1.0 / delta)
    throw RegistryError("instance 'sparse-concave': 'tau' must be at least 1/delta");
  Instance inst;
  inst.name = "sparse-concave";
  inst.description = "0.5|x - (1.5, 0.2)|^2 + log(1 + |x|_1 / delta) on [-3, 3]^2, "
                     "split as tau|x|_1 - (tau|x|_1 - log(1 + |x|_1 / delta))";
  auto &P = inst.problem;
  P.name = inst.name;
  P.X = FeasibleSet::box(Vec::Constant(2, -3.0), Vec::Constant(2, 3.0));
  const Vec c = vec2(1.5, 0.2);
  P.f0 = SmoothFunction::from_quadratic(Mat::Identity(2, 2), -c, 0.5 * c.squaredNorm());
  DcComponent comp;
  Mat rows(4, 2);
  rows << tau, tau, tau, -tau, -tau, tau, -tau, -tau;
  comp.f1 = ConvexPart::polyhedral(rows, Vec::Zero(4));
  comp.f2 = ConvexPart::oracle(
      2,
      [tau, delta](const Vec &x) {
        const double s = x.lpNorm<1>();
        return tau * s - std::log1p(s / delta);
      },
      [tau, delta](const Vec &x) {
        const double slope = tau - 1.0 / (delta + x.lpNorm<1>());
        return Vec(slope * x.array().sign().matrix());
      });
  P.dc = {comp};
  P.h = make_separable_pwl(vec1(1.0), vec1(0.0));
  inst.x0 = read_x0(p, 2);
  inst.flags.dc = true;
  inst.grid_box = {{Vec::Constant(2, -3.0), Vec::Constant(2, 3.0)}};
  inst.params = p.all();
  return inst;
}

using Builder = Instance (*)(const Params &);

const std::vector<std::pair<std::string, Builder>> &registry() {
  static const std::vector<std::pair<std::string, Builder>> r{
      {"abs1d", make_abs1d},       {"sincounter", make_sincounter},
      {"quartic", make_quartic},   {"hingeconvex", make_hingeconvex},
      {"buffered", make_buffered}, {"distpen", make_distpen},
      {"distpen2", make_distpen2}, {"sparse-concave", make_sparse_concave}};
  return r;
}

// ---- sampled flag checks ----

/// Points of X (or of a box around the origin when X is unbounded).
class Sampler {
public:
  Sampler(const FeasibleSet &X, unsigned long seed) : X_(X), rng_(seed) {}
  Vec point() {
    const Eigen::Index n = X_.dim();
    Vec x(n);
    for (Eigen::Index i = 0; i < n; ++i) {
      double lo = -3.0, hi = 3.0;
      if (X_.kind() == FeasibleSet::Kind::Box) {
        lo = std::max(lo, X_.lower()(i));
        hi = std::min(hi, X_.upper()(i));
      }
      x(i) = std::uniform_real_distribution<double>(lo, hi)(rng_);
    }
    return X_.is_convex() ? X_.project(x) : x;
  }
  Vec free_point(Eigen::Index m, double scale) {
    Vec z(m);
    for (Eigen::Index i = 0; i < m; ++i)
      z(i) = std::uniform_real_distribution<double>(-scale, scale)(rng_);
    return z;
  }

private:
  const FeasibleSet &X_;
  std::mt19937_64 rng_;
};

constexpr double kCheckTol = 1e-8;

bool midpoint_convex(const std::function<double(const Vec &)> &f, const Vec &a, const Vec &b) {
  const double fa = f(a), fb = f(b), fm = f(0.5 * (a + b));
  return fm <= 0.5 * (fa + fb) + kCheckTol * (1.0 + std::abs(fa) + std::abs(fb));
}

bool subgradient_ok(double fa, const Vec &g, double fb, const Vec &a, const Vec &b) {
  return fb >= fa + g.dot(b - a) - kCheckTol * (1.0 + std::abs(fa) + std::abs(fb));
}

void check_convex_part(const ConvexPart &c, const std::string &what, Sampler &S, int samples,
                       FlagReport &rep) {
  for (int s = 0; s < samples; ++s) {
    const Vec a = S.point(), b = S.point();
    if (!midpoint_convex([&](const Vec &x) { return c.value(x); }, a, b)) {
      rep.failures.push_back(what + ": midpoint convexity violated");
      return;
    }
    if (!subgradient_ok(c.value(a), c.subgradient(a), c.value(b), a, b)) {
      rep.failures.push_back(what + ": subgradient inequality violated");
      return;
    }
  }
}

} // namespace

std::vector<std::string> instance_names() {
  std::vector<std::string> out;
  for (const auto &[n, b] : registry()) out.push_back(n);
  return out;
}

Instance build_instance(const std::string &name, const Params &params) {
  for (const auto &[n, b] : registry())
    if (n == name) {
      Instance inst = b(params);
      inst.problem.validate();
      const FlagReport rep = certify_flags(inst, 7, 50);
      if (!rep.passed) {
        std::string msg = "instance '" + name + "' failed its flag checks:";
        for (const auto &f : rep.failures) msg += " " + f + ";";
        throw InternalConsistency(msg);
      }
      return inst;
    }
  throw RegistryError("unknown instance '" + name + "'");
}

FlagReport certify_flags(const Instance &inst, unsigned long seed, int samples) {
  const CompositeProblem &P = inst.problem;
  FlagReport rep;
  Sampler S(P.X, seed);
  const Eigen::Index m = P.m();

  if (!P.X.contains(inst.x0)) rep.failures.push_back("x0 not in X");

  for (int s = 0; s < samples; ++s) {
    const Vec a = S.point(), b = S.point();
    if (!check_gradient(P.f0, a, 1e-6, 1e-4).passed) {
      rep.failures.push_back("f0: gradient disagrees with finite differences");
      break;
    }
    if (P.f0.convex && !midpoint_convex(P.f0.value, a, b)) {
      rep.failures.push_back("f0: declared convex but midpoint convexity fails");
      break;
    }
  }

  if (inst.flags.bundle || inst.flags.structured) {
    if (!P.F) {
      rep.failures.push_back("bundle flag without a smooth mapping");
    } else {
      const VectorMapping &F = *P.F;
      for (int s = 0; s < samples; ++s) {
        const Vec a = S.point(), b = S.point();
        if (!check_jacobian(F, a, 1e-6, 1e-4).passed) {
          rep.failures.push_back("F: Jacobian disagrees with finite differences");
          break;
        }
        const Mat Ja = F.jacobian(a), Jb = F.jacobian(b);
        const double d = (a - b).norm();
        bool ok = true;
        for (Eigen::Index i = 0; i < F.m && ok; ++i) {
          const auto &L = F.component_L[static_cast<size_t>(i)];
          if (L && (Ja.row(i) - Jb.row(i)).norm() > 0.5 * *L * d + kCheckTol) ok = false;
        }
        if (!ok) {
          rep.failures.push_back("F: gradient Lipschitz constant L_i/2 violated");
          break;
        }
      }
    }
    // Real-valued h with a Lipschitz bound.
    double Lh = kInf;
    try {
      Lh = P.h->lipschitz_bound();
    } catch (const ConfigurationError &) {
      rep.failures.push_back("h: no Lipschitz bound");
    }
    for (int s = 0; s < samples; ++s) {
      const Vec z = S.free_point(m, 5.0), w = S.free_point(m, 5.0);
      const double hz = P.h->value(z), hw = P.h->value(w);
      if (!std::isfinite(hz) || !std::isfinite(hw)) {
        rep.failures.push_back("h: not real-valued");
        break;
      }
      if (std::abs(hz - hw) > Lh * (z - w).norm() + kCheckTol) {
        rep.failures.push_back("h: Lipschitz bound violated");
        break;
      }
    }
  }

  for (int s = 0; s < samples; ++s) {
    const Vec z = S.free_point(m, 5.0), w = S.free_point(m, 5.0);
    const double hz = P.h->value(z), hw = P.h->value(w);
    if (!std::isfinite(hz) || !std::isfinite(hw)) continue;
    if (!midpoint_convex([&](const Vec &u) { return P.h->value(u); }, z, w) ||
        !subgradient_ok(hz, P.h->subgradient(z), hw, z, w)) {
      rep.failures.push_back("h: convexity or subgradient inequality violated");
      break;
    }
    if (P.h->monotone()) {
      const Vec up = z + (w - z).cwiseAbs();
      if (P.h->value(up) < hz - kCheckTol * (1.0 + std::abs(hz))) {
        rep.failures.push_back("h: declared nondecreasing but decreases");
        break;
      }
    }
  }

  if (inst.flags.dc || inst.flags.proximal_distance) {
    if (!P.has_dc()) rep.failures.push_back("dc flag without DC components");
    if (!P.h->monotone()) rep.failures.push_back("dc flag with h not nondecreasing");
    if (!P.f0.convex) rep.failures.push_back("dc flag with nonconvex f0");
    for (size_t i = 0; i < P.dc.size(); ++i) {
      check_convex_part(P.dc[i].f1, "f1_" + std::to_string(i + 1), S, samples, rep);
      check_convex_part(P.dc[i].f2, "f2_" + std::to_string(i + 1), S, samples, rep);
    }
    if (P.F) {
      for (int s = 0; s < samples; ++s) {
        const Vec a = S.point();
        if ((P.map_value(a) - P.F->value(a)).norm() > 1e-10 * (1.0 + P.F->value(a).norm())) {
          rep.failures.push_back("DC components disagree with the smooth mapping");
          break;
        }
      }
    }
  }
  if (inst.flags.proximal_distance && !P.distance)
    rep.failures.push_back("proximal-distance flag without distance structure");

  rep.passed = rep.failures.empty();
  return rep;
}

// ---- brute-force residual oracle ----

namespace {

constexpr double kFd = 1e-7;
constexpr double kYCap = 1e6;

/// Subdifferential interval of a convex scalar function from one-sided
/// difference quotients of its values (exact for piecewise-linear pieces
/// wider than kFd, O(kFd) otherwise).
std::pair<double, double> fd_interval(const std::function<double(double)> &f, double t) {
  const double ft = f(t);
  double lo = (ft - f(t - kFd)) / kFd;
  double hi = (f(t + kFd) - ft) / kFd;
  if (!std::isfinite(lo)) lo = -kYCap;
  if (!std::isfinite(hi)) hi = kYCap;
  return {std::max(lo, -kYCap), std::min(hi, kYCap)};
}

double dist_interval(double y, double lo, double hi) {
  return y < lo ? lo - y : (y > hi ? y - hi : 0.0);
}

/// min over n in N_X(x) of |v + n|, computed coordinatewise for boxes.
double tangent(const FeasibleSet &X, const Vec &x, const Vec &v) {
  if (X.kind() == FeasibleSet::Kind::Whole) return v.norm();
  if (X.kind() == FeasibleSet::Kind::Box) {
    double s = 0.0;
    for (Eigen::Index i = 0; i < x.size(); ++i) {
      double r = v(i);
      const double tol = 1e-12 * (1.0 + std::abs(x(i)));
      const bool at_lo = x(i) <= X.lower()(i) + tol, at_hi = x(i) >= X.upper()(i) - tol;
      if (at_lo && at_hi) r = 0.0;
      else if (at_hi) r = std::max(r, 0.0);  // normal cone [0, inf)
      else if (at_lo) r = std::min(r, 0.0);  // normal cone (-inf, 0]
      s += r * r;
    }
    return std::sqrt(s);
  }
  return X.tangent_residual(x, v);
}

/// -N_X(x) for a one-dimensional X as an interval.
std::pair<double, double> neg_normal_interval(const FeasibleSet &X, const Vec &x) {
  if (X.kind() == FeasibleSet::Kind::Whole) return {0.0, 0.0};
  if (X.kind() != FeasibleSet::Kind::Box)
    throw Unsupported("grid_residual: DC mode supports whole-line or interval X");
  const double tol = 1e-12 * (1.0 + std::abs(x(0)));
  const bool at_lo = x(0) <= X.lower()(0) + tol, at_hi = x(0) >= X.upper()(0) - tol;
  return {at_hi ? -kInf : 0.0, at_lo ? kInf : 0.0};
}

/// Minimizer of a convex function on [a, b]: coarse scan, then golden section.
double convex_min(const std::function<double(double)> &f, double a, double b, double &best) {
  const int N = 40;
  int ib = 0;
  double fb = kInf;
  for (int i = 0; i <= N; ++i) {
    const double v = f(a + (b - a) * i / N);
    if (v < fb) fb = v, ib = i;
  }
  double lo = a + (b - a) * std::max(ib - 1, 0) / N;
  double hi = a + (b - a) * std::min(ib + 1, N) / N;
  const double g = 0.5 * (std::sqrt(5.0) - 1.0);
  double c = hi - g * (hi - lo), d = lo + g * (hi - lo);
  double fc = f(c), fd = f(d);
  for (int it = 0; it < 120 && hi - lo > 1e-15 * (1.0 + std::abs(lo)); ++it) {
    if (fc < fd) {
      hi = d, d = c, fd = fc;
      c = hi - g * (hi - lo), fc = f(c);
    } else {
      lo = c, c = d, fc = fd;
      d = lo + g * (hi - lo), fd = f(d);
    }
  }
  const double xm = 0.5 * (lo + hi);
  best = std::min({fb, f(xm)});
  return xm;
}

std::vector<double> z_axis(double Fi, const std::vector<double> &kinks) {
  std::vector<double> out{Fi};
  const double R = std::max(1.0, std::abs(Fi));
  for (int j = -3; j <= 3; ++j)
    if (j) out.push_back(Fi + R * j / 10.0);
  for (double k : kinks) out.push_back(k);
  return out;
}

/// Half-width added around the subdifferential when bracketing y.
double y_bound(double scale) { return 10.0 * (1.0 + scale); }

double grid_residual_smooth(const CompositeProblem &P, const Vec &x) {
  if (!P.F) throw InvalidInput("grid_residual: smooth mode needs a smooth mapping");
  const Eigen::Index m = P.m();
  if (m > 2) throw Unsupported("grid_residual: m > 2");
  const Vec Fx = P.F->value(x);
  const Mat J = P.F->jacobian(x);
  const Vec c = P.f0.gradient(x);
  const auto kinks = P.h->coordinate_kinks();
  const double scale = c.norm() * (1.0 + J.norm()) + J.norm();

  std::vector<std::vector<double>> axes;
  for (Eigen::Index i = 0; i < m; ++i) axes.push_back(z_axis(Fx(i), kinks));

  double best = kInf;
  auto eval_z = [&](const Vec &z) {
    const double hz = P.h->value(z);
    if (!std::isfinite(hz)) return;
    std::vector<std::pair<double, double>> I;
    for (Eigen::Index i = 0; i < m; ++i) {
      I.push_back(fd_interval(
          [&](double t) {
            Vec u = z;
            u(i) = t;
            return P.h->value(u);
          },
          z(i)));
    }
    const double primal2 = (Fx - z).squaredNorm();
    auto phi = [&](const Vec &y) {
      double d2 = 0.0;
      for (Eigen::Index i = 0; i < m; ++i) {
        const double d = dist_interval(y(i), I[static_cast<size_t>(i)].first,
                                       I[static_cast<size_t>(i)].second);
        d2 += d * d;
      }
      const double t = tangent(P.X, x, c + J.transpose() * y);
      return primal2 + d2 + t * t;
    };
    auto range = [&](Eigen::Index i) {
      const auto [lo, hi] = I[static_cast<size_t>(i)];
      const double B = y_bound(scale);
      return std::pair<double, double>{std::min(lo, 0.0) - B, std::max(hi, 0.0) + B};
    };
    double val = kInf;
    if (m == 1) {
      const auto [a, b] = range(0);
      Vec y(1);
      convex_min([&](double t) { y(0) = t; return phi(y); }, a, b, val);
    } else {
      const auto [a0, b0] = range(0);
      const auto [a1, b1] = range(1);
      Vec y(2);
      // Partial minimization of a jointly convex function stays convex.
      auto inner = [&](double t0) {
        double v = kInf;
        convex_min([&](double t1) { y(0) = t0; y(1) = t1; return phi(y); }, a1, b1, v);
        return v;
      };
      convex_min(inner, a0, b0, val);
    }
    best = std::min(best, val);
  };

  Vec z(m);
  if (m == 1) {
    for (double a : axes[0]) {
      z(0) = a;
      eval_z(z);
    }
  } else {
    for (double a : axes[0])
      for (double b : axes[1]) {
        z << a, b;
        eval_z(z);
      }
  }
  if (!std::isfinite(best)) throw OracleFailure("grid_residual: no z in the domain of h");
  return std::sqrt(best);
}

double grid_residual_dc(const CompositeProblem &P, const Vec &x) {
  if (!P.has_dc()) throw InvalidInput("grid_residual: DC mode needs DC components");
  if (P.n() != 1 || P.m() != 1) throw Unsupported("grid_residual: DC mode needs n = m = 1");
  const DcComponent &comp = P.dc[0];
  auto part = [](const ConvexPart &p) {
    return [&p](double t) { return p.value(vec1(t)); };
  };
  const auto [a1, b1] = fd_interval(part(comp.f1), x(0));
  const auto [a2, b2] = fd_interval(part(comp.f2), x(0));
  const double wlo = a1 - b2, whi = b1 - a2;
  const double c = P.f0.gradient(x)(0);
  const double Fx = comp.value(x);
  const auto kinks = P.h->coordinate_kinks();

  double best = kInf;
  Vec z(1);
  for (double zz : z_axis(Fx, kinks)) {
    z(0) = zz;
    if (!std::isfinite(P.h->value(z))) continue;
    const auto [lo, hi] = fd_interval([&](double t) { return P.h->value(vec1(t)); }, zz);
    const double primal2 = (Fx - zz) * (Fx - zz);
    const double scale = std::abs(c) * (1.0 + std::max(std::abs(wlo), std::abs(whi)));
    const double B = y_bound(scale);
    // Objective in y after minimizing over w in [wlo, whi]: the gradient
    // c + y w sweeps an interval, whose distance to -N_X(x) is explicit.
    const auto [nlo, nhi] = neg_normal_interval(P.X, x);
    auto g = [&](double y) {
      const double d = dist_interval(y, lo, hi);
      const double e1 = c + y * wlo, e2 = c + y * whi;
      const double gap = std::max({0.0, nlo - std::max(e1, e2), std::min(e1, e2) - nhi});
      return primal2 + d * d + gap * gap;
    };
    // g need not be convex in y: scan, then zoom around the best point.
    double ya = std::min(lo, 0.0) - B, yb = std::max(hi, 0.0) + B;
    double yb_best = ya, gb = kInf;
    for (int round = 0; round < 40; ++round) {
      const int N = 200;
      for (int i = 0; i <= N; ++i) {
        const double y = ya + (yb - ya) * i / N;
        const double v = g(y);
        if (v < gb) gb = v, yb_best = y;
      }
      const double w = (yb - ya) / N;
      ya = yb_best - 2 * w;
      yb = yb_best + 2 * w;
      if (w < 1e-14) break;
    }
    best = std::min(best, gb);
  }
  if (!std::isfinite(best)) throw OracleFailure("grid_residual: no z in the domain of h");
  return std::sqrt(best);
}

} // namespace

double grid_residual(const CompositeProblem &problem, const Vec &x, DMode mode) {
  if (problem.n() > 2) throw Unsupported("grid oracle: n > 2");
  require_dim(x, problem.n(), "grid_residual: x");
  return mode == DMode::SmoothGradient ? grid_residual_smooth(problem, x)
                                       : grid_residual_dc(problem, x);
}

GridResult grid_oracle(const CompositeProblem &problem, const GridSpec &spec, DMode mode) {
  const Eigen::Index n = problem.n();
  if (n > 2) throw Unsupported("grid oracle: n > 2");
  require_dim(spec.lo, n, "grid_oracle: lo");
  require_dim(spec.hi, n, "grid_oracle: hi");
  if (!(spec.step > 0) || (spec.hi - spec.lo).minCoeff() < 0)
    throw InvalidInput("grid_oracle: need step > 0 and lo <= hi");

  std::vector<long> count(static_cast<size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i)
    count[static_cast<size_t>(i)] = std::lround((spec.hi(i) - spec.lo(i)) / spec.step) + 1;
  const long nx = count[0];
  const long ny = n == 2 ? count[1] : 1;

  GridResult res;
  // Index grid of stationary flags for the connected-run pass.
  std::vector<int> id(static_cast<size_t>(nx * ny), -1);
  for (long a = 0; a < nx; ++a)
    for (long b = 0; b < ny; ++b) {
      Vec x(n);
      x(0) = spec.lo(0) + static_cast<double>(a) * spec.step;
      if (n == 2) x(1) = spec.lo(1) + static_cast<double>(b) * spec.step;
      if (!problem.X.contains(x)) continue;
      const double r = grid_residual(problem, x, mode);
      res.points.push_back(x);
      res.residuals.push_back(r);
      if (r <= spec.tol) {
        id[static_cast<size_t>(a * ny + b)] = static_cast<int>(res.points.size() - 1);
        res.stationary.push_back(x);
      }
    }

  std::vector<bool> seen(id.size(), false);
  for (size_t start = 0; start < id.size(); ++start) {
    if (id[start] < 0 || seen[start]) continue;
    int best = id[start];
    std::deque<size_t> queue{start};
    seen[start] = true;
    while (!queue.empty()) {
      const size_t cur = queue.front();
      queue.pop_front();
      if (res.residuals[static_cast<size_t>(id[cur])] < res.residuals[static_cast<size_t>(best)])
        best = id[cur];
      const long a = static_cast<long>(cur) / ny, b = static_cast<long>(cur) % ny;
      const long nb[4][2] = {{a - 1, b}, {a + 1, b}, {a, b - 1}, {a, b + 1}};
      for (const auto &q : nb) {
        if (q[0] < 0 || q[0] >= nx || q[1] < 0 || q[1] >= ny) continue;
        const auto k = static_cast<size_t>(q[0] * ny + q[1]);
        if (id[k] >= 0 && !seen[k]) {
          seen[k] = true;
          queue.push_back(k);
        }
      }
    }
    res.representatives.push_back(res.points[static_cast<size_t>(best)]);
  }
  return res;
}

} // namespace compopt
