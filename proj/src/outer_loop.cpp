#include "compopt/outer_loop.hpp"

#include "compopt/json_util.hpp"

#include <algorithm>

namespace compopt {

namespace {

struct LsePiece {
  double value;
  Vec grad;
};

/// Soft-min of the group at x; also returns the weights.
LsePiece lse_eval(const LseGroup &g, double eta, const Vec &x, bool with_grad) {
  const size_t K = g.psi.size();
  if (K == 1) {
    return {g.psi[0].value(x), with_grad ? g.psi[0].gradient(x) : Vec()};
  }
  const double c = std::log(static_cast<double>(K)) / eta;
  Vec v(static_cast<Eigen::Index>(K));
  for (size_t k = 0; k < K; ++k) v(static_cast<Eigen::Index>(k)) = g.psi[k].value(x);
  const double mn = v.minCoeff();
  Vec w = (-c * (v.array() - mn)).exp().matrix();
  const double s = w.sum();
  LsePiece out{mn - std::log(s) / c, Vec()};
  if (with_grad) {
    w /= s;
    out.grad = Vec::Zero(x.size());
    for (size_t k = 0; k < K; ++k) out.grad += w(static_cast<Eigen::Index>(k)) * g.psi[k].gradient(x);
  }
  return out;
}

} // namespace

VectorMapping make_lse(std::vector<LseGroup> groups, double eta,
                       std::vector<std::optional<double>> component_L) {
  if (!(eta > 0) || !std::isfinite(eta)) throw InvalidInput("make_lse: eta must be positive");
  if (groups.empty()) throw InvalidInput("make_lse: no groups");
  const Eigen::Index n = groups[0].psi.empty() ? 0 : groups[0].psi[0].dim;
  for (const auto &g : groups) {
    if (g.psi.empty()) throw InvalidInput("make_lse: empty cut set");
    for (const auto &p : g.psi)
      if (p.dim != n) throw InvalidInput("make_lse: psi dimension mismatch");
  }
  const auto m = static_cast<Eigen::Index>(groups.size());
  if (!component_L.empty() && static_cast<Eigen::Index>(component_L.size()) != m)
    throw InvalidInput("make_lse: one L per group expected");
  VectorMapping F;
  F.n = n;
  F.m = m;
  F.component_L = std::move(component_L);
  auto shared = std::make_shared<const std::vector<LseGroup>>(std::move(groups));
  F.value = [shared, eta, m](const Vec &x) {
    Vec r(m);
    for (Eigen::Index i = 0; i < m; ++i)
      r(i) = lse_eval((*shared)[static_cast<size_t>(i)], eta, x, false).value;
    return r;
  };
  F.jacobian = [shared, eta, m, n](const Vec &x) {
    Mat J(m, n);
    for (Eigen::Index i = 0; i < m; ++i)
      J.row(i) = lse_eval((*shared)[static_cast<size_t>(i)], eta, x, true).grad.transpose();
    return J;
  };
  return F;
}

OuterPtr make_hinge_penalty(Eigen::Index m, double theta) {
  if (!(theta > 0)) throw InvalidInput("hinge penalty: parameter must be positive");
  return make_separable_pwl(Vec::Zero(m), Vec::Constant(m, theta));
}

OuterPtr make_hinge_penalty(OuterPtr inner, double rho) {
  if (!(rho > 0)) throw InvalidInput("hinge penalty: parameter must be positive");
  if (!inner) throw InvalidInput("hinge penalty: inner function missing");
  return make_composed(make_hinge_penalty(1, rho), {std::move(inner)});
}

OuterPtr make_distance_penalty(const Vec &rho, const Vec &eta) {
  if ((rho.array() <= 0).any() || (eta.array() <= 0).any())
    throw InvalidInput("distance penalty: weights must be positive");
  const Eigen::Index q = rho.size();
  const Eigen::Index m = eta.size();
  Vec a = Vec::Zero(q + m), b = Vec::Zero(q + m);
  a.head(q) = 0.5 * rho;
  b.tail(m) = eta;
  return make_separable_pwl(a, b);
}

std::string to_string(FamilyKind k) {
  switch (k) {
  case FamilyKind::Identity: return "identity";
  case FamilyKind::LseSmoothing: return "lse-smoothing";
  case FamilyKind::HingePenalty: return "hinge-penalty";
  case FamilyKind::DistancePenalty: return "distance-penalty";
  }
  return "?";
}

std::string to_string(InnerSolver s) {
  switch (s) {
  case InnerSolver::Bundle: return "bundle";
  case InnerSolver::Dc: return "dc";
  case InnerSolver::ProximalDistance: return "proximal-distance";
  }
  return "?";
}

nlohmann::json ApproxParams::to_json() const {
  return {{"eta", eta}, {"rho", rho}, {"theta", theta}};
}

std::string to_string(WarmStart w) {
  return w == WarmStart::Previous ? "previous" : "initial";
}

ApproxParams Schedule::params_at(const ApproxParams &initial, int nu) const {
  ApproxParams p = initial;
  p.eta *= std::pow(eta_factor, nu);
  p.rho *= std::pow(rho_factor, nu);
  p.theta *= std::pow(theta_factor, nu);
  return p;
}

double Schedule::tol_at(int nu) const { return tol0 * std::pow(tol_factor, nu); }

void Schedule::validate() const {
  auto bad = [](const std::string &f, const std::string &why) {
    throw ConfigurationError("schedule field '" + f + "': " + why);
  };
  if (length < 1) bad("length", "must be at least 1");
  if (!(tol0 > 0)) bad("tol0", "must be positive");
  if (!(tol_factor > 0 && tol_factor < 1)) bad("tol_factor", "must lie in (0, 1)");
  if (!(eta_factor > 0 && eta_factor <= 1)) bad("eta_factor", "must lie in (0, 1]");
  if (!(rho_factor >= 1)) bad("rho_factor", "must be at least 1");
  if (!(theta_factor >= 1)) bad("theta_factor", "must be at least 1");
  if (first < 0) bad("first", "must be nonnegative");
  if (divergence_threshold && !(*divergence_threshold > 0))
    bad("divergence_threshold", "must be positive");
}

nlohmann::json OuterRow::to_json() const {
  nlohmann::json j = {{"nu", nu},
                      {"params", params.to_json()},
                      {"tol", tol},
                      {"inner_iterations", inner_iterations},
                      {"inner_converged", inner_converged},
                      {"certificate", certificate},
                      {"certified_tol", certified_tol},
                      {"approx_residual", approx_residual.to_json()},
                      {"near_stationary", near_stationary},
                      {"x", vec_to_json(x)},
                      {"y_norm", y_norm}};
  j["actual_residual"] = actual_residual ? actual_residual->to_json() : nlohmann::json();
  if (!failure.empty()) j["failure"] = failure;
  return j;
}

nlohmann::json OuterResult::to_json() const {
  nlohmann::json r = nlohmann::json::array();
  for (const auto &row : rows) r.push_back(row.to_json());
  return {{"rows", r},
          {"diagnostics", diagnostics.to_json()},
          {"completed", completed},
          {"halted_on_divergence", halted_on_divergence},
          {"failure", failure}};
}

OuterResult run_outer(const ApproximationFamily &family, const Schedule &schedule,
                      InnerSolver inner, const Vec &x0, const InnerConfigs &configs) {
  schedule.validate();
  if (!family.generate) throw ConfigurationError("outer loop: family has no generator");
  OuterResult res;
  std::vector<MultiplierRecord> ys;
  Vec x = x0;
  for (int j = 0; j < schedule.length; ++j) {
    const int nu = schedule.first + j;
    OuterRow row;
    row.nu = nu;
    row.params = schedule.params_at(family.initial, nu);
    row.tol = schedule.tol_at(nu);
    try {
      const CompositeProblem P = family.generate(row.params);
      // Warm start, moved into X^nu if the set changed.
      if (!P.X.contains(x)) x = P.X.project(x);
      StationarityTriple tr;
      if (inner == InnerSolver::Bundle) {
        BundleConfig c = configs.bundle;
        c.tol = row.tol;
        const BundleResult r = bundle_run(P, c, x);
        row.inner_iterations = r.iterations;
        row.inner_converged = r.converged;
        row.certificate = r.certificate.eps;
        row.approx_residual = r.measure.breakdown;
        tr = r.measure.triple;
      } else {
        DcConfig c = configs.dc;
        c.tol = row.tol;
        if (c.e && *c.e < c.tol) c.e = c.tol;
        const DcResult r = dc_run(P, c, x,
                                  inner == InnerSolver::Dc ? DcVariant::Dc
                                                           : DcVariant::ProximalDistance);
        row.inner_iterations = r.iterations;
        row.inner_converged = r.converged;
        row.certificate = r.certificate.eps;
        row.approx_residual = r.residual;
        tr = r.triple;
      }
      row.certified_tol = std::max(row.certificate, row.tol);
      // The certificate bounds the residual in exact arithmetic; allow for
      // the rounding in evaluating both.
      row.near_stationary = row.approx_residual.total <= row.certified_tol * (1.0 + 1e-12) + 1e-15;
      row.x = tr.x;
      row.y = tr.y;
      row.y_norm = tr.y.norm();
      if (family.actual_residual) row.actual_residual = family.actual_residual(tr.x);
      if (schedule.warm_start == WarmStart::Previous) x = tr.x;
    } catch (const Error &e) {
      row.failure = e.what();
      res.failure = "nu=" + std::to_string(nu) + ": " + e.what();
      res.rows.push_back(row);
      break;
    }
    ys.push_back({row.y, row.near_stationary});
    res.rows.push_back(row);
    res.diagnostics = multiplier_diagnostics(ys, schedule.divergence_threshold);
    if (res.diagnostics.divergent && schedule.halt_on_divergence) {
      res.halted_on_divergence = true;
      break;
    }
  }
  res.completed = res.failure.empty() && !res.halted_on_divergence &&
                  static_cast<int>(res.rows.size()) == schedule.length;
  return res;
}

} // namespace compopt
