#include "compopt/dc.hpp"

#include <algorithm>

namespace compopt {

namespace {

void load_linearization(DcState &s, const CompositeProblem &problem) {
  const Eigen::Index m = problem.m();
  s.f2_values = Vec(m);
  s.f2_slopes = Mat(problem.n(), m);
  for (Eigen::Index i = 0; i < m; ++i) {
    const auto &c = problem.dc[static_cast<size_t>(i)];
    s.f2_values(i) = c.f2.value(s.x);
    s.f2_slopes.col(i) = c.f2.subgradient(s.x);
  }
}

double linearization_error(const CompositeProblem &problem, const DcState &s, const Vec &x) {
  double e = -kInf;
  for (Eigen::Index i = 0; i < problem.m(); ++i) {
    const auto &c = problem.dc[static_cast<size_t>(i)];
    e = std::max(e, c.f2.value(x) - (s.f2_values(i) + s.f2_slopes.col(i).dot(x - s.x)));
  }
  return e;
}

double dc_objective(const CompositeProblem &problem, const Vec &x) {
  Vec z(problem.m());
  for (Eigen::Index i = 0; i < problem.m(); ++i) z(i) = problem.dc[static_cast<size_t>(i)].value(x);
  return problem.f0.value(x) + problem.h->value(z);
}

/// Shared tail of both step variants: e_k, stop test, state advance.
void finish_step(DcRecord &rec, DcState &state, const CompositeProblem &problem,
                 const DcConfig &config) {
  rec.e = linearization_error(problem, state, rec.x_next);
  rec.step_norm = (rec.x_next - state.x).norm();
  rec.objective = dc_objective(problem, rec.x_next);
  rec.stop = rec.v <= config.tol && rec.e <= config.tol;
  state.x = rec.x_next;
  state.objective = rec.objective;
  load_linearization(state, problem);
  ++state.k;
}

} // namespace

void DcConfig::validate() const {
  auto bad = [](const std::string &f, const std::string &why) {
    throw ConfigurationError("dc config field '" + f + "': " + why);
  };
  if (!(t > 0) || !std::isfinite(t)) bad("t", "must be positive and finite");
  if (!(tol >= 0)) bad("tol", "must be nonnegative");
  if (max_iter < 1) bad("max_iter", "must be at least 1");
  if (e) {
    if (!(*e >= 0)) bad("e", "must be nonnegative");
    if (tol > 0 && *e < tol) bad("e", "must be at least tol");
  }
}

DcState dc_init(const CompositeProblem &problem, const DcConfig &config, const Vec &x0) {
  config.validate();
  problem.validate();
  if (!problem.has_dc()) throw InvalidInput("dc: problem needs DC components");
  if (!problem.h->monotone()) throw ConfigurationError("dc: h must be nondecreasing");
  if (!problem.f0.convex) throw ConfigurationError("dc: f0 must be convex");
  require_dim(x0, problem.n(), "dc x0");
  require_finite(x0, "dc x0");
  if (!problem.X.contains(x0)) throw InfeasiblePoint("dc: x0 is not in X");
  DcState s;
  s.x = x0;
  s.objective = dc_objective(problem, x0);
  load_linearization(s, problem);
  return s;
}

DcRecord dc_step(DcState &state, const CompositeProblem &problem, const DcConfig &config) {
  DcMasterSpec spec;
  spec.f0 = &problem.f0;
  spec.X = &problem.X;
  spec.h = problem.h.get();
  spec.components = &problem.dc;
  spec.x_k = state.x;
  spec.t = config.t;
  spec.f2_values = state.f2_values;
  spec.f2_slopes = state.f2_slopes;
  spec.center_value = state.objective;
  const MasterSolution sol = solve_dc(spec, config.master);

  DcRecord rec;
  rec.k = state.k;
  rec.x = state.x;
  rec.prev_objective = state.objective;
  rec.x_next = sol.x_next;
  rec.y_next = sol.y_next;
  rec.z_next = sol.z_next;
  rec.f1_witness = sol.f1_witness;
  rec.f2_slopes = state.f2_slopes;
  rec.master_kkt = sol.kkt_residual;
  rec.master_scale = sol.scale;
  rec.v = state.objective - (problem.f0.value(sol.x_next) + problem.h->value(sol.z_next));
  finish_step(rec, state, problem, config);
  return rec;
}

DcRecord proximal_distance_step(DcState &state, const CompositeProblem &problem,
                                const DcConfig &config) {
  if (!problem.distance) throw InvalidInput("proximal distance: no distance structure");
  const auto &ds = *problem.distance;
  const auto sep = as_separable(*problem.h);
  const Eigen::Index m = static_cast<Eigen::Index>(ds.sets.size());
  if (!sep || m != problem.m() || (sep->b.array() != 0).any() ||
      ((sep->a - 0.5 * ds.rho).array().abs() > 0).any())
    throw ConfigurationError("proximal distance: h must be sum_i (rho_i/2) z_i");

  const double mu = 1.0 / config.t + ds.rho.sum();
  const Eigen::Index n = problem.n();
  std::vector<Vec> p;
  Vec p_hat = state.x / config.t;
  for (Eigen::Index i = 0; i < m; ++i) {
    p.push_back(ds.sets[static_cast<size_t>(i)].project(state.x));
    p_hat += ds.rho(i) * p.back();
  }
  p_hat /= mu;
  DistanceMasterSpec spec{&problem.f0, &problem.X, p_hat, mu};
  const MasterSolution sol = solve_distance(spec, config.master);

  DcRecord rec;
  rec.k = state.k;
  rec.x = state.x;
  rec.prev_objective = state.objective;
  rec.x_next = sol.x_next;
  rec.master_kkt = sol.kkt_residual;
  rec.master_scale = sol.scale;
  rec.y_next = 0.5 * ds.rho;
  rec.z_next = Vec(m);
  rec.f1_witness = Mat(n, m);
  double model = problem.f0.value(sol.x_next);
  for (Eigen::Index i = 0; i < m; ++i) {
    const double sq = (sol.x_next - p[static_cast<size_t>(i)]).squaredNorm();
    rec.z_next(i) = sq;
    model += 0.5 * ds.rho(i) * sq;
    rec.f1_witness.col(i) = problem.dc[static_cast<size_t>(i)].f1.subgradient(sol.x_next);
  }
  rec.f2_slopes = state.f2_slopes;
  rec.v = state.objective - model;
  finish_step(rec, state, problem, config);
  return rec;
}

nlohmann::json DcCertificate::to_json() const {
  return {{"eps", eps}, {"primal", primal}, {"prox", prox}, {"dual", dual}, {"dual_exact", dual_exact}};
}

DcCertificate dc_epsilon_certificate(const CompositeProblem &problem, const DcRecord &last,
                                     const DcConfig &config) {
  DcCertificate c;
  Vec Fx(problem.m());
  for (Eigen::Index i = 0; i < problem.m(); ++i) Fx(i) = problem.dc[static_cast<size_t>(i)].value(last.x_next);
  c.primal = (Fx - last.z_next).norm();
  c.prox = (last.x_next - last.x).norm() / config.t;
  if (last.e <= config.eps_param()) {
    // The stored s2 is then an e-subgradient at x_{k+1}; pick it.
    c.dual = 0.0;
  } else {
    Vec g = Vec::Zero(problem.n());
    for (Eigen::Index i = 0; i < problem.m(); ++i)
      g += last.y_next(i) * (last.f2_slopes.col(i) -
                             problem.dc[static_cast<size_t>(i)].f2.subgradient(last.x_next));
    c.dual = g.norm();
    c.dual_exact = false;
  }
  c.eps = std::sqrt(c.primal * c.primal + c.prox * c.prox + c.dual * c.dual);
  return c;
}

DcResult dc_run(const CompositeProblem &problem, const DcConfig &config, const Vec &x0,
                DcVariant variant, const DcObserver &observer) {
  DcState state = dc_init(problem, config, x0);
  DcResult res;
  for (int it = 0; it < config.max_iter; ++it) {
    DcRecord rec = variant == DcVariant::Dc ? dc_step(state, problem, config)
                                            : proximal_distance_step(state, problem, config);
    if (observer) observer(rec);
    res.final_v = rec.v;
    res.final_e = rec.e;
    res.converged = rec.stop;
    res.log.push_back(std::move(rec));
    if (res.converged) break;
  }
  res.iterations = static_cast<int>(res.log.size());
  const DcRecord &last = res.log.back();
  res.x = last.x_next;
  res.certificate = dc_epsilon_certificate(problem, last, config);
  res.triple = {last.x_next, last.y_next, last.z_next};
  const DcWitness w{last.f1_witness, last.f2_slopes};
  res.residual = residual(problem, DMode::DcPair, res.triple, &w);
  return res;
}

} // namespace compopt
