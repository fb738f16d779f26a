#include "compopt/bundle.hpp"

#include "compopt/json_util.hpp"

#include <algorithm>

namespace compopt {

std::string to_string(StepKind k) {
  switch (k) {
  case StepKind::Serious: return "serious";
  case StepKind::Null: return "null";
  case StepKind::Backtracking: return "backtracking";
  case StepKind::Stop: return "stop";
  }
  return "?";
}

void BundleConfig::validate() const {
  auto bad = [](const std::string &f, const std::string &why) {
    throw ConfigurationError("bundle config field '" + f + "': " + why);
  };
  if (!(kappa > 0 && kappa < 1)) bad("kappa", "must lie in (0, 1)");
  if (!(tau > 1) || !std::isfinite(tau)) bad("tau", "must exceed 1");
  if (!(t_lower0 > 0)) bad("t_lower0", "must be positive");
  if (!(t0 > t_lower0)) bad("t0", "must exceed t_lower0");
  if (!(t_max > t0) || !std::isfinite(t_max)) bad("t_max", "must be finite and exceed t0");
  if (!(tol >= 0)) bad("tol", "must be nonnegative");
  if (max_iter < 1) bad("max_iter", "must be at least 1");
  if (policy.max_bundle < 4) bad("max_bundle", "must be at least 4");
  if (!(policy.activity_threshold >= 0)) bad("activity_threshold", "must be nonnegative");
}

double BundleState::model_value(const Vec &z) const {
  return structured ? structured->evaluate(z) : flat.evaluate(z);
}

size_t BundleState::model_size() const { return structured ? structured->size() : flat.size(); }

nlohmann::json BundleState::model_json() const {
  return structured ? structured->to_json() : flat.to_json();
}

BundleState bundle_init(const CompositeProblem &problem, const BundleConfig &config,
                        const Vec &x0) {
  config.validate();
  problem.validate();
  if (!problem.F) throw InvalidInput("bundle: problem needs a smooth mapping");
  require_dim(x0, problem.n(), "bundle x0");
  require_finite(x0, "bundle x0");
  if (!problem.X.contains(x0)) throw InfeasiblePoint("bundle: x0 is not in X");
  if (!problem.f0.convex) throw ConfigurationError("bundle: f0 must be convex");

  BundleState s;
  s.center = x0;
  s.Fc = problem.F->value(x0);
  s.Jc = problem.F->jacobian(x0);
  s.center_value = problem.f0.value(x0) + problem.h->value(s.Fc);
  if (!std::isfinite(s.center_value)) throw OracleFailure("bundle: objective infinite at x0");
  s.center_cut = Linearization::of(*problem.h, s.Fc, CutTag::Center);
  if (config.structured) {
    auto view = as_composed(*problem.h);
    if (!view) throw ConfigurationError("bundle: structured model requires a composed h");
    s.structured = StructuredModel(view->h0, view->components);
    s.structured->update_after_serious(s.Fc, {}, config.policy);
  } else {
    s.flat = CuttingPlaneModel({s.center_cut});
  }
  s.t = config.t0;
  s.t_lower = config.t_lower0;
  return s;
}

BundleRecord bundle_step(BundleState &state, const CompositeProblem &problem,
                         const BundleConfig &config, const BundleObserver *observer) {
  BundleMasterSpec spec;
  spec.f0 = &problem.f0;
  spec.X = &problem.X;
  spec.x_hat = state.center;
  spec.t = state.t;
  spec.Fc = state.Fc;
  spec.J = state.Jc;
  spec.center_value = state.center_value;
  MasterSolution sol = state.structured
                           ? solve_bundle_structured(spec, *state.structured, config.master)
                           : solve_bundle_cp(spec, state.flat, config.master);

  BundleRecord rec;
  rec.k = state.k;
  rec.t = state.t;
  rec.t_lower = state.t_lower;
  rec.center = state.center;
  rec.center_objective = state.center_value;
  rec.model_size = state.model_size();
  rec.x_next = sol.x_next;
  rec.y_next = sol.y_next;
  rec.z_next = sol.z_next;
  rec.alpha = sol.alpha;
  rec.master_kkt = sol.kkt_residual;
  rec.master_scale = sol.scale;
  rec.step_norm = (sol.x_next - state.center).norm();

  const double f0n = problem.f0.value(sol.x_next);
  rec.v = state.center_value - (f0n + state.model_value(sol.z_next));
  const Vec Fn = problem.F->value(sol.x_next);
  rec.candidate_objective = f0n + problem.h->value(Fn);

  if (rec.v <= config.tol) {
    rec.kind = StepKind::Stop;
    rec.linearized_objective = f0n + problem.h->value(sol.z_next);
    rec.t_next = state.t;
    if (observer && *observer) (*observer)(state, rec);
    return rec;
  }
  rec.linearized_objective = f0n + problem.h->value(sol.z_next);
  if (rec.linearized_objective <= state.center_value - config.kappa * rec.v) {
    if (rec.candidate_objective <= state.center_value - 0.5 * config.kappa * rec.v)
      rec.kind = StepKind::Serious;
    else
      rec.kind = StepKind::Backtracking;
  } else {
    rec.kind = StepKind::Null;
  }

  double t_next = state.t;
  double t_lower_next = state.t_lower;
  switch (rec.kind) {
  case StepKind::Serious:
    // Grow t only after two serious steps in a row.
    if (state.serious_streak >= 1) t_next = std::min(config.t_max, 1.5 * state.t);
    break;
  case StepKind::Backtracking:
    t_next = state.t / config.tau;
    t_lower_next = std::min(state.t / config.tau, state.t_lower);
    break;
  case StepKind::Null:
    t_next = std::max(state.t_lower, 0.9 * state.t);
    break;
  case StepKind::Stop:
    break;
  }
  rec.t_next = t_next;
  if (observer && *observer) (*observer)(state, rec);

  if (rec.kind == StepKind::Serious) {
    state.center = sol.x_next;
    state.Fc = Fn;
    state.Jc = problem.F->jacobian(sol.x_next);
    state.center_value = rec.candidate_objective;
    state.center_cut = Linearization::of(*problem.h, state.Fc, CutTag::Center);
    if (state.structured)
      state.structured->update_after_serious(state.Fc, sol.mu, config.policy);
    else
      state.flat.update_after_serious(state.center_cut, sol.alpha, config.policy);
    ++state.serious_streak;
  } else {
    if (state.structured) {
      std::vector<Linearization> aggs;
      for (Eigen::Index i = 0; i < state.structured->ncomp(); ++i) {
        const auto ii = static_cast<size_t>(i);
        aggs.push_back(Linearization::combination(state.structured->inner()[ii].cuts(),
                                                  sol.inner_weights[ii], sol.z_next));
      }
      state.structured->update_after_null(state.Fc, sol.z_next, aggs, sol.mu, config.policy);
    } else {
      const Linearization trial = Linearization::of(*problem.h, sol.z_next, CutTag::Trial);
      const Linearization agg =
          Linearization::combination(state.flat.cuts(), sol.alpha, sol.z_next);
      state.flat.update_after_null(state.center_cut, trial, agg, sol.alpha, config.policy);
    }
    state.serious_streak = 0;
  }
  state.t = t_next;
  state.t_lower = t_lower_next;
  ++state.k;
  return rec;
}

std::optional<double> bundle_t_min(const CompositeProblem &problem, const BundleConfig &config) {
  if (!problem.F) return std::nullopt;
  try {
    const double lh = problem.h->lipschitz_bound();
    const double lf = mapping_lipschitz(*problem.F);
    if (!(lh > 0) || !(lf > 0)) return std::nullopt;
    return config.kappa / (2.0 * config.tau * lh * lf);
  } catch (const ConfigurationError &) {
    return std::nullopt;
  }
}

nlohmann::json BundleCertificate::to_json() const {
  return {{"kind", "surrogate"},
          {"eps", eps},
          {"primal", primal},
          {"prox", prox},
          {"jacobian", jacobian},
          {"t_min", t_min},
          {"t_min_from_constants", t_min_from_constants}};
}

BundleCertificate epsilon_certificate(const CompositeProblem &problem, const BundleRecord &last,
                                      const BundleConfig &config, double observed_t_lower) {
  BundleCertificate c;
  const auto tm = bundle_t_min(problem, config);
  c.t_min_from_constants = tm.has_value() && problem.constants_exact;
  c.t_min = c.t_min_from_constants ? *tm : observed_t_lower;
  c.primal = 0.0; // z* is F(x_{k+1}) itself
  c.prox = (last.x_next - last.center).norm() / c.t_min;
  const Mat Jn = problem.F->jacobian(last.x_next);
  const Mat Jc = problem.F->jacobian(last.center);
  c.jacobian = (Jn.transpose() * last.y_next - Jc.transpose() * last.y_next).norm();
  c.eps = std::sqrt(c.primal * c.primal + c.prox * c.prox + c.jacobian * c.jacobian);
  return c;
}

BundleResult bundle_run(const CompositeProblem &problem, const BundleConfig &config,
                        const Vec &x0, const BundleObserver &observer) {
  BundleState state = bundle_init(problem, config, x0);
  BundleResult res;
  const auto tm = bundle_t_min(problem, config);
  double t_floor = state.t_lower;
  const BundleObserver *obs = observer ? &observer : nullptr;
  for (int it = 0; it < config.max_iter; ++it) {
    BundleRecord rec = bundle_step(state, problem, config, obs);
    t_floor = std::min(t_floor, rec.t);
    if (tm && rec.t < *tm)
      res.warnings.push_back("t_k below kappa/(2 tau L_h L_F) at k=" + std::to_string(rec.k) +
                             (problem.constants_exact ? "" : " (estimated constants)"));
    switch (rec.kind) {
    case StepKind::Serious: ++res.serious; break;
    case StepKind::Null: ++res.null_steps; break;
    case StepKind::Backtracking: ++res.backtracking; break;
    case StepKind::Stop: res.converged = true; break;
    }
    res.final_v = rec.v;
    res.log.push_back(std::move(rec));
    if (res.converged) break;
  }
  res.iterations = static_cast<int>(res.log.size());
  const BundleRecord &last = res.log.back();
  // On a stop the returned point is x_{k+1}; otherwise the best point seen is the center.
  res.x = res.converged ? last.x_next : state.center;
  res.certificate = epsilon_certificate(problem, last, config, t_floor);
  std::vector<Vec> extra;
  if (res.converged) extra.push_back(last.z_next);
  res.measure = stationarity_measure(problem, res.x, extra);
  return res;
}

} // namespace compopt
