#include "compopt/master.hpp"

#include <algorithm>

namespace compopt {

namespace {

constexpr double kMultiplierZero = 1e-12;

void check_common(const SmoothFunction *f0, const FeasibleSet *X, const Vec &x, double t) {
  if (!f0 || !X) throw InvalidInput("master: f0 and X are required");
  require_dim(x, X->dim(), "master center");
  if (!(t > 0) || !std::isfinite(t)) throw InvalidInput("master: prox parameter must be positive");
  if (!X->is_convex()) throw Unsupported("master: feasible set must be convex");
}

/// Adds f0(base + w.head(n)) to the objective.
void add_f0(ConvexProgram &prog, const SmoothFunction &f0, const Vec &base) {
  const Eigen::Index n = base.size();
  if (f0.quadratic) {
    const auto &Q = f0.quadratic->Q;
    prog.P.topLeftCorner(n, n) += Q;
    prog.q.head(n) += Q * base + f0.quadratic->q;
    return;
  }
  if (!f0.hessian)
    throw ConfigurationError("master: f0 needs a quadratic form or a Hessian");
  const Eigen::Index nv = prog.nvar;
  SmoothFunction f = f0;
  prog.add_objective_term(SmoothTerm{
      [f, base, n](const Vec &w) { return f.value(base + w.head(n)); },
      [f, base, n, nv](const Vec &w) {
        Vec g = Vec::Zero(nv);
        g.head(n) = f.gradient(base + w.head(n));
        return g;
      },
      [f, base, n, nv](const Vec &w) {
        Mat H = Mat::Zero(nv, nv);
        H.topLeftCorner(n, n) = f.hessian(base + w.head(n));
        return H;
      }});
}

void add_prox(ConvexProgram &prog, Eigen::Index n, double coef) {
  prog.P.topLeftCorner(n, n).diagonal().array() += coef;
}

Vec padded(const Vec &head, Eigen::Index nv) {
  Vec r = Vec::Zero(nv);
  r.head(head.size()) = head;
  return r;
}

ConvexProgramSolution run(const ConvexProgram &prog, const MasterOptions &opts,
                          const Vec *w0) {
  ConvexProgramOptions o;
  o.tol = opts.tol;
  o.max_iter = std::min(opts.max_iter, 500);
  return solve(prog, o, w0);
}

double bundle_scale(const BundleMasterSpec &spec, double slope_norm) {
  const double jn = spec.J.size() ? spec.J.norm() : 0.0;
  return 1.0 + std::max({slope_norm * std::max(1.0, jn),
                         spec.x_hat.size() ? spec.x_hat.lpNorm<Eigen::Infinity>() : 0.0,
                         std::abs(spec.center_value)});
}

/// dist(y, dh(z)) allowing z to move to a nearby kink; solver output sits on
/// kinks only up to rounding.
double snapped_subdiff_distance(const OuterFunction &h, const Vec &z, const Vec &y,
                                double radius) {
  double best = h.subdiff_distance(z, y).distance;
  for (const auto &s : h.kink_snaps(z))
    if ((s - z).norm() <= radius) best = std::min(best, h.subdiff_distance(s, y).distance);
  return best;
}

void finalize(MasterSolution &sol, const MasterCheck &chk, double tol_master) {
  sol.kkt_residual = chk.kkt;
  sol.scale = chk.scale;
  if (!(chk.kkt <= tol_master * chk.scale))
    throw MasterFailure("master KKT residual " + std::to_string(chk.kkt) +
                        " exceeds tolerance " + std::to_string(tol_master * chk.scale));
}

} // namespace

MasterSolution solve_bundle_cp(const BundleMasterSpec &spec, const CuttingPlaneModel &model,
                               const MasterOptions &opts) {
  check_common(spec.f0, spec.X, spec.x_hat, spec.t);
  if (model.empty()) throw UninitializedModel("bundle master with an empty model");
  const Eigen::Index n = spec.x_hat.size();
  const Eigen::Index m = spec.Fc.size();
  if (spec.J.rows() != m || spec.J.cols() != n) throw InvalidInput("bundle master: Jacobian shape");
  require_dim(spec.Fc, model.dim(), "bundle master: model dimension");

  const Eigen::Index nv = n + 1;
  ConvexProgram prog(nv);
  add_f0(prog, *spec.f0, spec.x_hat);
  add_prox(prog, n, 1.0 / spec.t);
  prog.q(n) = 1.0;
  const auto &cuts = model.cuts();
  for (const auto &c : cuts) {
    Vec row(nv);
    row.head(n) = spec.J.transpose() * c.slope;
    row(n) = -1.0;
    prog.add_linear_inequality(row, -(c.offset() + c.slope.dot(spec.Fc)));
  }
  spec.X->append_step_constraints(prog, spec.x_hat);

  Vec w0 = Vec::Zero(nv);
  w0(n) = model.evaluate(spec.Fc);
  auto cp = run(prog, opts, &w0);

  MasterSolution sol;
  const Vec d = cp.w.head(n);
  sol.x_next = spec.x_hat + d;
  sol.z_next = spec.Fc + spec.J * d;
  sol.alpha = cp.lambda.head(static_cast<Eigen::Index>(cuts.size()));
  sol.y_next = model.combine(sol.alpha);
  sol.model_value = model.evaluate(sol.z_next);
  sol.iterations = cp.iterations;
  sol.polished = cp.polished;
  finalize(sol, verify_bundle_cp(spec, model, sol), opts.tol_master);
  return sol;
}

MasterCheck verify_bundle_cp(const BundleMasterSpec &spec, const CuttingPlaneModel &model,
                             const MasterSolution &sol) {
  MasterCheck chk;
  chk.scale = bundle_scale(spec, model.max_slope_norm());
  const Vec d = sol.x_next - spec.x_hat;
  Vec g = spec.f0->gradient(sol.x_next) + spec.J.transpose() * sol.y_next + d / spec.t;
  chk.stationarity = spec.X->tangent_residual(sol.x_next, g);
  chk.multiplier_sum_error = std::abs(sol.alpha.sum() - 1.0);
  chk.min_multiplier = sol.alpha.size() ? sol.alpha.minCoeff() : 0.0;
  const double mv = model.evaluate(sol.z_next);
  for (size_t j = 0; j < model.size(); ++j)
    chk.complementarity = std::max(chk.complementarity,
                                   std::abs(sol.alpha(static_cast<Eigen::Index>(j))) *
                                       (mv - model.cuts()[j].eval(sol.z_next)));
  chk.kkt = std::max({chk.stationarity, chk.multiplier_sum_error,
                      std::max(0.0, -chk.min_multiplier), chk.complementarity});
  return chk;
}

MasterSolution solve_bundle_structured(const BundleMasterSpec &spec,
                                       const StructuredModel &model,
                                       const MasterOptions &opts) {
  check_common(spec.f0, spec.X, spec.x_hat, spec.t);
  if (model.empty()) throw UninitializedModel("structured master with an empty model");
  const Eigen::Index n = spec.x_hat.size();
  const Eigen::Index dcomp = model.ncomp();
  auto e0 = model.h0()->epigraph();
  if (!e0) throw Unsupported("structured master: h0 needs a polyhedral epigraph");
  const Eigen::Index na = e0->naux();
  const Eigen::Index nv = n + dcomp + na;

  ConvexProgram prog(nv);
  add_f0(prog, *spec.f0, spec.x_hat);
  add_prox(prog, n, 1.0 / spec.t);
  prog.q.segment(n, dcomp) = e0->a;
  prog.q.tail(na) = e0->c;
  std::vector<std::pair<Eigen::Index, Eigen::Index>> rows_of; // (first row, count)
  for (Eigen::Index i = 0; i < dcomp; ++i) {
    const auto &cuts = model.inner()[static_cast<size_t>(i)].cuts();
    rows_of.emplace_back(prog.num_linear(), static_cast<Eigen::Index>(cuts.size()));
    for (const auto &c : cuts) {
      Vec row = Vec::Zero(nv);
      row.head(n) = spec.J.transpose() * c.slope;
      row(n + i) = -1.0;
      prog.add_linear_inequality(row, -(c.offset() + c.slope.dot(spec.Fc)));
    }
  }
  for (Eigen::Index r = 0; r < e0->B.rows(); ++r) {
    Vec row = Vec::Zero(nv);
    row.segment(n, dcomp) = e0->B.row(r).transpose();
    row.tail(na) = -e0->E.row(r).transpose();
    prog.add_linear_inequality(row, e0->g(r));
  }
  spec.X->append_step_constraints(prog, spec.x_hat);

  Vec w0 = Vec::Zero(nv);
  w0.segment(n, dcomp) = model.inner_values(spec.Fc);
  auto cp = run(prog, opts, &w0);

  MasterSolution sol;
  const Vec d = cp.w.head(n);
  sol.x_next = spec.x_hat + d;
  sol.z_next = spec.Fc + spec.J * d;
  sol.lambda_tilde = Vec::Zero(dcomp);
  for (Eigen::Index i = 0; i < dcomp; ++i) {
    const auto &inner = model.inner()[static_cast<size_t>(i)];
    Vec mu = cp.lambda.segment(rows_of[static_cast<size_t>(i)].first,
                               rows_of[static_cast<size_t>(i)].second);
    const double lt = mu.sum();
    Vec w;
    if (lt > kMultiplierZero) {
      sol.lambda_tilde(i) = lt;
      w = mu / lt;
    } else {
      // Zero multiplier: any inner subgradient works; take the model's own.
      w = inner.active_weights(sol.z_next);
    }
    sol.mu.push_back(mu);
    sol.inner_weights.push_back(w);
    sol.inner_slopes.push_back(inner.combine(w));
  }
  sol.y_next = StructuredModel::assemble(sol.lambda_tilde, sol.inner_slopes);
  sol.model_value = model.evaluate(sol.z_next);
  sol.iterations = cp.iterations;
  sol.polished = cp.polished;
  finalize(sol, verify_bundle_structured(spec, model, sol), opts.tol_master);
  return sol;
}

MasterCheck verify_bundle_structured(const BundleMasterSpec &spec,
                                     const StructuredModel &model, const MasterSolution &sol) {
  MasterCheck chk;
  double slope = 0.0;
  for (const auto &m : model.inner()) slope = std::max(slope, m.max_slope_norm());
  double lip0 = 1.0;
  try {
    lip0 = std::max(1.0, model.h0()->lipschitz_bound());
  } catch (const ConfigurationError &) {
  }
  chk.scale = bundle_scale(spec, slope * lip0);
  const Vec d = sol.x_next - spec.x_hat;
  Vec g = spec.f0->gradient(sol.x_next) + spec.J.transpose() * sol.y_next + d / spec.t;
  chk.stationarity = spec.X->tangent_residual(sol.x_next, g);
  const Vec r = model.inner_values(sol.z_next);
  chk.dual_feasibility = snapped_subdiff_distance(*model.h0(), r, sol.lambda_tilde,
                                                  1e-9 * chk.scale);
  chk.min_multiplier = sol.lambda_tilde.size() ? sol.lambda_tilde.minCoeff() : 0.0;
  for (Eigen::Index i = 0; i < model.ncomp(); ++i) {
    const auto &inner = model.inner()[static_cast<size_t>(i)];
    const Vec &mu = sol.mu[static_cast<size_t>(i)];
    for (size_t j = 0; j < inner.size(); ++j)
      chk.complementarity =
          std::max(chk.complementarity,
                   std::abs(mu(static_cast<Eigen::Index>(j))) *
                       (r(i) - inner.cuts()[j].eval(sol.z_next)));
    const Vec &w = sol.inner_weights[static_cast<size_t>(i)];
    chk.multiplier_sum_error = std::max(chk.multiplier_sum_error, std::abs(w.sum() - 1.0));
  }
  chk.kkt = std::max({chk.stationarity, chk.dual_feasibility, chk.complementarity,
                      chk.multiplier_sum_error, std::max(0.0, -chk.min_multiplier)});
  return chk;
}

MasterSolution solve_dc(const DcMasterSpec &spec, const MasterOptions &opts) {
  check_common(spec.f0, spec.X, spec.x_k, spec.t);
  if (!spec.h || !spec.components) throw InvalidInput("dc master: h and components required");
  const auto &comps = *spec.components;
  const Eigen::Index n = spec.x_k.size();
  const Eigen::Index m = static_cast<Eigen::Index>(comps.size());
  if (spec.h->dim() != m) throw InvalidInput("dc master: h dimension mismatch");
  if (!spec.h->monotone()) throw ConfigurationError("dc master: h must be nondecreasing");
  require_dim(spec.f2_values, m, "dc master: f2 values");
  if (spec.f2_slopes.rows() != n || spec.f2_slopes.cols() != m)
    throw InvalidInput("dc master: f2 slope shape");

  // Components whose outer weight is linear and whose f1 is smooth go
  // straight into the objective; the rest get an epigraph variable z_i.
  auto sep = as_separable(*spec.h);
  std::vector<bool> substituted(static_cast<size_t>(m), false);
  std::vector<Eigen::Index> zidx;
  for (Eigen::Index i = 0; i < m; ++i) {
    const auto &f1 = comps[static_cast<size_t>(i)].f1;
    if (f1.kind == ConvexPart::Kind::Oracle)
      throw ConfigurationError("dc master: f1 must be smooth or polyhedral");
    if (sep && sep->b(i) == 0 && f1.kind == ConvexPart::Kind::Smooth)
      substituted[static_cast<size_t>(i)] = true;
    else
      zidx.push_back(i);
  }
  const auto nz = static_cast<Eigen::Index>(zidx.size());
  std::optional<PolyEpigraph> epi;
  if (nz > 0) {
    if (sep) {
      Vec a(nz), b(nz);
      for (Eigen::Index k = 0; k < nz; ++k) {
        a(k) = sep->a(zidx[k]);
        b(k) = sep->b(zidx[k]);
      }
      epi = make_separable_pwl(a, b)->epigraph();
    } else {
      epi = spec.h->epigraph();
    }
    if (!epi) throw Unsupported("dc master: h needs a polyhedral epigraph");
  }
  const Eigen::Index na = epi ? epi->naux() : 0;
  const Eigen::Index nv = n + nz + na;
  ConvexProgram prog(nv);
  add_f0(prog, *spec.f0, spec.x_k);
  add_prox(prog, n, 1.0 / spec.t);

  auto affine_part = [&](Eigen::Index i) {
    // -f2_i(x_k) - <s2_i, d>
    return std::pair<double, Vec>(-spec.f2_values(i), -spec.f2_slopes.col(i));
  };

  for (Eigen::Index i = 0; i < m; ++i) {
    if (!substituted[static_cast<size_t>(i)]) continue;
    const double a = sep->a(i);
    const auto &f1 = comps[static_cast<size_t>(i)].f1.smooth;
    auto [c0, lin] = affine_part(i);
    (void)c0;
    prog.q.head(n) += a * lin;
    if (f1.quadratic) {
      prog.P.topLeftCorner(n, n) += a * f1.quadratic->Q;
      prog.q.head(n) += a * (f1.quadratic->Q * spec.x_k + f1.quadratic->q);
    } else {
      if (!f1.hessian) throw ConfigurationError("dc master: smooth f1 needs a Hessian");
      const Vec xk = spec.x_k;
      prog.add_objective_term(SmoothTerm{
          [f1, xk, n, a](const Vec &w) { return a * f1.value(xk + w.head(n)); },
          [f1, xk, n, a, nv](const Vec &w) { return padded(a * f1.gradient(xk + w.head(n)), nv); },
          [f1, xk, n, a, nv](const Vec &w) {
            Mat H = Mat::Zero(nv, nv);
            H.topLeftCorner(n, n) = a * f1.hessian(xk + w.head(n));
            return H;
          }});
    }
  }

  // Link rows f1_i(x) - f2_i(x_k) - <s2_i, d> <= z_i. Record which
  // constraint indices belong to which component (linear rows first, then
  // nonlinear ones, matching the multiplier layout).
  std::vector<std::vector<Eigen::Index>> lin_rows(static_cast<size_t>(nz));
  std::vector<Eigen::Index> nl_row(static_cast<size_t>(nz), -1);
  for (Eigen::Index k = 0; k < nz; ++k) {
    const Eigen::Index i = zidx[k];
    const auto &f1 = comps[static_cast<size_t>(i)].f1;
    auto [c0, lin] = affine_part(i);
    if (f1.kind == ConvexPart::Kind::Polyhedral) {
      for (Eigen::Index l = 0; l < f1.rows.rows(); ++l) {
        Vec row = Vec::Zero(nv);
        row.head(n) = f1.rows.row(l).transpose() + lin;
        row(n + k) = -1.0;
        lin_rows[static_cast<size_t>(k)].push_back(prog.num_linear());
        prog.add_linear_inequality(row, -(f1.rows.row(l).dot(spec.x_k) + f1.offsets(l) + c0));
      }
    } else if (f1.smooth.quadratic) {
      const auto &Q = f1.smooth.quadratic->Q;
      Quadratic g;
      g.Q = Mat::Zero(nv, nv);
      g.Q.topLeftCorner(n, n) = Q;
      g.q = Vec::Zero(nv);
      g.q.head(n) = Q * spec.x_k + f1.smooth.quadratic->q + lin;
      g.q(n + k) = -1.0;
      g.c = f1.smooth.value(spec.x_k) + c0;
      nl_row[static_cast<size_t>(k)] = prog.num_nonlinear();
      prog.add_quadratic_constraint(g);
    } else {
      if (!f1.smooth.hessian) throw ConfigurationError("dc master: smooth f1 needs a Hessian");
      const SmoothFunction f = f1.smooth;
      const Vec xk = spec.x_k;
      const Vec lv = lin;
      const double cc = c0;
      nl_row[static_cast<size_t>(k)] = prog.num_nonlinear();
      prog.constraints.push_back(SmoothTerm{
          [f, xk, n, k, lv, cc](const Vec &w) {
            return f.value(xk + w.head(n)) + lv.dot(w.head(n)) + cc - w(n + k);
          },
          [f, xk, n, k, lv, nv](const Vec &w) {
            Vec g = Vec::Zero(nv);
            g.head(n) = f.gradient(xk + w.head(n)) + lv;
            g(n + k) = -1.0;
            return g;
          },
          [f, xk, n, nv](const Vec &w) {
            Mat H = Mat::Zero(nv, nv);
            H.topLeftCorner(n, n) = f.hessian(xk + w.head(n));
            return H;
          }});
    }
  }
  if (epi) {
    prog.q.segment(n, nz) += epi->a;
    prog.q.tail(na) += epi->c;
    for (Eigen::Index r = 0; r < epi->B.rows(); ++r) {
      Vec row = Vec::Zero(nv);
      row.segment(n, nz) = epi->B.row(r).transpose();
      row.tail(na) = -epi->E.row(r).transpose();
      prog.add_linear_inequality(row, epi->g(r));
    }
  }
  spec.X->append_step_constraints(prog, spec.x_k);

  Vec w0 = Vec::Zero(nv);
  for (Eigen::Index k = 0; k < nz; ++k)
    w0(n + k) = comps[static_cast<size_t>(zidx[k])].f1.value(spec.x_k) - spec.f2_values(zidx[k]);
  auto cp = run(prog, opts, &w0);

  MasterSolution sol;
  const Vec d = cp.w.head(n);
  sol.x_next = spec.x_k + d;
  sol.z_next = Vec(m);
  sol.y_next = Vec::Zero(m);
  sol.f1_witness = Mat(n, m);
  sol.mu.assign(static_cast<size_t>(m), Vec());
  for (Eigen::Index i = 0; i < m; ++i) {
    const auto &c = comps[static_cast<size_t>(i)];
    sol.z_next(i) = c.f1.value(sol.x_next) - spec.f2_values(i) - spec.f2_slopes.col(i).dot(d);
    sol.f1_witness.col(i) = c.f1.subgradient(sol.x_next);
    if (substituted[static_cast<size_t>(i)]) sol.y_next(i) = sep->a(i);
  }
  const Eigen::Index nlin = prog.num_linear();
  for (Eigen::Index k = 0; k < nz; ++k) {
    const Eigen::Index i = zidx[k];
    const auto &f1 = comps[static_cast<size_t>(i)].f1;
    if (f1.kind == ConvexPart::Kind::Polyhedral) {
      const auto &rows = lin_rows[static_cast<size_t>(k)];
      double s = 0.0;
      Vec wit = Vec::Zero(n);
      for (size_t l = 0; l < rows.size(); ++l) {
        const double mu = std::max(0.0, cp.lambda(rows[l]));
        s += mu;
        wit += mu * f1.rows.row(static_cast<Eigen::Index>(l)).transpose();
      }
      sol.y_next(i) = s;
      Vec muv(static_cast<Eigen::Index>(rows.size()));
      for (size_t l = 0; l < rows.size(); ++l)
        muv(static_cast<Eigen::Index>(l)) = std::max(0.0, cp.lambda(rows[l]));
      sol.mu[static_cast<size_t>(i)] = muv;
      if (s > kMultiplierZero) sol.f1_witness.col(i) = wit / s;
    } else {
      sol.y_next(i) = std::max(0.0, cp.lambda(nlin + nl_row[static_cast<size_t>(k)]));
    }
  }
  sol.model_value = spec.h->value(sol.z_next);
  sol.iterations = cp.iterations;
  sol.polished = cp.polished;
  finalize(sol, verify_dc(spec, sol), opts.tol_master);
  return sol;
}

MasterCheck verify_dc(const DcMasterSpec &spec, const MasterSolution &sol) {
  MasterCheck chk;
  const auto &comps = *spec.components;
  const Vec d = sol.x_next - spec.x_k;
  double slope = spec.f2_slopes.size() ? spec.f2_slopes.lpNorm<Eigen::Infinity>() : 0.0;
  chk.scale = 1.0 + std::max({slope, spec.x_k.lpNorm<Eigen::Infinity>(),
                              std::abs(spec.center_value)});
  Vec g = spec.f0->gradient(sol.x_next) + d / spec.t;
  for (size_t i = 0; i < comps.size(); ++i) {
    const auto ii = static_cast<Eigen::Index>(i);
    g += sol.y_next(ii) * (sol.f1_witness.col(ii) - spec.f2_slopes.col(ii));
    const auto &f1 = comps[i].f1;
    if (f1.kind == ConvexPart::Kind::Polyhedral && i < sol.mu.size() && sol.mu[i].size()) {
      // The witness mixes only pieces that are maximal at x_next.
      const double top = f1.value(sol.x_next);
      const Vec vals = f1.rows * sol.x_next + f1.offsets;
      for (Eigen::Index l = 0; l < vals.size(); ++l)
        chk.complementarity =
            std::max(chk.complementarity, std::abs(sol.mu[i](l)) * (top - vals(l)));
    }
  }
  chk.stationarity = spec.X->tangent_residual(sol.x_next, g);
  chk.dual_feasibility =
      snapped_subdiff_distance(*spec.h, sol.z_next, sol.y_next, 1e-9 * chk.scale);
  chk.min_multiplier = sol.y_next.size() ? sol.y_next.minCoeff() : 0.0;
  chk.kkt = std::max({chk.stationarity, chk.dual_feasibility, chk.complementarity});
  return chk;
}

MasterSolution solve_distance(const DistanceMasterSpec &spec, const MasterOptions &opts) {
  check_common(spec.f0, spec.X, spec.p_hat, 1.0);
  if (!(spec.mu > 0)) throw InvalidInput("distance master: mu must be positive");
  const Eigen::Index n = spec.p_hat.size();
  ConvexProgram prog(n);
  add_f0(prog, *spec.f0, Vec::Zero(n));
  add_prox(prog, n, spec.mu);
  prog.q -= spec.mu * spec.p_hat;
  spec.X->append_step_constraints(prog, Vec::Zero(n));
  Vec w0 = spec.X->project(spec.p_hat);
  auto cp = run(prog, opts, &w0);
  MasterSolution sol;
  sol.x_next = cp.w;
  sol.iterations = cp.iterations;
  sol.polished = cp.polished;
  finalize(sol, verify_distance(spec, sol), opts.tol_master);
  return sol;
}

MasterCheck verify_distance(const DistanceMasterSpec &spec, const MasterSolution &sol) {
  MasterCheck chk;
  chk.scale = 1.0 + std::max(spec.mu * spec.p_hat.lpNorm<Eigen::Infinity>(),
                             spec.p_hat.lpNorm<Eigen::Infinity>());
  Vec g = spec.f0->gradient(sol.x_next) + spec.mu * (sol.x_next - spec.p_hat);
  chk.stationarity = spec.X->tangent_residual(sol.x_next, g);
  chk.kkt = chk.stationarity;
  return chk;
}

CuttingPlaneModel flatten_structured(const StructuredModel &model) {
  if (model.ncomp() != 1) throw Unsupported("flatten_structured: only scalar h0");
  const auto &h0 = *model.h0();
  const double c0 = h0.value(Vec::Zero(1));
  const double sm = h0.subgradient(Vec::Constant(1, -1.0))(0);
  const double sp = h0.subgradient(Vec::Constant(1, 1.0))(0);
  for (double g : {-2.0, -0.5, 0.5, 2.0})
    if (std::abs(h0.value(Vec::Constant(1, g)) - (c0 + std::max(sm * g, sp * g))) >
        1e-12 * (1.0 + std::abs(g)))
      throw Unsupported("flatten_structured: h0 must have a single kink at the origin");
  std::vector<Linearization> flat;
  for (double s : {sm, sp}) {
    if (s < 0) throw Unsupported("flatten_structured: h0 must be nondecreasing");
    for (const auto &c : model.inner()[0].cuts()) {
      Linearization l;
      l.anchor = c.anchor;
      l.value = c0 + s * c.value;
      l.slope = s * c.slope;
      l.tag = c.tag;
      bool dup = false;
      for (const auto &o : flat) dup = dup || o.same_plane(l);
      if (!dup) flat.push_back(l);
    }
  }
  return CuttingPlaneModel(std::move(flat));
}

nlohmann::json master_to_json(const BundleMasterSpec &spec, const CuttingPlaneModel &model) {
  auto v = [](const Vec &x) { return std::vector<double>(x.data(), x.data() + x.size()); };
  nlohmann::json J = nlohmann::json::array();
  for (Eigen::Index r = 0; r < spec.J.rows(); ++r) J.push_back(v(spec.J.row(r).transpose()));
  return {{"schema", "bundle-master/1"},
          {"x_hat", v(spec.x_hat)},
          {"t", spec.t},
          {"F_center", v(spec.Fc)},
          {"jacobian", J},
          {"feasible_set", spec.X ? spec.X->kind_name() : ""},
          {"model", model.to_json()}};
}

} // namespace compopt
