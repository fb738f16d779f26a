#include "compopt/stationarity.hpp"

#include "compopt/convex_program.hpp"
#include "compopt/json_util.hpp"

#include <algorithm>

namespace compopt {

namespace {

double combine(double a, double b, double c) { return std::sqrt(a * a + b * b + c * c); }

/// tangent_residual with a fallback bound for set kinds it does not cover.
std::pair<double, bool> stat_residual(const FeasibleSet &X, const Vec &x, const Vec &v) {
  try {
    return {X.tangent_residual(x, v), true};
  } catch (const Unsupported &) {
    return {v.norm(), false};
  }
}

bool is_affine(const ConvexPart &p) {
  return p.kind == ConvexPart::Kind::Polyhedral && p.rows.rows() == 1;
}

/// Candidate z values: F(x), its nearby kinks, and every subset of
/// coordinates moved onto a coordinate kink (separable variants).
std::vector<Vec> z_candidates(const OuterFunction &h, const Vec &Fx) {
  std::vector<Vec> out{Fx};
  auto push = [&](const Vec &z) {
    for (const auto &o : out)
      if (o == z) return;
    out.push_back(z);
  };
  for (const auto &s : h.kink_snaps(Fx)) push(s);
  const auto kinks = h.coordinate_kinks();
  const Eigen::Index m = Fx.size();
  if (kinks.empty() || m > 10) {
    if (!kinks.empty())
      for (Eigen::Index i = 0; i < m; ++i)
        for (double k : kinks) {
          Vec z = Fx;
          z(i) = k;
          push(z);
        }
    return out;
  }
  // Nearest kink per coordinate, then all subsets.
  Vec nearest(m);
  for (Eigen::Index i = 0; i < m; ++i) {
    double best = kinks[0];
    for (double k : kinks)
      if (std::abs(k - Fx(i)) < std::abs(best - Fx(i))) best = k;
    nearest(i) = best;
  }
  for (unsigned mask = 1; mask < (1u << m); ++mask) {
    Vec z = Fx;
    for (Eigen::Index i = 0; i < m; ++i)
      if (mask & (1u << i)) z(i) = nearest(i);
    push(z);
  }
  if (kinks.size() > 1)
    for (Eigen::Index i = 0; i < m; ++i)
      for (double k : kinks) {
        Vec z = Fx;
        z(i) = k;
        push(z);
      }
  return out;
}

} // namespace

nlohmann::json ResidualBreakdown::to_json() const {
  return {{"r_primal", r_primal}, {"r_dual", r_dual},         {"r_stat", r_stat},
          {"total", total},       {"dual_exact", dual_exact}, {"stat_exact", stat_exact}};
}

ResidualBreakdown residual(const CompositeProblem &problem, DMode mode,
                           const StationarityTriple &triple, const DcWitness *witness) {
  const Eigen::Index n = problem.n();
  const Eigen::Index m = problem.m();
  require_dim(triple.x, n, "residual: x");
  require_dim(triple.y, m, "residual: y");
  require_dim(triple.z, m, "residual: z");

  ResidualBreakdown r;
  Vec g = problem.f0.gradient(triple.x);
  if (mode == DMode::SmoothGradient) {
    if (!problem.F) throw InvalidInput("residual: smooth mode needs a smooth mapping");
    r.r_primal = (problem.F->value(triple.x) - triple.z).norm();
    g += problem.F->jacobian(triple.x).transpose() * triple.y;
  } else {
    if (!problem.has_dc()) throw InvalidInput("residual: DC mode needs DC components");
    Vec Fx(m);
    for (Eigen::Index i = 0; i < m; ++i) {
      const auto &c = problem.dc[static_cast<size_t>(i)];
      Fx(i) = c.value(triple.x);
      Vec w1 = witness ? Vec(witness->f1.col(i)) : c.f1.subgradient(triple.x);
      Vec w2 = witness ? Vec(witness->f2.col(i)) : c.f2.subgradient(triple.x);
      g += triple.y(i) * (w1 - w2);
      if (!(c.f1.kind == ConvexPart::Kind::Smooth && is_affine(c.f2))) r.stat_exact = false;
    }
    r.r_primal = (Fx - triple.z).norm();
  }
  const auto d = problem.h->subdiff_distance(triple.z, triple.y);
  r.r_dual = d.distance;
  r.dual_exact = d.exact;
  const auto [s, exact] = stat_residual(problem.X, triple.x, g);
  r.r_stat = s;
  r.stat_exact = r.stat_exact && exact;
  r.total = combine(r.r_primal, r.r_dual, r.r_stat);
  return r;
}

bool check_near_stationary(const CompositeProblem &problem, DMode mode,
                           const StationarityTriple &triple, double eps,
                           const DcWitness *witness) {
  if (!(eps >= 0)) throw InvalidInput("check_near_stationary: eps must be nonnegative");
  // Inexact components are upper bounds, so this comparison is one-sided sound.
  return residual(problem, mode, triple, witness).total <= eps;
}

Vec best_multiplier(const CompositeProblem &problem, const Vec &x, const Vec &z) {
  if (!problem.F) throw InvalidInput("best_multiplier: smooth mapping required");
  const auto P = problem.h->subdiff_polytope(z);
  if (!P) return problem.h->subgradient(z);
  const Eigen::Index n = problem.n();
  const Eigen::Index m = problem.m();
  const Mat J = problem.F->jacobian(x);
  const Vec c = problem.f0.gradient(x);
  Mat N = problem.X.is_convex() ? problem.X.normal_generators(x) : Mat(n, 0);
  const Eigen::Index k = P->nparam();
  const Eigen::Index p = N.cols();
  const Eigen::Index nv = m + k + p;

  // min |y - g0 - W theta|^2 + |c + J'y + N mu|^2, theta in the polytope, mu >= 0.
  Mat M = Mat::Zero(m + n, nv);
  M.topLeftCorner(m, m).setIdentity();
  M.block(0, m, m, k) = -P->W;
  M.block(m, 0, n, m) = J.transpose();
  M.block(m, m + k, n, p) = N;
  Vec rhs(m + n);
  rhs << -P->g0, c;
  ConvexProgram prog(nv);
  prog.P = 2.0 * M.transpose() * M;
  prog.q = 2.0 * M.transpose() * rhs;
  for (Eigen::Index r = 0; r < P->C.rows(); ++r) {
    Vec row = Vec::Zero(nv);
    row.segment(m, k) = P->C.row(r).transpose();
    prog.add_linear_inequality(row, P->d(r));
  }
  for (Eigen::Index r = 0; r < P->A.rows(); ++r) {
    Vec row = Vec::Zero(nv);
    row.segment(m, k) = P->A.row(r).transpose();
    prog.add_equality(row, P->b(r));
  }
  for (Eigen::Index j = 0; j < p; ++j) prog.add_linear_inequality(-Vec::Unit(nv, m + k + j), 0.0);
  auto sol = solve(prog);
  return sol.w.head(m);
}

StationarityMeasure stationarity_measure(const CompositeProblem &problem, const Vec &x,
                                         const std::vector<Vec> &extra_z) {
  if (!problem.F) throw InvalidInput("stationarity_measure: smooth mapping required");
  const Vec Fx = problem.F->value(x);
  auto cands = z_candidates(*problem.h, Fx);
  for (const auto &z : extra_z) {
    require_dim(z, problem.m(), "stationarity_measure: extra z");
    cands.push_back(z);
  }
  StationarityMeasure best;
  best.breakdown.total = kInf;
  bool polytopes = true;
  for (const auto &z : cands) {
    if (!std::isfinite(problem.h->value(z))) continue;
    if (!problem.h->subdiff_polytope(z)) polytopes = false;
    StationarityTriple tr{x, best_multiplier(problem, x, z), z};
    auto r = residual(problem, DMode::SmoothGradient, tr);
    if (r.total < best.breakdown.total) {
      best.triple = tr;
      best.breakdown = r;
    }
  }
  if (!std::isfinite(best.breakdown.total))
    throw OracleFailure("stationarity_measure: no candidate z in the domain of h");
  best.exact = polytopes && problem.m() == 1 && !problem.h->coordinate_kinks().empty() &&
               best.breakdown.exact();
  return best;
}

nlohmann::json MultiplierReport::to_json() const {
  return {{"norms", norms},
          {"threshold", threshold},
          {"divergent", divergent},
          {"first_flag", first_flag}};
}

MultiplierReport multiplier_diagnostics(const std::vector<MultiplierRecord> &seq,
                                        std::optional<double> threshold) {
  if (seq.empty()) throw InvalidInput("multiplier_diagnostics: empty sequence");
  MultiplierReport rep;
  rep.threshold = threshold ? *threshold : 1e6 * (1.0 + seq.front().y.norm());
  for (size_t i = 0; i < seq.size(); ++i) {
    const double nrm = seq[i].y.norm();
    rep.norms.push_back(nrm);
    if (!rep.divergent && nrm > rep.threshold && seq[i].residual_passed) {
      rep.divergent = true;
      rep.first_flag = static_cast<int>(i);
    }
  }
  return rep;
}

} // namespace compopt
