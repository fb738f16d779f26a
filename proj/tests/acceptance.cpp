// Acceptance suite: one PASS/FAIL line per criterion. Exit status is the
// number of failed criteria.

#include "compopt/bundle.hpp"
#include "compopt/cli.hpp"
#include "compopt/dc.hpp"
#include "compopt/outer_loop.hpp"
#include "compopt/problems.hpp"

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <unistd.h>

using namespace compopt;
namespace fs = std::filesystem;

namespace {

// Pinned tolerances.
constexpr double kModelSlack = 1e-10;
constexpr double kInterpolation = 1e-12;
constexpr double kKeyRelation = 1e-12;
constexpr double kDescent = 1e-12;
constexpr double kTFloorQuartic = 0.1 / 16.0;
constexpr double kQuarticDistance = 1e-4;
constexpr double kQuarticResidual = 1e-6;
constexpr double kMasterKkt = 1e-9;
constexpr double kMultiplierSum = 1e-10;
constexpr double kMultiplierMin = -1e-12;
constexpr double kStructuredAgreement = 1e-8;
constexpr double kDcSlack = 1e-12;
constexpr double kDcIdentity = 1e-10;
constexpr double kDcFixedPoint = 1e-6;
constexpr double kAlgorithmsAgree = 1e-8;
constexpr double kActualResidualFloor = 0.5;
constexpr double kFdRelative = 1e-4;
constexpr double kGridAgreement = 1e-6;

struct Outcome {
  bool pass = true;
  std::string detail;
  void fail(const std::string &why) {
    if (pass) detail = why;
    pass = false;
  }
};

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string fmt(const char *f, double a) {
  char buf[128];
  std::snprintf(buf, sizeof buf, f, a);
  return buf;
}

Vec random_vec(std::mt19937_64 &rng, Eigen::Index n, double scale) {
  std::uniform_real_distribution<double> U(-scale, scale);
  Vec x(n);
  for (Eigen::Index i = 0; i < n; ++i) x(i) = U(rng);
  return x;
}

/// Every bundle configuration the suite exercises: each bundle instance with
/// the flat model, plus the structured model where it applies.
struct BundleCase {
  std::string label;
  Instance inst;
  BundleConfig config;
};

std::vector<BundleCase> bundle_cases() {
  std::vector<BundleCase> cases;
  for (const auto &name : instance_names()) {
    Instance inst = build_instance(name);
    if (!inst.flags.bundle) continue;
    cases.push_back({name, inst, BundleConfig{}});
    if (inst.flags.structured) {
      BundleConfig c;
      c.structured = true;
      cases.push_back({name + "(structured)", inst, c});
    }
  }
  return cases;
}

Outcome criterion1() {
  Outcome o;
  const auto t0 = std::chrono::steady_clock::now();
  std::mt19937_64 rng(1);
  std::normal_distribution<double> N(0.0, 1.0);
  long checked = 0;
  double worst_slack = kInf, worst_interp = 0.0;
  for (auto &c : bundle_cases()) {
    const auto &P = c.inst.problem;
    BundleObserver obs = [&](const BundleState &st, const BundleRecord &rec) {
      const double scale = 1.0 + st.Fc.lpNorm<Eigen::Infinity>();
      for (int s = 0; s < 1000; ++s) {
        Vec z = st.Fc;
        for (Eigen::Index j = 0; j < z.size(); ++j) z(j) += scale * N(rng);
        const double slack = P.h->value(z) - st.model_value(z);
        worst_slack = std::min(worst_slack, slack);
        if (slack < -kModelSlack)
          o.fail(c.label + " k=" + std::to_string(rec.k) + ": model above h by " + fmt("%.3g", -slack));
      }
      const double gap = std::abs(st.model_value(st.Fc) - P.h->value(st.Fc));
      worst_interp = std::max(worst_interp, gap);
      if (gap > kInterpolation)
        o.fail(c.label + " k=" + std::to_string(rec.k) + ": interpolation gap " + fmt("%.3g", gap));
      ++checked;
    };
    bundle_run(P, c.config, c.inst.x0, obs);
  }
  const double secs = seconds_since(t0);
  if (secs >= 10.0) o.fail("runtime " + fmt("%.2f s", secs));
  if (o.pass)
    o.detail = std::to_string(checked) + " iterations, min slack " + fmt("%.3g", worst_slack) +
               ", max interpolation gap " + fmt("%.3g", worst_interp) + ", " + fmt("%.2f s", secs);
  return o;
}

Outcome criterion2() {
  Outcome o;
  long checked = 0;
  double worst = -kInf;
  for (auto &c : bundle_cases()) {
    BundleObserver obs = [&](const BundleState &, const BundleRecord &rec) {
      const double excess = (rec.x_next - rec.center).squaredNorm() / (2.0 * rec.t) - rec.v;
      worst = std::max(worst, excess);
      if (excess > kKeyRelation) o.fail(c.label + " k=" + std::to_string(rec.k) + ": excess " + fmt("%.3g", excess));
      ++checked;
    };
    bundle_run(c.inst.problem, c.config, c.inst.x0, obs);
  }
  if (o.pass) o.detail = std::to_string(checked) + " iterations, max excess " + fmt("%.3g", worst);
  return o;
}

Outcome criterion3() {
  Outcome o;
  const auto inst = build_instance("quartic");
  BundleConfig c;
  c.kappa = 0.1;
  c.tau = 2.0;
  const auto floor = bundle_t_min(inst.problem, c);
  if (!floor || *floor != kTFloorQuartic) {
    o.fail("t floor from constants is " + (floor ? fmt("%.17g", *floor) : std::string("missing")));
    return o;
  }
  double tmin = kInf, tmax = 0.0;
  BundleObserver obs = [&](const BundleState &, const BundleRecord &rec) {
    tmin = std::min(tmin, rec.t);
    tmax = std::max(tmax, rec.t);
    if (!(rec.t >= kTFloorQuartic)) o.fail("k=" + std::to_string(rec.k) + ": t = " + fmt("%.17g", rec.t));
    if (!(rec.t <= c.t_max)) o.fail("k=" + std::to_string(rec.k) + ": t above t_max");
  };
  const auto r = bundle_run(inst.problem, c, inst.x0, obs);
  if (!r.warnings.empty()) o.fail("solver reported a t floor warning");
  if (o.pass) o.detail = "t in [" + fmt("%.6g", tmin) + ", " + fmt("%.6g", tmax) + "], floor 6.25e-3";
  return o;
}

Outcome criterion4() {
  Outcome o;
  int serious = 0;
  double worst = kInf;
  for (auto &c : bundle_cases()) {
    double last_center = kInf;
    BundleObserver obs = [&](const BundleState &, const BundleRecord &rec) {
      if (rec.center_objective > last_center + kDescent) o.fail(c.label + ": center objective increased");
      last_center = rec.center_objective;
      if (rec.kind != StepKind::Serious) return;
      ++serious;
      const double margin = rec.center_objective - rec.candidate_objective - 0.5 * c.config.kappa * rec.v;
      worst = std::min(worst, margin);
      if (margin < -kDescent) o.fail(c.label + " k=" + std::to_string(rec.k) + ": descent short by " + fmt("%.3g", -margin));
    };
    bundle_run(c.inst.problem, c.config, c.inst.x0, obs);
  }
  if (o.pass) o.detail = std::to_string(serious) + " serious steps, min margin " + fmt("%.3g", worst);
  return o;
}

Outcome criterion5() {
  Outcome o;
  const auto inst = build_instance("quartic");
  GridSpec spec{inst.grid_box->first, inst.grid_box->second, 1e-3, 1e-2};
  const auto grid = grid_oracle(inst.problem, spec, DMode::SmoothGradient);
  BundleConfig c;
  c.tol = 1e-8;
  const auto t0 = std::chrono::steady_clock::now();
  const auto r = bundle_run(inst.problem, c, Vec::Constant(1, 2.0));
  const double secs = seconds_since(t0);
  double dist = kInf;
  for (const auto &p : grid.representatives) dist = std::min(dist, (r.x - p).norm());
  if (!r.converged) o.fail("did not terminate");
  if (r.iterations > 500) o.fail(std::to_string(r.iterations) + " iterations");
  if (grid.representatives.size() != 3) o.fail("grid oracle found " + std::to_string(grid.representatives.size()) + " stationary components");
  if (dist > kQuarticDistance) o.fail("final point " + fmt("%.6g", r.x(0)) + " is " + fmt("%.3g", dist) + " from the grid set");
  if (r.measure.breakdown.total > kQuarticResidual) o.fail("residual " + fmt("%.3g", r.measure.breakdown.total));
  if (secs >= 1.0) o.fail("runtime " + fmt("%.2f s", secs));
  if (o.pass)
    o.detail = std::to_string(r.iterations) + " iterations, x = " + fmt("%.10g", r.x(0)) + ", residual " +
               fmt("%.3g", r.measure.breakdown.total) + ", " + fmt("%.3f s", secs);
  return o;
}

Outcome criterion6() {
  Outcome o;
  long solves = 0;
  double worst_rel = 0.0, worst_sum = 0.0, worst_cross = 0.0;
  auto kkt = [&](const std::string &label, int k, double res, double scale) {
    ++solves;
    worst_rel = std::max(worst_rel, res / scale);
    if (!(res <= kMasterKkt * scale)) o.fail(label + " k=" + std::to_string(k) + ": KKT " + fmt("%.3g", res));
  };
  for (auto &c : bundle_cases()) {
    const auto &P = c.inst.problem;
    BundleObserver obs = [&](const BundleState &st, const BundleRecord &rec) {
      kkt(c.label, rec.k, rec.master_kkt, rec.master_scale);
      BundleMasterSpec spec;
      spec.f0 = &P.f0;
      spec.X = &P.X;
      spec.x_hat = st.center;
      spec.t = rec.t;
      spec.Fc = st.Fc;
      spec.J = st.Jc;
      spec.center_value = st.center_value;
      if (!c.config.structured) {
        MasterSolution sol;
        sol.x_next = rec.x_next;
        sol.z_next = rec.z_next;
        sol.y_next = rec.y_next;
        sol.alpha = rec.alpha;
        const auto chk = verify_bundle_cp(spec, st.flat, sol);
        if (!(chk.kkt <= kMasterKkt * chk.scale)) o.fail(c.label + ": re-verified KKT " + fmt("%.3g", chk.kkt));
        const double sum_err = std::abs(rec.alpha.sum() - 1.0);
        worst_sum = std::max(worst_sum, sum_err);
        if (sum_err > kMultiplierSum) o.fail(c.label + ": sum of alpha off by " + fmt("%.3g", sum_err));
        if (rec.alpha.minCoeff() < kMultiplierMin) o.fail(c.label + ": negative alpha");
      } else {
        const auto sol = solve_bundle_cp(spec, flatten_structured(*st.structured));
        const double gap = (sol.x_next - rec.x_next).norm();
        worst_cross = std::max(worst_cross, gap);
        if (gap > kStructuredAgreement) o.fail(c.label + ": structured vs flat gap " + fmt("%.3g", gap));
      }
    };
    bundle_run(P, c.config, c.inst.x0, obs);
  }
  for (const auto &name : instance_names()) {
    const auto inst = build_instance(name);
    for (auto variant : {DcVariant::Dc, DcVariant::ProximalDistance}) {
      if (variant == DcVariant::Dc ? !inst.flags.dc : !inst.flags.proximal_distance) continue;
      DcObserver obs = [&](const DcRecord &rec) { kkt(name + "(dc)", rec.k, rec.master_kkt, rec.master_scale); };
      dc_run(inst.problem, DcConfig{}, inst.x0, variant, obs);
    }
  }
  if (o.pass)
    o.detail = std::to_string(solves) + " master solves, max KKT/scale " + fmt("%.3g", worst_rel) +
               ", max |sum alpha - 1| " + fmt("%.3g", worst_sum) + ", structured vs flat " + fmt("%.3g", worst_cross);
  return o;
}

Outcome criterion7() {
  Outcome o;
  const auto t0 = std::chrono::steady_clock::now();
  long steps = 0;
  for (const auto &name : instance_names()) {
    const auto inst = build_instance(name);
    for (auto variant : {DcVariant::Dc, DcVariant::ProximalDistance}) {
      if (variant == DcVariant::Dc ? !inst.flags.dc : !inst.flags.proximal_distance) continue;
      DcConfig c;
      DcObserver obs = [&](const DcRecord &rec) {
        ++steps;
        const std::string at = name + " k=" + std::to_string(rec.k);
        if (rec.objective > rec.prev_objective + kDcSlack * (1.0 + std::abs(rec.prev_objective))) o.fail(at + ": objective increased");
        if (rec.e < -kDcSlack) o.fail(at + ": e_k = " + fmt("%.3g", rec.e));
        if (rec.v < rec.step_norm * rec.step_norm / (2.0 * c.t) - kDcSlack) o.fail(at + ": v_k below the prox term");
      };
      dc_run(inst.problem, c, inst.x0, variant, obs);
    }
  }
  // Distance-squared identity against the direct distance.
  std::mt19937_64 rng(7);
  double worst_id = 0.0;
  for (const char *name : {"distpen", "distpen2"}) {
    const auto inst = build_instance(name);
    for (const auto &K : inst.problem.distance->sets) {
      const auto dc = distance_squared_dc(K);
      for (int s = 0; s < 1000; ++s) {
        const Vec x = random_vec(rng, K.dim(), 4.0);
        double direct = kInf;
        for (Eigen::Index j = 0; j < K.points().cols(); ++j) direct = std::min(direct, (x - K.points().col(j)).squaredNorm());
        const double err = std::abs(dc.value(x) - direct);
        worst_id = std::max(worst_id, err);
        if (err > kDcIdentity) o.fail(std::string(name) + ": DC identity error " + fmt("%.3g", err));
      }
    }
  }
  // The iteration x <- (1 + x) / 2 has the fixed point 1.
  const auto inst = build_instance("distpen");
  DcConfig c;
  c.tol = 1e-13;
  const auto r = dc_run(inst.problem, c, Vec::Constant(1, 0.2));
  const double err = std::abs(r.x(0) - 1.0);
  if (!r.converged || err > kDcFixedPoint) o.fail("distance run ended at " + fmt("%.10g", r.x(0)));
  const double secs = seconds_since(t0);
  if (secs >= 1.0) o.fail("runtime " + fmt("%.2f s", secs));
  if (o.pass)
    o.detail = std::to_string(steps) + " DC steps, identity error " + fmt("%.3g", worst_id) + ", |x - 1| = " +
               fmt("%.3g", err) + ", " + fmt("%.3f s", secs);
  return o;
}

Outcome criterion8() {
  Outcome o;
  double worst = 0.0;
  for (const char *name : {"distpen", "distpen2"}) {
    const auto inst = build_instance(name);
    DcConfig c;
    auto a = dc_init(inst.problem, c, inst.x0);
    auto b = dc_init(inst.problem, c, inst.x0);
    for (int k = 0; k < 50; ++k) {
      const auto ra = dc_step(a, inst.problem, c);
      const auto rb = proximal_distance_step(b, inst.problem, c);
      const double gap = (ra.x_next - rb.x_next).norm();
      worst = std::max(worst, gap);
      if (gap > kAlgorithmsAgree) o.fail(std::string(name) + " k=" + std::to_string(k) + ": gap " + fmt("%.3g", gap));
    }
  }
  if (o.pass) o.detail = "2 instances x 50 iterations, max gap " + fmt("%.3g", worst);
  return o;
}

Outcome criterion9() {
  Outcome o;
  const auto inst = build_instance("sincounter");
  Schedule s;
  s.length = 21;
  s.theta_factor = 2.0;
  s.divergence_threshold = 1e3;
  s.warm_start = WarmStart::Initial;
  const auto t0 = std::chrono::steady_clock::now();
  const auto r = run_outer(*inst.family, s, InnerSolver::Bundle, inst.x0);
  const double secs = seconds_since(t0);
  double min_actual = kInf;
  if (r.rows.size() != 21) o.fail("only " + std::to_string(r.rows.size()) + " outer iterations");
  for (const auto &row : r.rows) {
    const std::string at = "nu=" + std::to_string(row.nu);
    if (!row.near_stationary) o.fail(at + ": not near-stationary at the certified tolerance");
    const double theta = std::pow(2.0, row.nu);
    if (std::abs(row.y_norm - theta) > 1e-9 * theta) o.fail(at + ": |y| = " + fmt("%.10g", row.y_norm));
    if (!row.actual_residual) {
      o.fail(at + ": no actual residual");
      continue;
    }
    min_actual = std::min(min_actual, row.actual_residual->total);
  }
  if (!(min_actual >= kActualResidualFloor)) o.fail("actual residual fell to " + fmt("%.3g", min_actual));
  if (!r.diagnostics.divergent || r.diagnostics.first_flag > 20) o.fail("divergence diagnostic did not fire");
  if (secs >= 1.0) o.fail("runtime " + fmt("%.2f s", secs));
  if (o.pass)
    o.detail = "diagnostic fired at nu=" + std::to_string(r.diagnostics.first_flag) + ", min actual residual " +
               fmt("%.3g", min_actual) + ", " + fmt("%.3f s", secs);
  return o;
}

Outcome criterion10() {
  Outcome o;
  const auto groups = buffered_groups();
  std::mt19937_64 rng(10);
  double worst_fd = 0.0;
  for (double eta : {1.0, 0.1, 0.01}) {
    const auto F = make_lse(groups, eta);
    for (int s = 0; s < 1000; ++s) {
      const Vec x = random_vec(rng, 2, 2.0);
      const Vec v = F.value(x);
      for (size_t i = 0; i < groups.size(); ++i) {
        double mn = kInf;
        for (const auto &psi : groups[i].psi) mn = std::min(mn, psi.value(x));
        const double vi = v(static_cast<Eigen::Index>(i));
        if (vi > mn + 1e-12 || vi < mn - eta - 1e-12) o.fail("sandwich violated at eta " + fmt("%g", eta));
      }
      if (s < 100) {
        const auto fd = check_jacobian(F, x, 1e-6, kFdRelative);
        worst_fd = std::max(worst_fd, fd.max_rel_error);
        if (!fd.passed) o.fail("finite-difference mismatch " + fmt("%.3g", fd.max_rel_error) + " at eta " + fmt("%g", eta));
      }
    }
  }
  if (o.pass)
    o.detail = std::to_string(groups.size()) + " components, 3000 points, max FD relative error " + fmt("%.3g", worst_fd);
  return o;
}

Outcome criterion11() {
  Outcome o;
  double worst = 0.0;
  long points = 0;
  for (const char *name : {"abs1d", "quartic"}) {
    const auto inst = build_instance(name);
    const double lo = inst.grid_box->first(0), hi = inst.grid_box->second(0);
    const long n = std::lround((hi - lo) / 1e-3);
    for (long i = 0; i <= n; ++i) {
      const Vec x = Vec::Constant(1, lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(n));
      const double a = stationarity_measure(inst.problem, x).breakdown.total;
      const double b = grid_residual(inst.problem, x, DMode::SmoothGradient);
      worst = std::max(worst, std::abs(a - b));
      ++points;
      if (std::abs(a - b) > kGridAgreement)
        o.fail(std::string(name) + " x=" + fmt("%.6g", x(0)) + ": " + fmt("%.3g", a) + " vs " + fmt("%.3g", b));
    }
  }
  if (o.pass) o.detail = std::to_string(points) + " grid points, max difference " + fmt("%.3g", worst);
  return o;
}

std::string slurp(const fs::path &p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Outcome criterion12(const std::string &suite) {
  Outcome o;
  const fs::path base = fs::temp_directory_path() / ("compopt_acceptance_" + std::to_string(::getpid()));
  fs::remove_all(base);
  std::ostringstream sink;
  for (const char *run : {"a", "b"}) {
    cmd_bench(suite, (base / run).string(), 4, true, 7UL, sink, sink);
  }
  long files = 0;
  for (const auto &e : fs::recursive_directory_iterator(base / "a")) {
    if (!e.is_regular_file()) continue;
    const auto name = e.path().filename().string();
    if (name == "walltime.txt" || name == "bench_walltime.csv") continue;
    const auto other = base / "b" / fs::relative(e.path(), base / "a");
    ++files;
    if (!fs::exists(other) || slurp(e.path()) != slurp(other)) o.fail("differs: " + fs::relative(e.path(), base / "a").string());
  }
  if (files == 0) o.fail("bench produced no output");
  fs::remove_all(base);
  if (o.pass) o.detail = std::to_string(files) + " CSV/JSON files byte-identical across two runs";
  return o;
}

} // namespace

int main(int argc, char **argv) {
  const std::string suite = argc > 1 ? argv[1] : COMPOPT_DEFAULT_SUITE;
  const std::vector<std::function<Outcome()>> criteria = {
      criterion1, criterion2, criterion3, criterion4,  criterion5,  criterion6,
      criterion7, criterion8, criterion9, criterion10, criterion11, [&] { return criterion12(suite); }};
  int failed = 0;
  for (size_t i = 0; i < criteria.size(); ++i) {
    Outcome o;
    try {
      o = criteria[i]();
    } catch (const std::exception &e) {
      o.fail(std::string("exception: ") + e.what());
    }
    if (!o.pass) ++failed;
    std::printf("criterion %2zu: %s  %s\n", i + 1, o.pass ? "PASS" : "FAIL", o.detail.c_str());
    std::fflush(stdout);
  }
  std::printf("%d of %zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
  return failed;
}
