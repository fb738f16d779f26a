#include "compopt/cli.hpp"

#include "compopt/json_util.hpp"
#include "compopt/report.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <atomic>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <random>
#include <sstream>
#include <thread>

namespace compopt {

namespace fs = std::filesystem;

std::string to_string(Algorithm a) {
  switch (a) {
  case Algorithm::Bundle: return "bundle";
  case Algorithm::Dc: return "dc";
  case Algorithm::ProximalDistance: return "proximal-distance";
  case Algorithm::Outer: return "outer";
  }
  return "?";
}

namespace {

std::string trim(const std::string &s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::string strip_comment(const std::string &line) {
  const auto h = line.find('#');
  return h == std::string::npos ? line : line.substr(0, h);
}

std::string read_file(const std::string &path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigurationError("cannot read '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const fs::path &path, const std::string &text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigurationError("cannot write '" + path.string() + "'");
  out << text;
}

[[noreturn]] void bad_field(const std::string &key, const std::string &why) {
  throw ConfigurationError("config field '" + key + "': " + why);
}

double to_double(const std::string &key, const std::string &v) {
  try {
    const double d = parse_number(v);
    if (std::isnan(d)) bad_field(key, "not a number");
    return d;
  } catch (const InvalidInput &) {
    bad_field(key, "expected a number, got '" + v + "'");
  }
}

int to_int(const std::string &key, const std::string &v) {
  const double d = to_double(key, v);
  if (d != std::floor(d) || std::abs(d) > 1e9) bad_field(key, "expected an integer, got '" + v + "'");
  return static_cast<int>(d);
}

bool to_bool(const std::string &key, const std::string &v) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  bad_field(key, "expected true or false, got '" + v + "'");
}

Algorithm to_algorithm(const std::string &key, const std::string &v) {
  if (v == "bundle") return Algorithm::Bundle;
  if (v == "dc") return Algorithm::Dc;
  if (v == "proximal-distance") return Algorithm::ProximalDistance;
  if (v == "outer") return Algorithm::Outer;
  bad_field(key, "unknown algorithm '" + v + "'");
}

InnerSolver to_inner(const std::string &key, const std::string &v) {
  if (v == "bundle") return InnerSolver::Bundle;
  if (v == "dc") return InnerSolver::Dc;
  if (v == "proximal-distance") return InnerSolver::ProximalDistance;
  bad_field(key, "unknown inner solver '" + v + "'");
}

nlohmann::json opt_json(const std::optional<double> &v) {
  return v ? nlohmann::json(*v) : nlohmann::json();
}

std::string csv_text(const std::string &s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string q = "\"";
  for (char c : s) q += c == '"' ? std::string("\"\"") : std::string(1, c == '\n' ? ' ' : c);
  return q + "\"";
}

std::string cell(const std::optional<double> &v) { return v ? format_number(*v) : ""; }

/// Sampled checks run alongside a solve when verification is enabled.
class Verifier {
public:
  Verifier(bool enabled, unsigned long seed) : enabled_(enabled), rng_(seed) {}

  void bundle(const CompositeProblem &P, const BundleConfig &c, const BundleState &s,
              const BundleRecord &r) {
    if (!enabled_) return;
    const double hc = P.h->value(s.Fc);
    check(std::abs(s.model_value(s.Fc) - hc) <= 1e-12 * (1.0 + std::abs(hc)), r.k,
          "model does not interpolate h at F(center)");
    std::normal_distribution<double> N(0.0, 1.0);
    const double scale = 1.0 + s.Fc.lpNorm<Eigen::Infinity>();
    bool minorant = true;
    for (int i = 0; i < 200 && minorant; ++i) {
      Vec z = s.Fc;
      for (Eigen::Index j = 0; j < z.size(); ++j) z(j) += scale * N(rng_);
      const double hz = P.h->value(z);
      minorant = s.model_value(z) <= hz + 1e-10 * (1.0 + std::abs(hz));
    }
    check(minorant, r.k, "model exceeds h at a sampled point");
    const double lhs = (r.x_next - r.center).squaredNorm() / (2.0 * r.t);
    check(lhs <= r.v + 1e-12, r.k, "prox term exceeds the predicted decrease");
    if (r.kind == StepKind::Serious)
      check(r.center_objective - r.candidate_objective >= 0.5 * c.kappa * r.v - 1e-12, r.k,
            "serious step without sufficient decrease");
  }

  void dc(const DcRecord &r, double t) {
    if (!enabled_) return;
    check(r.objective <= r.prev_objective + 1e-12 * (1.0 + std::abs(r.prev_objective)), r.k,
          "objective increased");
    check(r.e >= -1e-12, r.k, "negative linearization error");
    check(r.v >= r.step_norm * r.step_norm / (2.0 * t) - 1e-12, r.k,
          "predicted decrease below the prox term");
  }

  nlohmann::json to_json() const {
    return {{"enabled", enabled_},
            {"checks", checks_},
            {"violation_count", count_},
            {"violations", violations_}};
  }
  bool ok() const { return count_ == 0; }

private:
  void check(bool ok, int k, const std::string &what) {
    ++checks_;
    if (ok) return;
    ++count_;
    if (violations_.size() < 20) violations_.push_back("k=" + std::to_string(k) + ": " + what);
  }

  bool enabled_;
  std::mt19937_64 rng_;
  long checks_ = 0;
  long count_ = 0;
  std::vector<std::string> violations_;
};

int classify(const std::exception &e) {
  if (dynamic_cast<const ConfigurationError *>(&e) || dynamic_cast<const RegistryError *>(&e) ||
      dynamic_cast<const InvalidInput *>(&e) || dynamic_cast<const InfeasiblePoint *>(&e))
    return kExitInvalidConfig;
  return kExitFailure;
}

void require_flag(bool ok, const Instance &inst, const std::string &alg) {
  if (!ok)
    throw ConfigurationError("instance '" + inst.name + "' does not support algorithm '" + alg +
                             "'");
}

} // namespace

KeyValues parse_key_values(const std::string &text) {
  KeyValues kv;
  std::istringstream in(text);
  std::string line, section;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    line = trim(strip_comment(line));
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']')
        throw ConfigurationError("line " + std::to_string(lineno) + ": malformed section header");
      section = trim(line.substr(1, line.size() - 2));
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigurationError("line " + std::to_string(lineno) + ": expected 'key = value'");
    const std::string key = trim(line.substr(0, eq));
    if (key.empty()) throw ConfigurationError("line " + std::to_string(lineno) + ": empty key");
    kv.emplace_back(section.empty() ? key : section + "." + key, trim(line.substr(eq + 1)));
  }
  return kv;
}

KeyValues flatten_json(const nlohmann::json &j) {
  KeyValues kv;
  std::function<void(const nlohmann::json &, const std::string &)> walk =
      [&](const nlohmann::json &node, const std::string &prefix) {
        if (node.is_object()) {
          for (auto it = node.begin(); it != node.end(); ++it)
            walk(it.value(), prefix.empty() ? it.key() : prefix + "." + it.key());
        } else if (node.is_string()) {
          kv.emplace_back(prefix, node.get<std::string>());
        } else if (node.is_boolean()) {
          kv.emplace_back(prefix, node.get<bool>() ? "true" : "false");
        } else if (node.is_number_integer()) {
          kv.emplace_back(prefix, std::to_string(node.get<long long>()));
        } else if (node.is_number()) {
          kv.emplace_back(prefix, format_number(node.get<double>()));
        } else {
          throw ConfigurationError("config field '" + prefix + "': unsupported JSON value");
        }
      };
  if (!j.is_object()) throw ConfigurationError("JSON config must be an object");
  walk(j, "");
  return kv;
}

KeyValues parse_config_text(const std::string &text) {
  const auto b = text.find_first_not_of(" \t\r\n");
  if (b != std::string::npos && text[b] == '{') {
    try {
      return flatten_json(nlohmann::json::parse(text));
    } catch (const nlohmann::json::exception &e) {
      throw ConfigurationError(std::string("malformed JSON config: ") + e.what());
    }
  }
  return parse_key_values(text);
}

nlohmann::json RunConfig::to_json() const {
  nlohmann::json given_j = nlohmann::json::array();
  for (const auto &[k, v] : given) given_j.push_back({k, v});
  nlohmann::json j = {
      {"instance", instance},
      {"params", params},
      {"algorithm", to_string(algorithm)},
      {"inner", inner ? nlohmann::json(to_string(*inner)) : nlohmann::json()},
      {"bundle",
       {{"kappa", bundle.kappa},
        {"tau", bundle.tau},
        {"t_lower0", bundle.t_lower0},
        {"t0", bundle.t0},
        {"t_max", bundle.t_max},
        {"tol", bundle.tol},
        {"max_iter", bundle.max_iter},
        {"structured", bundle.structured}}},
      {"dc", {{"t", dc.t}, {"tol", dc.tol}, {"e", opt_json(dc.e)}, {"max_iter", dc.max_iter}}},
      {"schedule",
       {{"length", schedule.length},
        {"tol0", schedule.tol0},
        {"tol_factor", schedule.tol_factor},
        {"eta_factor", schedule.eta_factor},
        {"rho_factor", schedule.rho_factor},
        {"theta_factor", schedule.theta_factor},
        {"first", schedule.first},
        {"halt_on_divergence", schedule.halt_on_divergence},
        {"divergence_threshold", opt_json(schedule.divergence_threshold)},
        {"warm_start", to_string(schedule.warm_start)}}},
      {"seed", seed},
      {"verify", verify},
      {"given", given_j}};
  return j;
}

RunConfig run_config_from(const KeyValues &kv) {
  RunConfig c;
  c.given = kv;
  bool have_instance = false;
  for (const auto &[key, v] : kv) {
    const auto dot = key.find('.');
    const std::string sec = dot == std::string::npos ? "" : key.substr(0, dot);
    const std::string name = dot == std::string::npos ? key : key.substr(dot + 1);
    if (sec.empty()) {
      if (name == "instance") {
        c.instance = v;
        have_instance = true;
      } else if (name == "algorithm") {
        c.algorithm = to_algorithm(key, v);
      } else if (name == "inner") {
        c.inner = to_inner(key, v);
      } else if (name == "seed") {
        const double s = to_double(key, v);
        if (s < 0 || s != std::floor(s)) bad_field(key, "expected a nonnegative integer");
        c.seed = static_cast<unsigned long>(s);
      } else if (name == "verify") {
        c.verify = to_bool(key, v);
      } else {
        bad_field(key, "unknown key");
      }
    } else if (sec == "params") {
      c.params[name] = to_double(key, v);
    } else if (sec == "bundle") {
      auto &b = c.bundle;
      if (name == "kappa") b.kappa = to_double(key, v);
      else if (name == "tau") b.tau = to_double(key, v);
      else if (name == "t_lower0") b.t_lower0 = to_double(key, v);
      else if (name == "t0") b.t0 = to_double(key, v);
      else if (name == "t_max") b.t_max = to_double(key, v);
      else if (name == "tol") b.tol = to_double(key, v);
      else if (name == "max_iter") b.max_iter = to_int(key, v);
      else if (name == "structured") b.structured = to_bool(key, v);
      else bad_field(key, "unknown key");
    } else if (sec == "dc") {
      auto &d = c.dc;
      if (name == "t") d.t = to_double(key, v);
      else if (name == "tol") d.tol = to_double(key, v);
      else if (name == "e") d.e = to_double(key, v);
      else if (name == "max_iter") d.max_iter = to_int(key, v);
      else bad_field(key, "unknown key");
    } else if (sec == "schedule") {
      auto &s = c.schedule;
      if (name == "length") s.length = to_int(key, v);
      else if (name == "tol0") s.tol0 = to_double(key, v);
      else if (name == "tol_factor") s.tol_factor = to_double(key, v);
      else if (name == "eta_factor") s.eta_factor = to_double(key, v);
      else if (name == "rho_factor") s.rho_factor = to_double(key, v);
      else if (name == "theta_factor") s.theta_factor = to_double(key, v);
      else if (name == "first") s.first = to_int(key, v);
      else if (name == "halt_on_divergence") s.halt_on_divergence = to_bool(key, v);
      else if (name == "divergence_threshold") s.divergence_threshold = to_double(key, v);
      else if (name == "warm_start") {
        if (v == "previous") s.warm_start = WarmStart::Previous;
        else if (v == "initial") s.warm_start = WarmStart::Initial;
        else bad_field(key, "expected 'previous' or 'initial', got '" + v + "'");
      }
      else bad_field(key, "unknown key");
    } else {
      bad_field(key, "unknown section '" + sec + "'");
    }
  }
  if (!have_instance) bad_field("instance", "missing");
  c.bundle.validate();
  c.dc.validate();
  c.schedule.validate();
  return c;
}

std::vector<KeyValues> parse_suite(const std::string &text) {
  const auto b = text.find_first_not_of(" \t\r\n");
  std::vector<KeyValues> runs;
  if (b != std::string::npos && text[b] == '{') {
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception &e) {
      throw ConfigurationError(std::string("malformed JSON suite: ") + e.what());
    }
    if (!j.contains("runs") || !j["runs"].is_array())
      throw ConfigurationError("JSON suite needs a 'runs' array");
    for (const auto &r : j["runs"]) runs.push_back(flatten_json(r));
    return runs;
  }
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    line = trim(strip_comment(line));
    if (line.empty()) continue;
    if (line == "[run]") {
      runs.emplace_back();
      continue;
    }
    if (runs.empty() || line.front() == '[')
      throw ConfigurationError("suite line " + std::to_string(lineno) +
                               ": expected '[run]' sections with 'key = value' lines");
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigurationError("suite line " + std::to_string(lineno) + ": expected 'key = value'");
    runs.back().emplace_back(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
  }
  return runs;
}

RunConfig resolve_run(const KeyValues &kv, const std::string &base_dir) {
  KeyValues merged;
  KeyValues rest;
  for (const auto &[k, v] : kv) {
    if (k == "config") {
      fs::path p(v);
      if (p.is_relative()) p = fs::path(base_dir) / p;
      for (auto &e : parse_config_text(read_file(p.string()))) merged.push_back(e);
    } else {
      rest.emplace_back(k, v);
    }
  }
  // Later entries win, so the run's own keys override its base file.
  for (auto &e : rest) merged.push_back(e);
  KeyValues dedup;
  for (const auto &e : merged) {
    auto it = std::find_if(dedup.begin(), dedup.end(), [&](const auto &d) { return d.first == e.first; });
    if (it != dedup.end()) it->second = e.second;
    else dedup.push_back(e);
  }
  return run_config_from(dedup);
}

RunOutcome execute_run(const RunConfig &config) {
  RunOutcome out;
  const auto t0 = std::chrono::steady_clock::now();
  nlohmann::json s = {{"instance", config.instance},
                      {"algorithm", to_string(config.algorithm)},
                      {"config", config.to_json()}};
  Verifier verifier(config.verify, config.seed);
  try {
    const Instance inst = build_instance(config.instance, config.params);
    const CompositeProblem &P = inst.problem;
    s["params"] = inst.params;
    s["synthetic_data"] = inst.synthetic;
    std::ostringstream table;
    switch (config.algorithm) {
    case Algorithm::Bundle: {
      require_flag(inst.flags.bundle, inst, "bundle");
      if (config.bundle.structured) require_flag(inst.flags.structured, inst, "bundle (structured)");
      BundleObserver obs = [&](const BundleState &st, const BundleRecord &r) {
        verifier.bundle(P, config.bundle, st, r);
      };
      const BundleResult r = bundle_run(P, config.bundle, inst.x0, obs);
      write_iteration_csv(table, bundle_rows(P, r));
      out.table_name = "iterations.csv";
      out.exit_code = r.converged ? kExitOk : kExitMaxIter;
      out.iterations = r.iterations;
      out.serious = r.serious;
      out.null_steps = r.null_steps;
      out.backtracking = r.backtracking;
      out.final_v = r.final_v;
      out.residual_total = r.measure.breakdown.total;
      out.certificate = r.certificate.eps;
      s["converged"] = r.converged;
      s["iterations"] = r.iterations;
      s["counts"] = {{"serious", r.serious}, {"null", r.null_steps}, {"backtracking", r.backtracking}};
      s["final_v"] = r.final_v;
      s["x"] = vec_to_json(r.x);
      s["certificate"] = r.certificate.to_json();
      s["residual"] = r.measure.breakdown.to_json();
      s["residual_exact"] = r.measure.exact;
      s["warnings"] = r.warnings;
      break;
    }
    case Algorithm::Dc:
    case Algorithm::ProximalDistance: {
      const bool pd = config.algorithm == Algorithm::ProximalDistance;
      require_flag(pd ? inst.flags.proximal_distance : inst.flags.dc, inst, to_string(config.algorithm));
      DcObserver obs = [&](const DcRecord &r) { verifier.dc(r, config.dc.t); };
      const DcResult r = dc_run(P, config.dc, inst.x0, pd ? DcVariant::ProximalDistance : DcVariant::Dc, obs);
      write_iteration_csv(table, dc_rows(P, r, config.dc));
      out.table_name = "iterations.csv";
      out.exit_code = r.converged ? kExitOk : kExitMaxIter;
      out.iterations = r.iterations;
      out.final_v = r.final_v;
      out.final_e = r.final_e;
      out.residual_total = r.residual.total;
      out.certificate = r.certificate.eps;
      s["converged"] = r.converged;
      s["iterations"] = r.iterations;
      s["final_v"] = r.final_v;
      s["final_e"] = r.final_e;
      s["x"] = vec_to_json(r.x);
      s["certificate"] = r.certificate.to_json();
      s["residual"] = r.residual.to_json();
      break;
    }
    case Algorithm::Outer: {
      if (!inst.family) throw ConfigurationError("instance '" + inst.name + "' has no approximation family");
      const InnerSolver inner = config.inner.value_or(inst.family_inner);
      InnerConfigs ic{config.bundle, config.dc};
      const OuterResult r = run_outer(*inst.family, config.schedule, inner, inst.x0, ic);
      write_outer_csv(table, r);
      out.table_name = "outer.csv";
      bool all_inner = true;
      for (const auto &row : r.rows) {
        all_inner = all_inner && row.inner_converged;
        out.iterations += row.inner_iterations;
      }
      if (!r.failure.empty()) out.exit_code = kExitFailure;
      else out.exit_code = all_inner ? kExitOk : kExitMaxIter;
      if (!r.rows.empty()) {
        out.residual_total = r.rows.back().approx_residual.total;
        out.certificate = r.rows.back().certificate;
      }
      s["family"] = {{"name", inst.family->name}, {"kind", to_string(inst.family->kind)},
                     {"initial", inst.family->initial.to_json()}};
      s["inner"] = to_string(inner);
      s["iterations"] = out.iterations;
      s["outer"] = r.to_json();
      break;
    }
    }
    out.table_csv = table.str();
    if (!verifier.ok() && out.exit_code == kExitOk) out.exit_code = kExitFailure;
  } catch (const Error &e) {
    out.exit_code = classify(e);
    out.error = e.what();
  } catch (const std::exception &e) {
    out.exit_code = kExitFailure;
    out.error = e.what();
  }
  s["verify"] = verifier.to_json();
  s["exit_status"] = out.exit_code;
  if (!out.error.empty()) s["error"] = out.error;
  out.summary = s;
  out.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return out;
}

namespace {

void write_outcome(const fs::path &dir, const RunOutcome &r) {
  fs::create_directories(dir);
  if (!r.table_name.empty()) write_file(dir / r.table_name, r.table_csv);
  write_file(dir / "summary.json", dump_json(r.summary));
  // Kept apart from the deterministic outputs.
  write_file(dir / "walltime.txt", format_number(r.wall_seconds) + "\n");
}

} // namespace

int cmd_solve(const std::string &config_path, const std::string &out_dir, bool verify,
              std::optional<unsigned long> seed, std::ostream &out, std::ostream &err) {
  RunConfig cfg;
  try {
    cfg = run_config_from(parse_config_text(read_file(config_path)));
  } catch (const Error &e) {
    err << "invalid config: " << e.what() << "\n";
    return kExitInvalidConfig;
  }
  if (verify) cfg.verify = true;
  if (seed) cfg.seed = *seed;
  const RunOutcome r = execute_run(cfg);
  try {
    write_outcome(out_dir, r);
  } catch (const Error &e) {
    err << e.what() << "\n";
    return kExitInvalidConfig;
  }
  if (!r.error.empty()) err << "error: " << r.error << "\n";
  out << cfg.instance << " " << to_string(cfg.algorithm) << ": " << r.iterations
      << " iterations, residual " << cell(r.residual_total) << ", exit " << r.exit_code << "\n";
  return r.exit_code;
}

int cmd_bench(const std::string &suite_path, const std::string &out_dir, int jobs, bool verify,
              std::optional<unsigned long> seed, std::ostream &out, std::ostream &err) {
  std::vector<KeyValues> runs;
  try {
    runs = parse_suite(read_file(suite_path));
  } catch (const Error &e) {
    err << "invalid suite: " << e.what() << "\n";
    return kExitInvalidConfig;
  }
  if (runs.empty()) {
    err << "invalid suite: no runs\n";
    return kExitInvalidConfig;
  }
  const std::string base = fs::path(suite_path).parent_path().string();
  std::vector<RunOutcome> outcomes(runs.size());
  std::vector<RunConfig> configs(runs.size());
  std::atomic<size_t> next{0};
  auto worker = [&]() {
    for (size_t i = next++; i < runs.size(); i = next++) {
      try {
        RunConfig c = resolve_run(runs[i], base);
        if (verify) c.verify = true;
        if (seed) c.seed = *seed;
        configs[i] = c;
        outcomes[i] = execute_run(c);
      } catch (const Error &e) {
        for (const auto &[k, v] : runs[i]) {
          if (k == "instance") configs[i].instance = v;
        }
        outcomes[i].exit_code = classify(e);
        outcomes[i].error = e.what();
        outcomes[i].summary = {{"exit_status", outcomes[i].exit_code}, {"error", e.what()}};
      }
    }
  };
  const int nthreads = std::max(1, std::min<int>(jobs, static_cast<int>(runs.size())));
  std::vector<std::thread> pool;
  for (int t = 0; t < nthreads; ++t) pool.emplace_back(worker);
  for (auto &t : pool) t.join();

  std::ostringstream csv, wall;
  csv << "run,instance,algorithm,exit_code,iterations,serious,null,backtracking,final_v,final_e,"
         "residual_total,certificate,error\n";
  wall << "run,wall_seconds\n";
  int worst = kExitOk;
  try {
    for (size_t i = 0; i < runs.size(); ++i) {
      const auto &r = outcomes[i];
      const auto &c = configs[i];
      const std::string alg = r.summary.contains("algorithm") ? to_string(c.algorithm) : "";
      csv << i << ',' << csv_text(c.instance) << ',' << alg << ',' << r.exit_code << ','
          << r.iterations << ',' << r.serious << ',' << r.null_steps << ',' << r.backtracking << ','
          << cell(r.final_v) << ',' << cell(r.final_e) << ',' << cell(r.residual_total) << ','
          << cell(r.certificate) << ',' << csv_text(r.error) << '\n';
      wall << i << ',' << format_number(r.wall_seconds) << '\n';
      char idx[16];
      std::snprintf(idx, sizeof idx, "%03zu", i);
      write_outcome(fs::path(out_dir) / "runs" / (std::string(idx) + "_" + c.instance + "_" + alg), r);
      worst = std::max(worst, r.exit_code);
      out << idx << " " << c.instance << " " << alg << ": exit " << r.exit_code
          << (r.error.empty() ? "" : " (" + r.error + ")") << "\n";
    }
    write_file(fs::path(out_dir) / "bench.csv", csv.str());
    write_file(fs::path(out_dir) / "bench_walltime.csv", wall.str());
  } catch (const Error &e) {
    err << e.what() << "\n";
    return kExitInvalidConfig;
  }
  return worst;
}

int cmd_certify(const std::string &instance, const KeyValues &params,
                const std::string &point_path, double eps, std::ostream &out, std::ostream &err) {
  Instance inst;
  StationarityTriple tr;
  try {
    Params p;
    for (const auto &[k, v] : params) p[k] = to_double("params." + k, v);
    inst = build_instance(instance, p);
    if (!(eps >= 0)) throw ConfigurationError("eps must be nonnegative");
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(read_file(point_path));
    } catch (const nlohmann::json::exception &e) {
      throw InvalidInput(std::string("malformed point file: ") + e.what());
    }
    if (!j.is_object() || !j.contains("x")) throw InvalidInput("point file needs an 'x' entry");
    const CompositeProblem &P = inst.problem;
    tr.x = vec_from_json(j["x"]);
    require_dim(tr.x, P.n(), "point x");
    require_finite(tr.x, "point x");
    tr.z = j.contains("z") ? vec_from_json(j["z"]) : P.map_value(tr.x);
    require_dim(tr.z, P.m(), "point z");
    if (j.contains("y")) {
      tr.y = vec_from_json(j["y"]);
    } else {
      if (!std::isfinite(P.h->value(tr.z))) throw InvalidInput("z outside the domain of h; supply y");
      tr.y = P.h->subgradient(tr.z);
    }
    require_dim(tr.y, P.m(), "point y");
  } catch (const Error &e) {
    err << "invalid input: " << e.what() << "\n";
    return kExitInvalidConfig;
  }
  try {
    const DMode mode = inst.problem.F ? DMode::SmoothGradient : DMode::DcPair;
    const ResidualBreakdown r = residual(inst.problem, mode, tr);
    const bool ok = r.total <= eps;
    nlohmann::json j = {{"instance", instance},
                        {"x", vec_to_json(tr.x)},
                        {"y", vec_to_json(tr.y)},
                        {"z", vec_to_json(tr.z)},
                        {"mode", mode == DMode::SmoothGradient ? "smooth-gradient" : "dc-pair"},
                        {"eps", eps},
                        {"residual", r.to_json()},
                        {"near_stationary", ok}};
    out << dump_json(j);
    return ok ? kExitOk : kExitNotStationary;
  } catch (const Error &e) {
    err << "error: " << e.what() << "\n";
    return classify(e);
  }
}

int cmd_list(std::ostream &out) {
  for (const auto &name : instance_names()) {
    const Instance inst = build_instance(name);
    std::vector<std::string> algs;
    if (inst.flags.bundle) algs.push_back("bundle");
    if (inst.flags.structured) algs.push_back("bundle(structured)");
    if (inst.flags.dc) algs.push_back("dc");
    if (inst.flags.proximal_distance) algs.push_back("proximal-distance");
    if (inst.family) algs.push_back("outer(" + to_string(inst.family_inner) + ")");
    out << name << "  n=" << inst.problem.n() << " m=" << inst.problem.m() << "  [";
    for (size_t i = 0; i < algs.size(); ++i) out << (i ? ", " : "") << algs[i];
    out << "]" << (inst.synthetic ? "  synthetic data" : "") << "\n    " << inst.description
        << "\n    params:";
    for (const auto &[k, v] : inst.params) out << " " << k << "=" << format_number(v);
    out << "\n";
  }
  return kExitOk;
}

int run_cli(int argc, char **argv, std::ostream &out, std::ostream &err) {
  CLI::App app{"Composite optimization solvers: bundle, DC and outer approximation loops"};
  app.require_subcommand(1);

  std::string config, out_dir = "out", instance, point;
  bool verify = false;
  int jobs = 1;
  double eps = 1e-6;
  std::vector<std::string> params;
  std::optional<unsigned long> seed;

  auto *solve = app.add_subcommand("solve", "run one solver configuration");
  solve->add_option("--config", config, "run config (key-value text or JSON)")->required();
  solve->add_option("--out", out_dir, "output directory");
  solve->add_flag("--verify", verify, "enable sampled invariant checks");
  solve->add_option("--seed", seed, "seed for sampled checks");

  auto *bench = app.add_subcommand("bench", "run a suite of configurations");
  bench->add_option("--config", config, "suite file")->required();
  bench->add_option("--out", out_dir, "output directory");
  bench->add_option("--jobs", jobs, "parallel runs")->check(CLI::PositiveNumber);
  bench->add_flag("--verify", verify, "enable sampled invariant checks");
  bench->add_option("--seed", seed, "seed for sampled checks");

  auto *certify = app.add_subcommand("certify", "residual of a supplied point");
  certify->add_option("--instance", instance, "instance name")->required();
  certify->add_option("--point", point, "JSON point file with x and optional y, z")->required();
  certify->add_option("--eps", eps, "tolerance");
  certify->add_option("--param", params, "instance parameter override key=value");

  app.add_subcommand("list", "list shipped instances");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError &e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitInvalidConfig;
  }

  if (*solve) return cmd_solve(config, out_dir, verify, seed, out, err);
  if (*bench) return cmd_bench(config, out_dir, jobs, verify, seed, out, err);
  if (*certify) {
    KeyValues kv;
    for (const auto &p : params) {
      const auto eq = p.find('=');
      if (eq == std::string::npos) {
        err << "invalid input: --param expects key=value\n";
        return kExitInvalidConfig;
      }
      kv.emplace_back(trim(p.substr(0, eq)), trim(p.substr(eq + 1)));
    }
    return cmd_certify(instance, kv, point, eps, out, err);
  }
  return cmd_list(out);
}

} // namespace compopt
