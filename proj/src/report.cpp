#include "compopt/report.hpp"

#include <cstdio>
#include <istream>
#include <ostream>
#include <sstream>

namespace compopt {

std::string format_number(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

double parse_number(const std::string &s) {
  if (s == "nan") return std::numeric_limits<double>::quiet_NaN();
  if (s == "inf") return kInf;
  if (s == "-inf") return -kInf;
  char *end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (s.empty() || end != s.c_str() + s.size()) throw InvalidInput("not a number: '" + s + "'");
  return v;
}

bool IterationRow::operator==(const IterationRow &o) const {
  // Bitwise comparison so that NaN cells compare equal to themselves.
  auto same = [](const std::optional<double> &a, const std::optional<double> &b) {
    if (a.has_value() != b.has_value()) return false;
    return !a || format_number(*a) == format_number(*b);
  };
  return k == o.k && step_kind == o.step_kind && same(v, o.v) && same(e, o.e) && same(t, o.t) &&
         same(step_norm, o.step_norm) && same(objective, o.objective) &&
         model_size == o.model_size && same(residual_total, o.residual_total);
}

const std::vector<std::string> &iteration_columns() {
  static const std::vector<std::string> cols{"k",         "step_kind", "v_k",
                                             "e_k",       "t_k",       "step_norm",
                                             "objective", "model_size", "residual_total"};
  return cols;
}

namespace {

std::string cell(const std::optional<double> &v) { return v ? format_number(*v) : ""; }

std::vector<std::string> split(const std::string &line, char sep) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : line) {
    if (c == sep) {
      out.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  out.push_back(cur);
  return out;
}

std::optional<double> opt_number(const std::string &s) {
  if (s.empty()) return std::nullopt;
  return parse_number(s);
}

} // namespace

void write_iteration_csv(std::ostream &os, const std::vector<IterationRow> &rows) {
  const auto &cols = iteration_columns();
  for (size_t i = 0; i < cols.size(); ++i) os << (i ? "," : "") << cols[i];
  os << '\n';
  for (const auto &r : rows) {
    os << r.k << ',' << r.step_kind << ',' << cell(r.v) << ',' << cell(r.e) << ',' << cell(r.t)
       << ',' << cell(r.step_norm) << ',' << cell(r.objective) << ','
       << (r.model_size ? std::to_string(*r.model_size) : "") << ',' << cell(r.residual_total)
       << '\n';
  }
}

std::vector<IterationRow> read_iteration_csv(std::istream &is) {
  std::string line;
  if (!std::getline(is, line)) throw InvalidInput("iteration csv: missing header");
  const auto &cols = iteration_columns();
  if (split(line, ',') != cols) throw InvalidInput("iteration csv: unexpected header");
  std::vector<IterationRow> rows;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    const auto f = split(line, ',');
    if (f.size() != cols.size()) throw InvalidInput("iteration csv: wrong field count");
    IterationRow r;
    r.k = static_cast<int>(parse_number(f[0]));
    r.step_kind = f[1];
    r.v = opt_number(f[2]);
    r.e = opt_number(f[3]);
    r.t = opt_number(f[4]);
    r.step_norm = opt_number(f[5]);
    r.objective = opt_number(f[6]);
    if (!f[7].empty()) r.model_size = static_cast<long>(parse_number(f[7]));
    r.residual_total = opt_number(f[8]);
    rows.push_back(std::move(r));
  }
  return rows;
}

std::vector<IterationRow> bundle_rows(const CompositeProblem &problem, const BundleResult &res) {
  std::vector<IterationRow> rows;
  for (const auto &rec : res.log) {
    IterationRow r;
    r.k = rec.k;
    r.step_kind = to_string(rec.kind);
    r.v = rec.v;
    r.t = rec.t;
    r.step_norm = rec.step_norm;
    r.objective = rec.candidate_objective;
    r.model_size = static_cast<long>(rec.model_size);
    r.residual_total =
        residual(problem, DMode::SmoothGradient, {rec.x_next, rec.y_next, rec.z_next}).total;
    rows.push_back(std::move(r));
  }
  return rows;
}

std::vector<IterationRow> dc_rows(const CompositeProblem &problem, const DcResult &res,
                                  const DcConfig &config) {
  std::vector<IterationRow> rows;
  for (const auto &rec : res.log) {
    IterationRow r;
    r.k = rec.k;
    r.step_kind = rec.stop ? "stop" : "dc";
    r.v = rec.v;
    r.e = rec.e;
    r.t = config.t;
    r.step_norm = rec.step_norm;
    r.objective = rec.objective;
    const DcWitness w{rec.f1_witness, rec.f2_slopes};
    r.residual_total =
        residual(problem, DMode::DcPair, {rec.x_next, rec.y_next, rec.z_next}, &w).total;
    rows.push_back(std::move(r));
  }
  return rows;
}

void write_outer_csv(std::ostream &os, const OuterResult &res) {
  os << "nu,tol,certificate,certified_tol,residual_total,near_stationary,y_norm,"
        "actual_residual_total,inner_iterations,inner_converged\n";
  for (const auto &r : res.rows) {
    os << r.nu << ',' << format_number(r.tol) << ',' << format_number(r.certificate) << ','
       << format_number(r.certified_tol) << ',' << format_number(r.approx_residual.total) << ','
       << (r.near_stationary ? 1 : 0) << ',' << format_number(r.y_norm) << ','
       << (r.actual_residual ? format_number(r.actual_residual->total) : "") << ','
       << r.inner_iterations << ',' << (r.inner_converged ? 1 : 0) << '\n';
  }
}

std::string dump_json(const nlohmann::json &j) { return j.dump(2) + "\n"; }

} // namespace compopt
