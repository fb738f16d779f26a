#pragma once

#include "compopt/bundle.hpp"
#include "compopt/dc.hpp"
#include "compopt/outer_loop.hpp"

#include <nlohmann/json.hpp>

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace compopt {

/// %.17g, with "nan", "inf" and "-inf" spelled out; parses back exactly.
std::string format_number(double v);
double parse_number(const std::string &s);

/// One row of the iteration CSV. Empty optionals are written as empty cells.
struct IterationRow {
  int k = 0;
  std::string step_kind;
  std::optional<double> v;
  std::optional<double> e;
  std::optional<double> t;
  std::optional<double> step_norm;
  std::optional<double> objective;
  std::optional<long> model_size;
  std::optional<double> residual_total;

  bool operator==(const IterationRow &o) const;
};

/// k, step_kind, v_k, e_k, t_k, step_norm, objective, model_size, residual_total.
const std::vector<std::string> &iteration_columns();

void write_iteration_csv(std::ostream &os, const std::vector<IterationRow> &rows);
/// Inverse of write_iteration_csv; throws InvalidInput on a malformed table.
std::vector<IterationRow> read_iteration_csv(std::istream &is);

/// Rows for a bundle run; residual_total is that of (x_{k+1}, y_{k+1}, z_{k+1}).
std::vector<IterationRow> bundle_rows(const CompositeProblem &problem, const BundleResult &res);
/// Rows for a DC run; t_k is the constant prox parameter.
std::vector<IterationRow> dc_rows(const CompositeProblem &problem, const DcResult &res,
                                  const DcConfig &config);

/// nu, tol, certificate, certified_tol, residual_total, near_stationary,
/// y_norm, actual_residual_total, inner_iterations, inner_converged.
void write_outer_csv(std::ostream &os, const OuterResult &res);

/// Stable pretty-printed JSON with a trailing newline.
std::string dump_json(const nlohmann::json &j);

} // namespace compopt
