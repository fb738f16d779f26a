#pragma once

#include "compopt/outer_loop.hpp"
#include "compopt/problems.hpp"

#include <nlohmann/json.hpp>

#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

namespace compopt {

enum ExitCode : int {
  kExitOk = 0,
  kExitNotStationary = 1,
  kExitMaxIter = 2,
  kExitInvalidConfig = 3,
  kExitFailure = 4,
};

enum class Algorithm { Bundle, Dc, ProximalDistance, Outer };
std::string to_string(Algorithm a);

/// Ordered (dotted key, value) pairs; "[bundle]\nkappa = 0.2" becomes
/// ("bundle.kappa", "0.2").
using KeyValues = std::vector<std::pair<std::string, std::string>>;

/// Key-value text: `key = value` lines, `[section]` headers, `#` comments.
KeyValues parse_key_values(const std::string &text);
/// Nested objects become dotted keys; scalars are rendered as text.
KeyValues flatten_json(const nlohmann::json &j);
/// JSON if the first non-blank character is '{', key-value text otherwise.
KeyValues parse_config_text(const std::string &text);

struct RunConfig {
  std::string instance;
  Params params;
  Algorithm algorithm = Algorithm::Bundle;
  /// Inner solver for Algorithm::Outer; defaults to the instance's.
  std::optional<InnerSolver> inner;
  BundleConfig bundle;
  DcConfig dc;
  Schedule schedule;
  unsigned long seed = 7;
  bool verify = false;
  /// The keys as given, for the summary echo.
  KeyValues given;

  nlohmann::json to_json() const;
};

/// Unknown keys and out-of-range values raise ConfigurationError naming the
/// field.
RunConfig run_config_from(const KeyValues &kv);

/// Suite text: one `[run]` section per run, each holding dotted keys; a run
/// may name a base config file with `config = path`, resolved relative to
/// the suite file. JSON suites are `{"runs": [{...}, ...]}`. Files are read
/// by resolve_run, so a bad run does not stop the others.
std::vector<KeyValues> parse_suite(const std::string &text);
RunConfig resolve_run(const KeyValues &kv, const std::string &base_dir);

struct RunOutcome {
  int exit_code = kExitOk;
  nlohmann::json summary;
  /// Iteration table (inner runs) or the outer table (outer runs).
  std::string table_csv;
  std::string table_name;
  std::string error;
  double wall_seconds = 0.0;
  int iterations = 0;
  int serious = 0;
  int null_steps = 0;
  int backtracking = 0;
  std::optional<double> final_v;
  std::optional<double> final_e;
  std::optional<double> residual_total;
  std::optional<double> certificate;
};

/// Runs one configuration; never throws (failures become exit codes).
RunOutcome execute_run(const RunConfig &config);

int cmd_solve(const std::string &config_path, const std::string &out_dir, bool verify,
              std::optional<unsigned long> seed, std::ostream &out, std::ostream &err);
int cmd_bench(const std::string &suite_path, const std::string &out_dir, int jobs, bool verify,
              std::optional<unsigned long> seed, std::ostream &out, std::ostream &err);
/// Point file: {"x": [...], "y": [...], "z": [...]} with y and z optional.
int cmd_certify(const std::string &instance, const KeyValues &params,
                const std::string &point_path, double eps, std::ostream &out, std::ostream &err);
int cmd_list(std::ostream &out);

/// Entry point of the command-line tool.
int run_cli(int argc, char **argv, std::ostream &out, std::ostream &err);

} // namespace compopt
