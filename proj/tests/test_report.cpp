#include "compopt/problems.hpp"
#include "compopt/report.hpp"

#include <doctest.h>

#include <sstream>

using namespace compopt;

TEST_CASE("numbers round-trip through their text form") {
  for (double v : {0.0, -0.0, 1.0 / 3.0, 1e-300, -2.5e17, kInf, -kInf}) {
    const double back = parse_number(format_number(v));
    CHECK(format_number(back) == format_number(v));
  }
  CHECK(std::isnan(parse_number(format_number(std::nan("")))));
  CHECK_THROWS_AS(parse_number("1.5x"), InvalidInput);
  CHECK_THROWS_AS(parse_number(""), InvalidInput);
}

TEST_CASE("iteration CSV round-trips a bundle run") {
  const auto inst = build_instance("quartic");
  const auto res = bundle_run(inst.problem, BundleConfig{}, inst.x0);
  const auto rows = bundle_rows(inst.problem, res);
  REQUIRE(rows.size() == res.log.size());
  std::stringstream ss;
  write_iteration_csv(ss, rows);
  const auto back = read_iteration_csv(ss);
  CHECK(back == rows);
  CHECK_FALSE(back.front().e.has_value());
  CHECK(back.front().model_size.has_value());
}

TEST_CASE("iteration CSV round-trips a DC run") {
  const auto inst = build_instance("distpen2");
  DcConfig c;
  const auto res = dc_run(inst.problem, c, inst.x0);
  const auto rows = dc_rows(inst.problem, res, c);
  std::stringstream ss;
  write_iteration_csv(ss, rows);
  CHECK(read_iteration_csv(ss) == rows);
  CHECK(rows.back().step_kind == "stop");
}

TEST_CASE("malformed tables are rejected") {
  std::stringstream bad_header("k,step\n");
  CHECK_THROWS_AS(read_iteration_csv(bad_header), InvalidInput);
  std::stringstream short_row("k,step_kind,v_k,e_k,t_k,step_norm,objective,model_size,residual_total\n1,null\n");
  CHECK_THROWS_AS(read_iteration_csv(short_row), InvalidInput);
}

TEST_CASE("outer CSV has one line per outer iteration") {
  const auto inst = build_instance("hingeconvex");
  Schedule s;
  s.length = 3;
  const auto r = run_outer(*inst.family, s, InnerSolver::Bundle, inst.x0);
  std::stringstream ss;
  write_outer_csv(ss, r);
  int lines = 0;
  for (std::string l; std::getline(ss, l);) ++lines;
  CHECK(lines == 4);
}
