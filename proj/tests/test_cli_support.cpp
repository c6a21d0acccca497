#include <catch_amalgamated.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "gravinst/config.hpp"
#include "gravinst/csv.hpp"
#include "gravinst/experiments.hpp"

using namespace gravinst;
using Catch::Approx;
namespace fs = std::filesystem;

TEST_CASE("config defaults and parsing") {
  const auto d = parse_config_string("");
  CHECK(d.r_max == 100.0);
  CHECK(d.n == 2001);
  CHECK(d.deltas.size() == 5);
  CHECK(d.theta == 1e-2);

  const auto c = parse_config_string(
      "# comment line\n"
      "r_max = 50   # trailing comment\n"
      "n=401\n"
      "stretch = sinh:2.5\n"
      "deltas = 1e-2, 1e-3\n"
      "seed = 99\n");
  CHECK(c.r_max == 50.0);
  CHECK(c.n == 401);
  CHECK(c.stretch_descriptor().kind == Stretch::Kind::sinh);
  CHECK(c.stretch_descriptor().scale == 2.5);
  CHECK(c.deltas == std::vector<double>{1e-2, 1e-3});
  CHECK(c.seed == 99);
}

TEST_CASE("config errors") {
  CHECK_THROWS_AS(parse_config_string("bogus = 1"), InvalidArgument);
  CHECK_THROWS_AS(parse_config_string("r_max"), InvalidArgument);
  CHECK_THROWS_AS(parse_config_string("r_max = abc"), InvalidArgument);
  CHECK_THROWS_AS(parse_config_string("r_max = -5"), InvalidArgument);
  CHECK_THROWS_AS(parse_config_string("n = 4"), InvalidArgument);
  CHECK_THROWS_AS(parse_config_string("deltas = 1e-3, 1e-2"), InvalidArgument);
  CHECK_THROWS_AS(parse_config_string("deltas = 1e-3, 1e-3"), InvalidArgument);
  CHECK_THROWS_AS(parse_config_string("deltas = 2e-2, 1e-3"), InvalidArgument);
  CHECK_THROWS_AS(parse_config_string("cfl = 0.95"), InvalidArgument);
  CHECK_THROWS_AS(parse_config_string("stretch = spiral"), InvalidArgument);
  CHECK_THROWS_AS(parse_config_string("l_grid = 0.5"), InvalidArgument);
  CHECK_THROWS_AS(parse_config_string("dt_policy = fast"), InvalidArgument);
  CHECK_THROWS_AS(load_config("/nonexistent/config.txt"), InvalidArgument);
}

TEST_CASE("csv formatting") {
  CHECK(format_double(0.1) == "0.10000000000000001");
  CHECK(format_double(1.0) == "1");

  CsvTable empty;
  empty.header = {"a", "b"};
  CHECK(to_csv_string(empty) == "a,b\n");

  CsvTable t;
  t.preamble = {"mu0=1"};
  t.header = {"x", "y"};
  t.rows = {{1.0, 2.5}, {3.0, -0.25}};
  t.footer = {"slope=2"};
  CHECK(to_csv_string(t) == "# mu0=1\nx,y\n1,2.5\n3,-0.25\n# slope=2\n");

  t.rows.push_back({1.0});
  CHECK_THROWS_AS(to_csv_string(t), InvalidArgument);
}

TEST_CASE("csv files") {
  const fs::path dir = fs::temp_directory_path() / "gravinst_csv_test";
  fs::remove_all(dir);
  CsvTable t;
  t.header = {"x"};
  t.rows = {{1.0}};
  emit_csv(t, dir / "nested" / "t.csv");
  std::ifstream f(dir / "nested" / "t.csv", std::ios::binary);
  std::stringstream ss;
  ss << f.rdbuf();
  CHECK(ss.str() == "x\n1\n");
  CHECK_THROWS_AS(emit_csv(t, "/proc/gravinst/forbidden.csv"), IoError);
  fs::remove_all(dir);
}

TEST_CASE("line fit") {
  const auto f = fit_line({0, 1, 2, 3}, {1, 3, 5, 7});
  CHECK(f.slope == Approx(2.0));
  CHECK(f.intercept == Approx(1.0));
  CHECK(f.slope_stderr == Approx(0.0).margin(1e-12));
  CHECK_THROWS_AS(fit_line({1}, {1}), DegenerateInput);
  CHECK_THROWS_AS(fit_line({1, 1}, {1, 2}), DegenerateInput);
}

TEST_CASE("eigen output contract") {
  ExperimentConfig cfg;
  cfg.n = 401;
  const auto ctx = make_context(cfg);
  const auto rep = run_eigen(ctx, cfg);
  REQUIRE(rep.outputs.front().name == "eigen.csv");
  const auto& t = rep.outputs.front().table;
  CHECK(t.header == std::vector<std::string>{"r", "psi0", "phi0"});
  CHECK(t.rows.size() == 401);
  CHECK(t.preamble.front().rfind("mu0=", 0) == 0);
  CHECK(ctx.pair.mu0 >= 0.1309);
}

TEST_CASE("escape scan does not depend on the thread count") {
  ExperimentConfig cfg;
  cfg.n = 201;
  cfg.deltas = {1e-2, 3e-3, 1e-3};
  const auto ctx = make_context(cfg);
  const auto a = escape_scan(ctx, cfg, 1);
  const auto b = escape_scan(ctx, cfg, 3);
  REQUIRE(a.results.size() == 3);
  for (std::size_t k = 0; k < 3; ++k) {
    REQUIRE(a.results[k].T_escape);
    CHECK(*a.results[k].T_escape == *b.results[k].T_escape);
  }
  const auto table = to_csv_string(escape_table(a, ctx));
  CHECK(table.find("# slope=") != std::string::npos);
  CHECK(table.find("# stderr=") != std::string::npos);
  CHECK(table.find("# mu0=") != std::string::npos);
  CHECK(table == to_csv_string(escape_table(b, ctx)));
}

TEST_CASE("thread count from the environment") {
  ::setenv("GRAVINST_THREADS", "3", 1);
  CHECK(worker_threads() == 3);
  ::setenv("GRAVINST_THREADS", "zero", 1);
  CHECK(worker_threads() >= 1);
  ::unsetenv("GRAVINST_THREADS");
}
