// gravinst_cli: eigen | linear | nonlinear | escape-scan | check
//
// Exit codes: 0 success, 1 invalid configuration or I/O, 2 numerical failure,
// 3 property-suite failure.

#include <algorithm>
#include <chrono>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "gravinst/gravinst.hpp"

namespace {

using namespace gravinst;
namespace fs = std::filesystem;

struct Overrides {
  std::string config;
  std::optional<std::string> out;
  std::optional<std::uint64_t> seed;
  std::optional<double> r_max;
  std::optional<std::size_t> n;
  std::optional<double> delta, theta, t_max, linear_t, filter, cfl;
  std::vector<double> deltas;
};

ExperimentConfig resolve(const Overrides& o) {
  ExperimentConfig c = o.config.empty() ? ExperimentConfig{} : load_config(o.config);
  if (o.out) c.out_dir = *o.out;
  if (o.seed) c.seed = *o.seed;
  if (o.r_max) c.r_max = *o.r_max;
  if (o.n) c.n = *o.n;
  if (o.delta) c.delta = *o.delta;
  if (o.theta) c.theta = *o.theta;
  if (o.t_max) c.t_max = *o.t_max;
  if (o.linear_t) c.linear_t = *o.linear_t;
  if (o.filter) c.filter = *o.filter;
  if (o.cfl) c.cfl = *o.cfl;
  if (!o.deltas.empty()) c.deltas = o.deltas;
  validate(c);
  return c;
}

class Stopwatch {
 public:
  void lap(const std::string& stage) {
    const auto now = std::chrono::steady_clock::now();
    std::cerr << "[time] " << stage << ": " << std::chrono::duration<double>(now - last_).count() << " s\n";
    last_ = now;
  }

 private:
  std::chrono::steady_clock::time_point last_ = std::chrono::steady_clock::now();
};

void publish(const RunReport& rep, const ExperimentConfig& cfg, const std::string& command) {
  const fs::path dir(cfg.out_dir);
  std::string summary = "command=" + command + "\n";
  for (const auto& out : rep.outputs) {
    emit_csv(out.table, dir / out.name);
    summary += "file=" + out.name + "\n";
  }
  for (const auto& line : rep.summary) summary += line + "\n";
  std::string stem = command;
  std::replace(stem.begin(), stem.end(), '-', '_');
  write_text(summary, dir / (stem + "_summary.txt"));
  std::cout << summary;
}

int run(const std::string& command, const Overrides& o) {
  const ExperimentConfig cfg = resolve(o);
  Stopwatch sw;
  if (command == "check") {
    const auto results = run_check_suite(cfg, [](const CriterionResult& r) {
      std::cout << format_result(r) << std::endl;
      std::cerr << "[time] criterion " << r.id << ": " << r.seconds << " s\n";
    });
    write_text(format_report(results), fs::path(cfg.out_dir) / "check_report.txt");
    bool ok = true;
    for (const auto& r : results) ok = ok && r.pass;
    std::cout << (ok ? "all criteria passed" : "property suite failed") << std::endl;
    return ok ? 0 : 3;
  }

  const RunContext ctx = make_context(cfg);
  sw.lap("eigen stage");
  RunReport rep;
  if (command == "eigen") {
    rep = run_eigen(ctx, cfg);
  } else if (command == "linear") {
    rep = run_linear(ctx, cfg);
  } else if (command == "nonlinear") {
    rep = run_nonlinear(ctx, cfg);
  } else {
    rep = run_escape_scan(ctx, cfg, worker_threads());
  }
  sw.lap(command);
  publish(rep, cfg, command);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Numerical lab for the gamma = 6/5 Euler-Poisson instability"};
  app.require_subcommand(1);
  app.fallthrough();
  Overrides o;
  app.add_option("--config", o.config, "key = value configuration file")->check(CLI::ExistingFile);
  app.add_option("--out", o.out, "output directory");
  app.add_option("--seed", o.seed, "seed for random test functions");
  app.add_option("--rmax", o.r_max, "outer radius");
  app.add_option("--n", o.n, "number of grid nodes");

  auto* eigen = app.add_subcommand("eigen", "growing mode, moments and weighted bounds");
  auto* linear = app.add_subcommand("linear", "linearized wave evolution and rate fits");
  linear->add_option("--t", o.linear_t, "run length");
  auto* nonlinear = app.add_subcommand("nonlinear", "single seeded nonlinear run with energy diagnostics");
  nonlinear->add_option("--delta", o.delta, "seed amplitude");
  nonlinear->add_option("--tmax", o.t_max, "run length");
  nonlinear->add_option("--filter", o.filter, "velocity filter coefficient");
  nonlinear->add_option("--cfl", o.cfl, "CFL number");
  auto* scan = app.add_subcommand("escape-scan", "escape times over a list of seed amplitudes");
  scan->add_option("--deltas", o.deltas, "strictly decreasing seed amplitudes")->delimiter(',');
  scan->add_option("--theta", o.theta, "escape threshold");
  scan->add_option("--tmax", o.t_max, "longest run per amplitude");
  auto* check = app.add_subcommand("check", "acceptance suite; exit 3 on any failure");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  std::string command;
  for (auto* sub : {eigen, linear, nonlinear, scan, check}) {
    if (sub->parsed()) command = sub->get_name();
  }
  try {
    return run(command, o);
  } catch (const InvalidArgument& e) {
    std::cerr << "configuration error: " << e.what() << "\n";
    return 1;
  } catch (const IoError& e) {
    std::cerr << e.what() << "\n";
    return 1;
  } catch (const Error& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return 2;
  }
}
