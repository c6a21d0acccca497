#pragma once

// Experiment drivers behind the command-line subcommands. Each returns CSV
// tables plus summary lines; nothing here touches the filesystem.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include "gravinst/config.hpp"
#include "gravinst/csv.hpp"
#include "gravinst/energy.hpp"
#include "gravinst/growing_mode.hpp"
#include "gravinst/linear_dynamics.hpp"
#include "gravinst/nonlinear_dynamics.hpp"
#include "gravinst/random.hpp"

namespace gravinst {

struct RunContext {
  GridPtr grid;
  SteadyState ss;
  EigenPencil pen;
  EigenPair pair;
};

inline RunContext make_context(const GridPtr& grid) {
  SteadyState ss = build_steady_state(grid);
  EigenPencil pen = assemble_pencil(ss);
  EigenPair pair = largest_eigenpair(pen, ss);
  return RunContext{grid, std::move(ss), std::move(pen), std::move(pair)};
}

inline RunContext make_context(const ExperimentConfig& cfg) { return make_context(cfg.make_grid_ptr()); }

struct Output {
  std::string name;  // file name inside the output directory
  CsvTable table;
};

struct RunReport {
  std::vector<Output> outputs;
  std::vector<std::string> summary;
};

inline std::string kv(const std::string& key, double value) { return key + "=" + format_double(value); }

inline std::string format_short(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%g", x);
  return buf;
}

inline RunReport run_eigen(const RunContext& ctx, const ExperimentConfig& cfg) {
  const RadialGrid& g = *ctx.grid;
  const EigenPair& ep = ctx.pair;
  RunReport rep;

  CsvTable eig;
  eig.preamble = {kv("mu0", ep.mu0) + "," + kv("sqrt_mu0", ep.omega()) + "," + kv("R_max", g.r_max()) + "," +
                  "N=" + std::to_string(g.size())};
  eig.header = {"r", "psi0", "phi0"};
  for (std::size_t i = 0; i < g.size(); ++i) eig.rows.push_back({g.r(i), ep.psi0[i], ep.phi0[i]});
  rep.outputs.push_back({"eigen.csv", eig});

  CsvTable mom;
  mom.header = {"n", "M", "D", "M_tail_fraction", "D_tail_fraction"};
  for (const auto& m : moment_table(ep.psi0, 8)) mom.rows.push_back({double(m.n), m.M, m.D, m.M_tail, m.D_tail});
  rep.outputs.push_back({"moments.csv", mom});

  CsvTable wb;
  wb.header = {"l", "mu_l", "sqrt_mu_l"};
  for (double l : cfg.weighted_ls) {
    const double mu = weighted_growth_bound(ctx.pen, ctx.ss, l, cfg.beta);
    wb.rows.push_back({l, mu, std::sqrt(std::max(mu, 0.0))});
  }
  rep.outputs.push_back({"weighted_bounds.csv", wb});

  const auto fit = origin_slope(ep.psi0);
  bool nodeless = true;
  for (std::size_t i = 1; i + 1 < g.size(); ++i) nodeless = nodeless && ep.psi0[i] > 0.0;
  rep.summary = {kv("mu0", ep.mu0), kv("sqrt_mu0", ep.omega()), kv("lower_bound_pi_over_24", kPi / 24.0),
                 std::string("mu0_above_lower_bound=") + (ep.mu0 >= kPi / 24.0 ? "yes" : "no"),
                 kv("residual", ep.residual_norm),
                 kv("origin_slope", fit.slope), kv("origin_curvature", fit.curvature),
                 std::string("nodeless=") + (nodeless ? "yes" : "no"),
                 kv("psi0_tail_fraction", std::abs(ep.psi0[g.size() - 2]) / ep.psi0.max_abs())};
  return rep;
}

inline double wave_dt(const RunContext& ctx, const ExperimentConfig& cfg) {
  if (cfg.dt_policy == "auto") return default_wave_dt(ctx.pen);
  return detail::parse_double("dt_policy", cfg.dt_policy);
}

inline CsvTable wave_table(const WaveTrajectory& tr, const WeightFamily& fam) {
  CsvTable t;
  t.header = {"t", "norm_psi_W0", "norm_psit_W0", "P_psi", "energy"};
  for (double l : fam.ls) t.header.push_back("norm_psi_" + weight_id(l));
  for (double l : fam.ls) t.header.push_back("norm_psit_" + weight_id(l));
  for (const auto& s : tr.samples) {
    std::vector<double> row = {s.t, s.norm_psi, s.norm_psit, s.p_psi, s.energy};
    row.insert(row.end(), s.norm_psi_wl.begin(), s.norm_psi_wl.end());
    row.insert(row.end(), s.norm_psit_wl.begin(), s.norm_psit_wl.end());
    t.rows.push_back(std::move(row));
  }
  return t;
}

inline RunReport run_linear(const RunContext& ctx, const ExperimentConfig& cfg) {
  const double dt = wave_dt(ctx, cfg);
  const auto stride = static_cast<std::size_t>(std::max(1.0, std::round(cfg.sample_dt / dt)));
  const auto fam = make_weight_family(ctx.ss, cfg.weighted_ls);
  const double w = ctx.pair.omega();
  RunReport rep;

  const LinearState eig{0.0, ctx.pair.psi0, w * ctx.pair.psi0, ctx.pair.phi0};
  const auto te = evolve_wave(ctx.pen, fam, eig, cfg.linear_t, dt, stride);
  const auto re = measured_growth_rate(te);
  auto t1 = wave_table(te, fam);
  t1.footer = {kv("sqrt_mu0", w), kv("fitted_rate", re.rate), kv("dt", te.dt)};
  rep.outputs.push_back({"linear_eigen.csv", t1});

  Rng rng(cfg.seed);
  const LinearState rnd{0.0, random_smooth_field(ctx.grid, rng), random_smooth_field(ctx.grid, rng),
                        GridFunction(ctx.grid)};
  const auto tr = evolve_wave(ctx.pen, fam, rnd, cfg.linear_t, dt, stride);
  const auto rr = measured_growth_rate(tr);
  auto t2 = wave_table(tr, fam);
  t2.footer = {kv("sqrt_mu0", w), kv("fitted_rate", rr.rate), kv("dt", tr.dt), "seed=" + std::to_string(cfg.seed)};
  for (std::size_t k = 0; k < fam.ls.size(); ++k) {
    t2.footer.push_back(kv("fitted_rate_" + weight_id(fam.ls[k]), measured_weighted_rate(tr, k).rate));
  }
  rep.outputs.push_back({"linear_random.csv", t2});

  rep.summary = {kv("sqrt_mu0", w), kv("dt", dt), kv("eigen_rate", re.rate), kv("random_rate", rr.rate)};
  return rep;
}

inline RunReport run_nonlinear(const RunContext& ctx, const ExperimentConfig& cfg) {
  const SteadyState& ss = ctx.ss;
  NonlinearOperator op(ss, {true, cfg.filter});
  const FluidState init = seed_initial_data(ctx.pair, cfg.delta, ss);
  EvolveConfig ec{cfg.t_max, cfg.cfl, cfg.sample_dt};

  DerivativeHistory hist(cfg.sample_dt);
  CsvTable energy, total;
  energy.header = {"t"};
  for (double l : cfg.l_grid) {
    for (int j = 0; j <= 3; ++j) energy.header.push_back("E_l" + format_short(l) + "_j" + std::to_string(j));
  }
  for (const char* c : {"physE", "sigma_rel", "sigma_t_rel", "grad_sigma", "u_rel", "u_t_rel", "grad_u"}) {
    energy.header.push_back(c);
  }
  total.header = {"t", "l", "j", "E", "Etilde", "dlnE_dt"};
  std::vector<double> prev_sum(cfg.l_grid.size(), -1.0);
  double prev_t = 0.0;
  std::size_t next = 0;
  auto obs = [&](const FluidState& st, const FluidRates& rt) {
    const double t_next = init.t + cfg.sample_dt * static_cast<double>(next);
    if (st.t != t_next) return true;
    ++next;
    hist.push(st, rt);
    if (hist.size() < 4) return true;
    std::vector<double> row = {st.t};
    for (std::size_t k = 0; k < cfg.l_grid.size(); ++k) {
      const double l = cfg.l_grid[k];
      const auto e = instant_energy(hist, ss, l, 3);
      const auto tab = total_energy(hist, ss, l, 3);
      row.insert(row.end(), e.begin(), e.end());
      double sum = 0.0;
      for (double x : e) sum += x;
      const double rate = prev_sum[k] > 0.0 ? std::log(sum / prev_sum[k]) / (st.t - prev_t) : std::nan("");
      for (int j = 0; j <= 3; ++j) {
        double tilde = 0.0;
        for (double x : tab[j]) tilde += x;
        total.rows.push_back({st.t, l, double(j), e[j], tilde, rate});
      }
      prev_sum[k] = sum;
    }
    prev_t = st.t;
    row.push_back(physical_energy(st, ss));
    const auto sup = smallness_monitor(st, rt, ss).as_vector();
    row.insert(row.end(), sup.begin(), sup.end());
    energy.rows.push_back(std::move(row));
    return true;
  };
  const auto res = evolve(init, op, ec, obs);

  CsvTable traj;
  traj.header = {"t", "sqrtE00", "guard_min_ratio", "guard_max_ratio", "mass_defect", "phi_r_at_Rmax"};
  for (const auto& s : res.samples) {
    traj.rows.push_back({s.t, s.sqrtE00, s.guard_min_ratio, s.guard_max_ratio, s.mass_defect, s.phi_r_at_Rmax});
  }
  traj.footer = {kv("delta", cfg.delta), kv("sqrt_mu0", ctx.pair.omega()),
                 std::string("guard_tripped=") + (res.guard_tripped ? "yes" : "no"),
                 "steps=" + std::to_string(res.steps)};
  RunReport rep;
  rep.outputs.push_back({"nonlinear.csv", traj});
  rep.outputs.push_back({"energy.csv", energy});
  rep.outputs.push_back({"energy_total.csv", total});
  rep.summary = {kv("delta", cfg.delta), kv("t_end", res.final.t),
                 std::string("guard_tripped=") + (res.guard_tripped ? "yes" : "no"),
                 "steps=" + std::to_string(res.steps)};
  return rep;
}

/// Least-squares line y = a + b x with the standard error of b.
struct LineFit {
  double intercept = 0.0;
  double slope = 0.0;
  double slope_stderr = 0.0;
};

inline LineFit fit_line(const std::vector<double>& x, const std::vector<double>& y) {
  const std::size_t n = x.size();
  if (n < 2 || y.size() != n) throw DegenerateInput("line fit needs at least two points");
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < n; ++i) mx += x[i], my += y[i];
  mx /= double(n);
  my /= double(n);
  double sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < n; ++i) sxx += (x[i] - mx) * (x[i] - mx), sxy += (x[i] - mx) * (y[i] - my);
  if (!(sxx > 0.0)) throw DegenerateInput("line fit needs distinct abscissae");
  LineFit f;
  f.slope = sxy / sxx;
  f.intercept = my - f.slope * mx;
  if (n > 2) {
    double ssr = 0;
    for (std::size_t i = 0; i < n; ++i) {
      const double e = y[i] - f.intercept - f.slope * x[i];
      ssr += e * e;
    }
    f.slope_stderr = std::sqrt(ssr / double(n - 2) / sxx);
  }
  return f;
}

/// GRAVINST_THREADS, else the hardware concurrency.
inline unsigned worker_threads() {
  if (const char* env = std::getenv("GRAVINST_THREADS")) {
    const int k = std::atoi(env);
    if (k > 0) return static_cast<unsigned>(k);
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

struct EscapeScan {
  std::vector<EscapeResult> results;  // in the order of cfg.deltas
  LineFit fit;                         // T against ln(1/delta)
  std::size_t fitted_points = 0;
};

/// Each delta is an independent job, so the outcome does not depend on the thread count.
inline EscapeScan escape_scan(const RunContext& ctx, const ExperimentConfig& cfg, unsigned threads) {
  EscapeScan scan;
  scan.results.resize(cfg.deltas.size());
  const EvolveConfig base{cfg.t_max, cfg.cfl, cfg.sample_dt};
  const NonlinearOptions opts{true, cfg.filter};
  std::size_t next = 0;
  std::mutex mtx;
  std::exception_ptr failure;
  auto worker = [&] {
    for (;;) {
      std::size_t k;
      {
        std::lock_guard lock(mtx);
        if (next >= cfg.deltas.size() || failure) return;
        k = next++;
      }
      try {
        scan.results[k] = escape_time(ctx.pair, ctx.ss, cfg.deltas[k], cfg.theta, cfg.t_max, base, opts);
      } catch (...) {
        std::lock_guard lock(mtx);
        failure = std::current_exception();
      }
    }
  };
  threads = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(cfg.deltas.size())));
  std::vector<std::thread> pool;
  for (unsigned k = 0; k < threads; ++k) pool.emplace_back(worker);
  for (auto& th : pool) th.join();
  if (failure) std::rethrow_exception(failure);

  std::vector<double> x, y;
  for (const auto& r : scan.results) {
    if (r.T_escape && !r.guard_tripped) {
      x.push_back(std::log(1.0 / r.delta));
      y.push_back(*r.T_escape);
    }
  }
  scan.fitted_points = x.size();
  if (x.size() >= 2) scan.fit = fit_line(x, y);
  return scan;
}

inline CsvTable escape_table(const EscapeScan& scan, const RunContext& ctx) {
  CsvTable t;
  t.header = {"delta", "ln_inv_delta", "T_escape", "escaped", "guard_tripped", "max_sqrtE00", "max_mass_defect"};
  for (const auto& r : scan.results) {
    t.rows.push_back({r.delta, std::log(1.0 / r.delta), r.T_escape.value_or(std::nan("")), r.T_escape ? 1.0 : 0.0,
                      r.guard_tripped ? 1.0 : 0.0, r.max_sqrtE00, r.max_mass_defect});
  }
  const double target = 1.0 / ctx.pair.omega();
  t.footer = {kv("R_max", ctx.grid->r_max()) + ",N=" + std::to_string(ctx.grid->size()),
              kv("slope", scan.fit.slope), kv("stderr", scan.fit.slope_stderr), kv("mu0", ctx.pair.mu0),
              kv("intercept", scan.fit.intercept), kv("inverse_sqrt_mu0", target),
              kv("slope_relative_error", scan.fit.slope / target - 1.0),
              "fitted_points=" + std::to_string(scan.fitted_points)};
  return t;
}

/// Scan at R_max and again on the grid extended to 2 R_max.
inline RunReport run_escape_scan(const RunContext& ctx, const ExperimentConfig& cfg, unsigned threads) {
  RunReport rep;
  const auto a = escape_scan(ctx, cfg, threads);
  rep.outputs.push_back({"escape_scan.csv", escape_table(a, ctx)});

  const RunContext wide = make_context(extended(*ctx.grid, 2.0 * ctx.grid->r_max()));
  const auto b = escape_scan(wide, cfg, threads);
  rep.outputs.push_back({"escape_scan_2R.csv", escape_table(b, wide)});

  std::size_t guard_events = 0;
  for (const auto* scan : {&a, &b}) {
    for (const auto& r : scan->results) guard_events += r.guard_tripped ? 1 : 0;
  }
  rep.summary = {"guard_events=" + std::to_string(guard_events), kv("slope", a.fit.slope),
                 kv("slope_stderr", a.fit.slope_stderr),
                 kv("inverse_sqrt_mu0", 1.0 / ctx.pair.omega()), kv("slope_2R", b.fit.slope),
                 kv("slope_stderr_2R", b.fit.slope_stderr)};
  return rep;
}

}  // namespace gravinst
