#pragma once

// The acceptance suite. Each criterion returns pass/fail with a detail line;
// the detail text carries no timings so that repeated runs compare equal.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "gravinst/experiments.hpp"

namespace gravinst {

struct CriterionResult {
  int id = 0;
  std::string name;
  bool pass = false;
  std::string detail;
  double seconds = 0.0;  // wall clock, kept out of the report text
  double time_limit = 0.0;
};

/// Largest lhs/rhs of the GN inequality over the dense (c, w, s) lattice,
/// computed independently with adaptive quadrature.
inline constexpr double kGnOracleBound = 0.4383994683291219;

namespace checks {

inline std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

inline double rel(double a, double b) { return std::abs(a / b - 1.0); }

inline CriterionResult trial_function_anchor() {
  CriterionResult c{1, "trial-function anchor", false, {}};
  auto g = make_grid(200.0, 4000);
  auto ss = build_steady_state(g);
  const auto psi = GridFunction::sample(g, [](double r) { return std::sqrt(r); });
  const auto qi = rayleigh_quotient(psi, ss);
  const double mu0 = principal_eigen(assemble_pencil(ss), psi.values()).mu;
  const double eq = rel(qi.Q, 5.0 / 48.0), ei = rel(qi.I, 5.0 / (2.0 * kPi));
  c.pass = eq <= 1e-3 && ei <= 1e-3 && qi.Q > 0.0 && mu0 >= qi.ratio() && mu0 >= kPi / 24.0 * (1.0 - 1e-3);
  c.detail = fmt("Q=%.8f (rel err %.2e) I=%.8f (rel err %.2e) Q/I=%.6f mu0=%.6f", qi.Q, eq, qi.I, ei, qi.ratio(), mu0);
  c.time_limit = 5.0;
  return c;
}

inline CriterionResult eigen_convergence() {
  CriterionResult c{2, "eigensolve convergence", false, {}};
  double mu[3];
  std::optional<EigenPair> mid_pair;
  GridPtr mid_grid;
  const std::size_t ns[3] = {1001, 2001, 4001};
  double worst_residual = 0.0;
  for (int k = 0; k < 3; ++k) {
    auto g = make_grid(100.0, ns[k]);
    auto ss = build_steady_state(g);
    auto ep = largest_eigenpair(ss);
    mu[k] = ep.mu0;
    worst_residual = std::max(worst_residual, ep.residual_norm);
    if (k == 1) mid_pair = std::move(ep), mid_grid = g;
  }
  const double order = std::log2((mu[0] - mu[1]) / (mu[1] - mu[2]));
  const double n_change = rel(mu[1], mu[2]);
  auto wide = extended(*mid_grid, 200.0);
  const double mu_wide = largest_eigenpair(build_steady_state(wide)).mu0;
  const double r_change = rel(mu_wide, mu[1]);

  const RadialGrid& g = *mid_grid;
  const EigenPair& mid = *mid_pair;
  bool nodeless = true;
  for (std::size_t i = 1; i + 1 < g.size(); ++i) nodeless = nodeless && mid.psi0[i] > 0.0;
  const auto fit = origin_slope(mid.psi0);
  double worst = 0.0;
  for (std::size_t i = fit.first; i <= fit.last; ++i) {
    const double r = g.r(i);
    worst = std::max(worst, std::abs(mid.psi0[i] / r - fit.slope) / (r * r));
  }
  const double C = 2.0 * std::abs(fit.curvature);
  // Frobenius recurrence at the origin: 10 c + 2 a = (15/4pi) mu0 a.
  const double frob = (15.0 * mid.mu0 / (4.0 * kPi) - 2.0) / 10.0;
  const double frob_err = rel(fit.curvature / fit.slope, frob);
  c.pass = order >= 1.7 && order <= 2.3 && n_change <= 5e-5 && r_change <= 1e-4 && worst_residual <= 1e-8 &&
           nodeless && worst <= C && frob_err <= 1e-2;
  c.detail = fmt("mu0=%.8f,%.8f,%.8f order=%.3f N-change=%.2e R-change=%.2e residual=%.1e nodeless=%s "
                 "a=%.6f max|psi/r-a|/r^2=%.4f C=%.4f on r in [%.4f, %.4f] c/a=%.5f vs series %.5f",
                 mu[0], mu[1], mu[2], order, n_change, r_change, worst_residual, nodeless ? "yes" : "no", fit.slope, worst, C,
                 g.r(fit.first), g.r(fit.last), fit.curvature / fit.slope, frob);
  c.time_limit = 30.0;
  return c;
}

inline CriterionResult hydrostatic_balance(const RunContext& ctx) {
  CriterionResult c{3, "hydrostatic balance", false, {}};
  auto g = make_grid(100.0, 1001);
  std::vector<double> res;
  for (int k = 0; k < 3; ++k) {
    res.push_back(discrete_hydrostatic_residual(build_steady_state(g)).max_abs());
    g = refined(*g);
  }
  const double f1 = res[0] / res[1], f2 = res[1] / res[2];

  NonlinearOperator op(ctx.ss);
  const FluidState rest{0.0, GridFunction(ctx.grid), GridFunction(ctx.grid)};
  const auto run = evolve(rest, op, {10.0, 0.9, 1.0});
  const double drift = std::max(run.final.sigma.max_abs(), run.final.u.max_abs());
  c.pass = f1 >= 3.5 && f2 >= 3.5 && drift <= 1e-10 && !run.guard_tripped && run.final.t == 10.0;
  c.detail = fmt("residual %.3e, %.3e, %.3e (factors %.3f, %.3f) max|sigma|,|u| at t=%.1f: %.2e", res[0], res[1],
                 res[2], f1, f2, run.final.t, drift);
  return c;
}

inline CriterionResult sharp_linear_rate(const RunContext& ctx, const ExperimentConfig& cfg) {
  CriterionResult c{4, "sharp linear rate", false, {}};
  const double w = ctx.pair.omega();
  const double dt = wave_dt(ctx, cfg);
  const std::vector<double> ls = {-1.0, -2.0};
  const auto fam = make_weight_family(ctx.ss, ls);

  const LinearState eig{0.0, ctx.pair.psi0, w * ctx.pair.psi0, ctx.pair.phi0};
  const double eig_rate = measured_growth_rate(evolve_wave(ctx.pen, fam, eig, 8.0, dt, 10)).rate;

  std::vector<double> mul;
  for (double l : ls) mul.push_back(weighted_growth_bound(ctx.pen, ctx.ss, l, cfg.beta));

  Rng rng(cfg.seed);
  double worst = 0.0, worst_w[2] = {0.0, 0.0};
  for (int s = 0; s < 20; ++s) {
    LinearState init{0.0, random_smooth_field(ctx.grid, rng), random_smooth_field(ctx.grid, rng),
                     GridFunction(ctx.grid)};
    const auto tr = evolve_wave(ctx.pen, fam, init, 40.0, dt, 20);
    worst = std::max(worst, measured_growth_rate(tr).rate / w);
    for (std::size_t k = 0; k < 2; ++k) worst_w[k] = std::max(worst_w[k], measured_weighted_rate(tr, k).rate / w);
  }
  const double e = rel(eig_rate, w);
  c.pass = e <= 0.01 && worst <= 1.01 && worst_w[0] <= 1.01 && worst_w[1] <= 1.01 && mul[0] < ctx.pair.mu0 &&
           mul[1] < ctx.pair.mu0;
  c.detail = fmt("eigen rate %.6f vs sqrt(mu0) %.6f (rel %.1e); worst random rate/sqrt(mu0): W0 %.5f, W-1 %.5f, "
                 "W-2 %.5f; mu_-1=%.7f mu_-2=%.7f mu0=%.7f",
                 eig_rate, w, e, worst, worst_w[0], worst_w[1], mul[0], mul[1], ctx.pair.mu0);
  c.time_limit = 120.0;
  return c;
}

inline CriterionResult escape_law(const RunContext& ctx, const ExperimentConfig& cfg) {
  CriterionResult c{5, "escape-time law", false, {}};
  ExperimentConfig sc = cfg;
  sc.deltas = {1e-2, 3e-3, 1e-3, 3e-4, 1e-4};
  sc.theta = 1e-2;
  const auto scan = escape_scan(ctx, sc, worker_threads());
  bool all = true, tripped = false;
  double mass = 0.0;
  std::string ts;
  for (const auto& r : scan.results) {
    all = all && r.T_escape.has_value();
    tripped = tripped || r.guard_tripped;
    mass = std::max(mass, r.max_mass_defect);
    ts += fmt(" %.4f", r.T_escape.value_or(std::nan("")));
  }
  const double target = 1.0 / ctx.pair.omega();
  const double e = rel(scan.fit.slope, target);
  c.pass = all && !tripped && scan.fitted_points == sc.deltas.size() && e <= 0.10 && mass <= 1e-12;
  c.detail = fmt("T_escape:%s slope=%.5f+-%.5f vs 1/sqrt(mu0)=%.5f (rel %.2e) guard tripped=%s max mass defect=%.1e",
                 ts.c_str(), scan.fit.slope, scan.fit.slope_stderr, target, e, tripped ? "yes" : "no", mass);
  c.time_limit = 600.0;
  return c;
}

inline CriterionResult linear_nonlinear_consistency(const RunContext& ctx, const ExperimentConfig& cfg) {
  CriterionResult c{6, "linear/nonlinear consistency", false, {}};
  const double delta = 1e-5, T = 3.0, stride_t = 0.05;
  const FluidState init = seed_initial_data(ctx.pair, delta, ctx.ss);
  NonlinearOperator op(ctx.ss, {true, cfg.filter});
  const auto run = evolve(init, op, {T, cfg.cfl, stride_t});

  const auto m = static_cast<std::size_t>(std::ceil(stride_t / first_order_dt(*ctx.grid, 0.5)));
  const LinearState lin{0.0, init.u, GridFunction(ctx.grid), init.sigma};
  const auto lr = evolve_first_order(lin, ctx.ss, T, stride_t / static_cast<double>(m), m);

  double worst = 0.0;
  std::size_t matched = 0;
  std::vector<double> t, lnE;
  for (const auto& s : run.samples) {
    for (std::size_t k = 0; k < lr.t.size(); ++k) {
      if (std::abs(lr.t[k] - s.t) < 1e-9) {
        worst = std::max(worst, rel(s.sqrtE00, lr.sqrtE[k]));
        ++matched;
      }
    }
    t.push_back(s.t);
    lnE.push_back(2.0 * std::log(s.sqrtE00));
  }
  const double rate = fit_line(t, lnE).slope;
  const double e = rel(rate, 2.0 * ctx.pair.omega());
  c.pass = !run.guard_tripped && matched == run.samples.size() && matched > 10 && worst <= 0.02 && e <= 0.02;
  c.detail = fmt("max rel gap nonlinear vs linear sqrtE over %zu samples: %.2e; d/dt ln E = %.6f vs 2 sqrt(mu0) = "
                 "%.6f (rel %.2e)",
                 matched, worst, rate, 2.0 * ctx.pair.omega(), e);
  return c;
}

inline CriterionResult energy_bookkeeping(const RunContext& ctx, const ExperimentConfig& cfg) {
  CriterionResult c{7, "energy bookkeeping", false, {}};
  const SteadyState& ss = ctx.ss;
  const FluidState rest{0.0, GridFunction(ctx.grid), GridFunction(ctx.grid)};
  const double e_rest = physical_energy(rest, ss);
  const double e_err = rel(e_rest, kPi * kPi * kPi / 9.0);

  const double stride = 0.05;
  const FluidState init = seed_initial_data(ctx.pair, 1e-3, ss);
  NonlinearOperator op(ss, {true, cfg.filter});
  DerivativeHistory hist(stride);
  bool ordered = true, identical = true;
  double e0 = std::numeric_limits<double>::quiet_NaN(), drift = 0.0;
  std::size_t next = 0, checked = 0;
  auto obs = [&](const FluidState& st, const FluidRates& rt) {
    if (st.t != stride * static_cast<double>(next)) return true;
    ++next;
    const double pe = physical_energy(st, ss);
    if (std::isnan(e0)) e0 = pe;
    drift = std::max(drift, std::abs(pe - e0) / std::abs(e0));
    hist.push(st, rt);
    if (hist.size() < 4) return true;
    for (double l : cfg.l_grid) {
      const auto e = instant_energy(hist, ss, l, 3);
      const auto tab = total_energy(hist, ss, l, 3);
      double sum_e = 0.0, sum_t = 0.0;
      for (int j = 0; j <= 3; ++j) {
        identical = identical && tab[j][0] == e[j];
        sum_e += e[j];
        for (double x : tab[j]) sum_t += x;
      }
      ordered = ordered && sum_e <= sum_t;
      ++checked;
    }
    return true;
  };
  const auto run = evolve(init, op, {10.0, cfg.cfl, stride}, obs);
  c.pass = ordered && identical && checked > 0 && drift <= 1e-3 && e_err <= 1e-4;
  c.detail = fmt("E_l<=Etilde_l: %s, Etilde^{j,0}==E^j: %s (%zu checks up to t=%.2f, guard %s); physical energy "
                 "drift %.2e; physical_energy(rho0,0)=%.7f vs pi^3/9 (rel %.1e)",
                 ordered ? "yes" : "no", identical ? "yes" : "no", checked, run.final.t,
                 run.guard_tripped ? "reached" : "not reached", drift, e_rest, e_err);
  return c;
}

inline CriterionResult moment_bounds(const RunContext& ctx) {
  CriterionResult c{8, "moment bounds", false, {}};
  const auto a = moment_table(ctx.pair.psi0, 6);
  auto wide = extended(*ctx.grid, 2.0 * ctx.grid->r_max());
  const auto b = moment_table(largest_eigenpair(build_steady_state(wide)).psi0, 6);
  double worst = 0.0;
  bool finite = true;
  for (std::size_t n = 0; n < a.size(); ++n) {
    finite = finite && std::isfinite(a[n].M) && std::isfinite(a[n].D) && std::isfinite(b[n].M) && std::isfinite(b[n].D);
    worst = std::max({worst, rel(b[n].M, a[n].M), rel(b[n].D, a[n].D)});
  }
  c.pass = finite && worst <= 0.01;
  c.detail = fmt("n<=6: finite=%s, max relative change on R_max doubling %.2e (M_6=%.5g, D_6=%.5g)",
                 finite ? "yes" : "no", worst, a.back().M, a.back().D);
  return c;
}

inline CriterionResult gn_suite(const ExperimentConfig& cfg) {
  CriterionResult c{9, "GN property suite", false, {}};
  auto g = make_grid(100.0, 4001);
  Rng rng(cfg.seed);
  double worst = 0.0, homog = 0.0;
  for (int k = 0; k < 100; ++k) {
    const double cen = rng.uniform(0.0, 6.0), w = rng.uniform(0.5, 3.0), s = rng.uniform(-0.5, 0.5);
    const auto f = GridFunction::sample(g, [&](double r) {
      const double z = (r - cen) / w;
      return (1.0 + s * r) * std::exp(-z * z);
    });
    const double ratio = gn_check(f, 0.0, 0.0, 0.0).ratio;
    worst = std::max(worst, ratio);
    homog = std::max(homog, rel(gn_check(2.0 * f, 0.0, 0.0, 0.0).ratio, ratio));
  }
  const auto zero = gn_check(GridFunction(g), 0.0, 0.0, 0.0);
  const bool zero_ok = zero.lhs == 0.0 && zero.rhs == 0.0 && zero.ratio == 0.0;
  c.pass = worst <= 2.0 * kGnOracleBound && homog <= 1e-14 && zero_ok;
  c.detail = fmt("max lhs/rhs %.6f vs 2 x oracle %.6f; homogeneity deviation %.1e; f=0 gives %s", worst,
                 2.0 * kGnOracleBound, homog, zero_ok ? "0/0 -> 0" : "nonzero");
  return c;
}

}  // namespace checks

inline std::string format_result(const CriterionResult& r) {
  return std::string(r.pass ? "PASS" : "FAIL") + " [" + std::to_string(r.id) + "] " + r.name + ": " + r.detail;
}

inline std::string format_report(const std::vector<CriterionResult>& rs) {
  std::string out;
  for (const auto& r : rs) out += format_result(r) + "\n";
  return out;
}

using Progress = std::function<void(const CriterionResult&)>;

/// Criteria 1 to 9, in order.
inline std::vector<CriterionResult> run_property_checks(const ExperimentConfig& cfg, const Progress& progress = {}) {
  std::vector<CriterionResult> out;
  std::optional<RunContext> ctx;
  auto context = [&]() -> const RunContext& {
    if (!ctx) ctx.emplace(make_context(cfg));
    return *ctx;
  };
  std::vector<std::function<CriterionResult()>> jobs = {
      [] { return checks::trial_function_anchor(); },
      [] { return checks::eigen_convergence(); },
      [&] { return checks::hydrostatic_balance(context()); },
      [&] { return checks::sharp_linear_rate(context(), cfg); },
      [&] { return checks::escape_law(context(), cfg); },
      [&] { return checks::linear_nonlinear_consistency(context(), cfg); },
      [&] { return checks::energy_bookkeeping(context(), cfg); },
      [&] { return checks::moment_bounds(context()); },
      [&] { return checks::gn_suite(cfg); },
  };
  for (std::size_t k = 0; k < jobs.size(); ++k) {
    const auto t0 = std::chrono::steady_clock::now();
    CriterionResult r;
    try {
      r = jobs[k]();
    } catch (const Error& e) {
      r.id = static_cast<int>(k) + 1;
      r.name = "criterion " + std::to_string(k + 1);
      r.pass = false;
      r.detail = std::string("error: ") + e.what();
    }
    r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (r.time_limit > 0.0 && r.seconds > r.time_limit) r.pass = false;
    if (progress) progress(r);
    out.push_back(std::move(r));
  }
  return out;
}

/// Criteria 1 to 9, then criterion 10: a second pass whose report must match byte for byte.
inline std::vector<CriterionResult> run_check_suite(const ExperimentConfig& cfg, const Progress& progress = {}) {
  auto first = run_property_checks(cfg, progress);
  const auto t0 = std::chrono::steady_clock::now();
  const auto second = run_property_checks(cfg);
  CriterionResult r{10, "determinism", false, {}};
  std::size_t differing = 0;
  for (std::size_t k = 0; k < first.size(); ++k) {
    differing += (format_result(first[k]) != format_result(second[k])) ? 1 : 0;
  }
  r.pass = differing == 0 && format_report(first) == format_report(second);
  r.detail = checks::fmt("second pass over criteria 1-9 differs in %zu report lines", differing);
  r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  if (progress) progress(r);
  first.push_back(std::move(r));
  return first;
}

}  // namespace gravinst
