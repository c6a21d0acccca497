#pragma once

// Full perturbed Euler-Poisson system about rho0 in spherical symmetry:
//   sigma_t + r^{-2}(r^2 (rho0+sigma) u)_r = 0,
//   u_t + u u_r + h(rho0+sigma)_r - h(rho0)_r + phi_r(sigma) = 0,
// with enthalpy h(rho) = (4pi/3) rho^{1/5}, classical RK4 in time.

#include <algorithm>
#include <cmath>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "gravinst/gravity.hpp"
#include "gravinst/growing_mode.hpp"
#include "gravinst/linear_dynamics.hpp"
#include "gravinst/radial_grid.hpp"
#include "gravinst/steady_state.hpp"

namespace gravinst {

inline constexpr double kGuardLow = 0.9;
inline constexpr double kGuardHigh = 1.1;
inline constexpr double kEnthalpyCoef = 4.0 * kPi / 3.0;

struct FluidState {
  double t = 0.0;
  GridFunction sigma;
  GridFunction u;
};

struct FluidRates {
  GridFunction dsigma;
  GridFunction du;
};

struct NonlinearOptions {
  /// Subtract the analytic steady balance inside u_t.
  bool well_balanced = true;
  /// Fourth-difference filter strength on u, applied after each step; 0 = off.
  double filter = 0.0;
};

/// (min, max) of (rho0 + sigma) / rho0 over the grid.
inline std::pair<double, double> guard_ratios(std::span<const double> sigma, const SteadyState& ss) {
  double lo = 1e300, hi = -1e300;
  for (std::size_t i = 0; i < sigma.size(); ++i) {
    const double q = 1.0 + sigma[i] / ss.rho0[i];
    lo = std::min(lo, q);
    hi = std::max(hi, q);
  }
  return {lo, hi};
}

inline bool guard_holds(std::span<const double> sigma, const SteadyState& ss) {
  const auto [lo, hi] = guard_ratios(sigma, ss);
  return lo >= kGuardLow && hi <= kGuardHigh;
}

/// Precomputed geometry and scratch space for repeated right-hand sides.
class NonlinearOperator {
 public:
  NonlinearOperator(const SteadyState& ss, NonlinearOptions opts = {}) : ss_(&ss), opts_(opts) {
    const RadialGrid& g = ss.g();
    const std::size_t n = g.size();
    face_area_.resize(n);
    face_rho0_.resize(n);
    rho0_fifth_.resize(n);
    const auto faces = g.faces();
    for (std::size_t i = 0; i < n; ++i) {
      face_area_[i] = faces[i] * faces[i];
      face_rho0_[i] = profile::rho0(faces[i]);
      rho0_fifth_[i] = std::pow(ss.rho0[i], 0.2);
    }
    flux_.resize(n);
    dh_.resize(n);
    grad_.resize(n);
    dudr_.resize(n);
    phi_r_.resize(n);
    steady_phi_r_ = potential_gradient(ss.rho0).phi_r.vector();
  }

  const SteadyState& steady() const { return *ss_; }
  const NonlinearOptions& options() const { return opts_; }

  /// Writes (sigma_t, u_t). Throws GuardViolated when the guard fails.
  void rhs(std::span<const double> sigma, std::span<const double> u, std::span<double> dsigma,
           std::span<double> du) {
    const SteadyState& ss = *ss_;
    const RadialGrid& g = ss.g();
    const std::size_t n = g.size();
    if (!guard_holds(sigma, ss)) throw GuardViolated("density left [0.9, 1.1] rho0");

    for (std::size_t i = 0; i + 1 < n; ++i) {
      const double rho_f = face_rho0_[i] + 0.5 * (sigma[i] + sigma[i + 1]);
      flux_[i] = face_area_[i] * rho_f * 0.5 * (u[i] + u[i + 1]);
    }
    flux_[n - 1] = face_area_[n - 1] * (ss.rho0[n - 1] + sigma[n - 1]) * u[n - 1];
    flux_divergence(flux_, g, dsigma);
    for (std::size_t i = 0; i < n; ++i) dsigma[i] = -dsigma[i];

    if (opts_.well_balanced) {
      for (std::size_t i = 0; i < n; ++i) {
        dh_[i] = kEnthalpyCoef * (std::pow(ss.rho0[i] + sigma[i], 0.2) - rho0_fifth_[i]);
      }
      potential_gradient(sigma, g, phi_r_);
    } else {
      for (std::size_t i = 0; i < n; ++i) dh_[i] = kEnthalpyCoef * std::pow(ss.rho0[i] + sigma[i], 0.2);
      potential_gradient(sigma, g, phi_r_);
      for (std::size_t i = 0; i < n; ++i) phi_r_[i] += steady_phi_r_[i];
    }
    rho0_gradient(dh_, g, grad_);
    ddr(u, g, dudr_);
    for (std::size_t i = 0; i < n; ++i) du[i] = -u[i] * dudr_[i] - grad_[i] - phi_r_[i];
    du[0] = 0.0;
    du[n - 1] = 0.0;
  }

  FluidRates rhs(const FluidState& s) {
    std::vector<double> ds(s.sigma.size()), du(s.u.size());
    rhs(s.sigma.values(), s.u.values(), ds, du);
    return {GridFunction(s.sigma.grid_ptr(), std::move(ds)), GridFunction(s.u.grid_ptr(), std::move(du))};
  }

  /// dt = cfl min h_i / (|u_i| + c_i), c^2 = (4pi/15)(rho0+sigma)^{1/5}.
  double stable_dt(std::span<const double> sigma, std::span<const double> u, double cfl) const {
    const RadialGrid& g = ss_->g();
    double dt = 1e300;
    for (std::size_t i = 0; i < g.size(); ++i) {
      const double c = std::sqrt(kSoundCoef * std::pow(ss_->rho0[i] + sigma[i], 0.2));
      dt = std::min(dt, g.local_spacing(i) / (std::abs(u[i]) + c));
    }
    return cfl * dt;
  }

  void apply_filter(std::span<double> u) const {
    if (opts_.filter <= 0.0) return;
    const std::size_t n = u.size();
    std::vector<double> d(n, 0.0);
    for (std::size_t i = 2; i + 2 < n; ++i) {
      d[i] = (u[i - 2] - 4.0 * u[i - 1] + 6.0 * u[i] - 4.0 * u[i + 1] + u[i + 2]) / 16.0;
    }
    for (std::size_t i = 2; i + 2 < n; ++i) u[i] -= opts_.filter * d[i];
  }

 private:
  const SteadyState* ss_;
  NonlinearOptions opts_;
  std::vector<double> face_area_, face_rho0_, rho0_fifth_, steady_phi_r_;
  std::vector<double> flux_, dh_, grad_, dudr_, phi_r_;
};

inline FluidRates nonlinear_rhs(const FluidState& s, const SteadyState& ss, NonlinearOptions opts = {}) {
  NonlinearOperator op(ss, opts);
  return op.rhs(s);
}

/// E_0^0 = 4pi int [(rho0+sigma) u^2 + (4pi/15)(rho0+sigma)^{-4/5} sigma^2] r^2 dr.
inline double energy00(std::span<const double> sigma, std::span<const double> u, const SteadyState& ss) {
  const auto v = ss.g().volumes();
  double e = 0.0;
  for (std::size_t i = 0; i < sigma.size(); ++i) {
    const double rho = ss.rho0[i] + sigma[i];
    e += v[i] * (rho * u[i] * u[i] + kSoundCoef * std::pow(rho, -0.8) * sigma[i] * sigma[i]);
  }
  return 4.0 * kPi * e;
}

/// sigma = delta phi0 / s, u = delta psi0 / s with
/// s^2 = (16pi^2/15)(||phi0||_{V0}^2 + ||psi0||_{W0}^2), so E_0^0 ~ delta^2.
inline FluidState seed_initial_data(const EigenPair& pair, double delta, const SteadyState& ss) {
  if (!(delta >= 0.0)) throw InvalidArgument("seed amplitude must be nonnegative");
  const RadialGrid& g = ss.g();
  const auto v = g.volumes();
  double phi2 = 0.0, psi2 = 0.0;
  for (std::size_t i = 0; i < g.size(); ++i) {
    const double r = g.r(i);
    phi2 += v[i] * (1 + r * r) * (1 + r * r) * pair.phi0[i] * pair.phi0[i];
    psi2 += v[i] * 15.0 / (4.0 * kPi) * profile::rho0(r) * pair.psi0[i] * pair.psi0[i];
  }
  const double scale = delta / std::sqrt(16.0 * kPi * kPi / 15.0 * (phi2 + psi2));
  FluidState s{0.0, scale * pair.phi0, scale * pair.psi0};
  s.u[0] = 0.0;
  s.u[s.u.size() - 1] = 0.0;
  if (!guard_holds(s.sigma.values(), ss)) throw GuardViolated("seed amplitude too large for the density guard");
  return s;
}

struct TrajectorySample {
  double t = 0.0;
  double sqrtE00 = 0.0;
  double guard_min_ratio = 1.0;
  double guard_max_ratio = 1.0;
  double mass_defect = 0.0;  // change of the neutrality integral since t = 0
  double phi_r_at_Rmax = 0.0;
};

struct EvolveResult {
  FluidState final;
  std::vector<TrajectorySample> samples;
  bool guard_tripped = false;
  bool stopped_by_observer = false;
  std::size_t steps = 0;
  std::string message;
};

/// Called on every accepted step with the state and its exact time derivative.
/// Returning false ends the run.
using StepObserver = std::function<bool(const FluidState&, const FluidRates&)>;

struct EvolveConfig {
  double T_max = 10.0;
  double cfl = 0.9;
  /// Spacing of recorded samples; steps are shortened to land on them.
  double sample_dt = 0.05;
};

inline EvolveResult evolve(const FluidState& init, NonlinearOperator& op, const EvolveConfig& cfg,
                           const StepObserver& observer = {}) {
  if (!(cfg.cfl > 0.0 && cfg.cfl <= 0.9)) throw InvalidArgument("cfl must lie in (0, 0.9]");
  if (!(cfg.T_max >= 0.0) || !(cfg.sample_dt > 0.0)) throw InvalidArgument("bad time settings");
  const SteadyState& ss = op.steady();
  const RadialGrid& g = ss.g();
  const std::size_t n = g.size();
  EvolveResult res{init, {}, false, false, 0, {}};

  std::vector<double> s(init.sigma.values().begin(), init.sigma.values().end());
  std::vector<double> u(init.u.values().begin(), init.u.values().end());
  std::vector<double> ks[4], ku[4], ts(n), tu(n);
  for (int k = 0; k < 4; ++k) {
    ks[k].resize(n);
    ku[k].resize(n);
  }
  const double mass0 = integrate_volume(s, g);
  std::vector<double> phi_r(n);

  auto make_state = [&](double t) {
    return FluidState{t, GridFunction(init.sigma.grid_ptr(), s), GridFunction(init.u.grid_ptr(), u)};
  };
  auto record = [&](double t) {
    TrajectorySample smp;
    smp.t = t;
    smp.sqrtE00 = std::sqrt(energy00(s, u, ss));
    std::tie(smp.guard_min_ratio, smp.guard_max_ratio) = guard_ratios(s, ss);
    smp.mass_defect = integrate_volume(s, g) - mass0;
    potential_gradient(s, g, phi_r);
    smp.phi_r_at_Rmax = phi_r[n - 1];
    res.samples.push_back(smp);
  };

  double t = init.t;
  const double t_end = init.t + cfg.T_max;
  std::size_t next_sample = 1;
  try {
    op.rhs(s, u, ks[0], ku[0]);
  } catch (const GuardViolated& e) {
    res.guard_tripped = true;
    res.message = e.what();
    return res;
  }
  record(t);
  if (observer) {
    auto st = make_state(t);
    FluidRates rt{GridFunction(init.sigma.grid_ptr(), ks[0]), GridFunction(init.u.grid_ptr(), ku[0])};
    if (!observer(st, rt)) {
      res.stopped_by_observer = true;
      return res;
    }
  }

  try {
    while (t < t_end - 1e-12 * std::max(1.0, t_end)) {
      const double t_sample = std::min(init.t + cfg.sample_dt * static_cast<double>(next_sample), t_end);
      double dt = op.stable_dt(s, u, cfg.cfl);
      bool lands = false;
      if (t + dt >= t_sample - 1e-12 * std::max(1.0, t_sample)) {
        dt = t_sample - t;
        lands = true;
      }
      // ks[0], ku[0] hold the rates at the current state.
      for (std::size_t i = 0; i < n; ++i) {
        ts[i] = s[i] + 0.5 * dt * ks[0][i];
        tu[i] = u[i] + 0.5 * dt * ku[0][i];
      }
      op.rhs(ts, tu, ks[1], ku[1]);
      for (std::size_t i = 0; i < n; ++i) {
        ts[i] = s[i] + 0.5 * dt * ks[1][i];
        tu[i] = u[i] + 0.5 * dt * ku[1][i];
      }
      op.rhs(ts, tu, ks[2], ku[2]);
      for (std::size_t i = 0; i < n; ++i) {
        ts[i] = s[i] + dt * ks[2][i];
        tu[i] = u[i] + dt * ku[2][i];
      }
      op.rhs(ts, tu, ks[3], ku[3]);
      for (std::size_t i = 0; i < n; ++i) {
        s[i] += dt / 6.0 * (ks[0][i] + 2.0 * ks[1][i] + 2.0 * ks[2][i] + ks[3][i]);
        u[i] += dt / 6.0 * (ku[0][i] + 2.0 * ku[1][i] + 2.0 * ku[2][i] + ku[3][i]);
      }
      op.apply_filter(u);
      t = lands ? t_sample : t + dt;
      ++res.steps;
      op.rhs(s, u, ks[0], ku[0]);
      if (lands) {
        record(t);
        ++next_sample;
      }
      if (observer) {
        auto st = make_state(t);
        FluidRates rt{GridFunction(init.sigma.grid_ptr(), ks[0]), GridFunction(init.u.grid_ptr(), ku[0])};
        if (!observer(st, rt)) {
          res.stopped_by_observer = true;
          if (!lands) record(t);
          break;
        }
      }
    }
  } catch (const GuardViolated& e) {
    res.guard_tripped = true;
    res.message = e.what();
  }
  res.final = make_state(t);
  return res;
}

struct EscapeResult {
  double delta = 0.0;
  double theta = 0.0;
  std::optional<double> T_escape;
  bool guard_tripped = false;
  double max_sqrtE00 = 0.0;
  double max_mass_defect = 0.0;
  std::size_t steps = 0;
};

inline constexpr double kDefaultTheta = 1e-2;

/// First time sqrt(E_0^0) reaches theta from the seed delta (phi0, psi0),
/// located by linear interpolation between steps.
inline EscapeResult escape_time(const EigenPair& pair, const SteadyState& ss, double delta, double theta,
                                double T_max, const EvolveConfig& base = {}, NonlinearOptions opts = {}) {
  if (!(delta > 0.0) || !(theta > 0.0)) throw InvalidArgument("delta and theta must be positive");
  if (delta > theta) throw InvalidArgument("delta exceeds theta");
  EscapeResult res;
  res.delta = delta;
  res.theta = theta;
  if (delta == theta) {
    res.T_escape = 0.0;
    res.max_sqrtE00 = theta;
    return res;
  }
  const FluidState init = seed_initial_data(pair, delta, ss);
  NonlinearOperator op(ss, opts);
  EvolveConfig cfg = base;
  cfg.T_max = T_max;
  const double mass0 = neutrality_defect(init.sigma);
  double prev_t = 0.0, prev_e = -1.0;
  auto obs = [&](const FluidState& st, const FluidRates&) {
    const double e = std::sqrt(energy00(st.sigma.values(), st.u.values(), ss));
    res.max_sqrtE00 = std::max(res.max_sqrtE00, e);
    res.max_mass_defect = std::max(res.max_mass_defect, std::abs(neutrality_defect(st.sigma) - mass0));
    if (e >= theta) {
      res.T_escape = prev_e < 0.0 ? st.t : prev_t + (theta - prev_e) * (st.t - prev_t) / (e - prev_e);
      return false;
    }
    prev_t = st.t;
    prev_e = e;
    return true;
  };
  const auto run = evolve(init, op, cfg, obs);
  res.guard_tripped = run.guard_tripped;
  res.steps = run.steps;
  return res;
}

}  // namespace gravinst
