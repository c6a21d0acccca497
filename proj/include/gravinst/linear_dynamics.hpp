#pragma once

// Linearized evolution about rho0: the first-order pair (Phi, Psi) and the
// wave form W0 Psi_tt = L Psi, weighted norms and growth-rate fits.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <string>
#include <string_view>
#include <vector>

#include "gravinst/gravity.hpp"
#include "gravinst/growing_mode.hpp"
#include "gravinst/radial_grid.hpp"
#include "gravinst/steady_state.hpp"

namespace gravinst {

struct LinearState {
  double t = 0.0;
  GridFunction Psi;
  GridFunction Psi_t;
  GridFunction Phi;
};

/// Weight id for W_l, e.g. "W-1", "W-0.5".
inline std::string weight_id(double l) {
  if (l == 0.0) return "W0";
  char buf[32];
  std::snprintf(buf, sizeof buf, "W%g", l);
  return buf;
}

struct WeightFamily {
  GridPtr grid;
  GridFunction W0;
  GridFunction V0;
  std::vector<double> ls;
  std::vector<GridFunction> Wl;

  const GridFunction& get(std::string_view id) const {
    if (id == "W0") return W0;
    if (id == "V0") return V0;
    for (std::size_t k = 0; k < ls.size(); ++k) {
      if (id == weight_id(ls[k])) return Wl[k];
    }
    throw InvalidArgument("unknown weight id '" + std::string(id) + "'");
  }
};

/// W_l = (15/4pi) r^2 rho0^{1+l}, V0 = r^2 (1+r^2)^2.
inline WeightFamily make_weight_family(const SteadyState& ss, const std::vector<double>& ls) {
  WeightFamily fam{ss.grid, GridFunction::sample(ss.grid, coef::w0),
                   GridFunction::sample(ss.grid, [](double r) { return r * r * (1 + r * r) * (1 + r * r); }),
                   {}, {}};
  for (double l : ls) {
    if (l > 0.0) throw InvalidArgument("weight index must be <= 0");
    fam.ls.push_back(l);
    fam.Wl.push_back(GridFunction::sample(ss.grid, [l](double r) {
      return 15.0 / (4.0 * kPi) * r * r * std::pow(1.0 + r * r, -2.5 * (1.0 + l));
    }));
  }
  return fam;
}

/// sqrt of the half-line integral of W f^2.
inline double weighted_norm(const GridFunction& f, const GridFunction& weight) {
  require_same_grid(f, weight, "weighted_norm");
  const GridFunction f2 = times(f, f);
  return std::sqrt(integrate_half_line(f2, weight));
}

inline double weighted_norm(const GridFunction& f, const WeightFamily& fam, std::string_view id) {
  return weighted_norm(f, fam.get(id));
}

/// P_f = int r^2 (1+r^2)^{-3} f_r^2 + 2 int (1+r^2)^{-4} f^2 on the half-line.
inline double p_functional(const GridFunction& f) {
  const RadialGrid& g = f.grid();
  const std::size_t n = g.size();
  const auto w = g.weights();
  auto a = [](double r) { return coef::p(r); };
  auto b = [](double r) { return 2.0 * std::pow(1.0 + r * r, -4.0); };
  double sum = 0.0;
  for (std::size_t i = 0; i + 1 < n; ++i) {
    const double d = f[i + 1] - f[i];
    sum += 0.5 * (a(g.r(i)) + a(g.r(i + 1))) * d * d / g.h(i);
  }
  for (std::size_t i = 0; i < n; ++i) sum += w[i] * b(g.r(i)) * f[i] * f[i];
  if (f[n - 1] != 0.0) {
    std::vector<double> d(n);
    ddr(f.values(), g, d);
    sum += algebraic_tail(g, a(g.r(n - 2)) * d[n - 2] * d[n - 2], a(g.r(n - 1)) * d[n - 1] * d[n - 1]);
    sum += algebraic_tail(g, b(g.r(n - 2)) * f[n - 2] * f[n - 2], b(g.r(n - 1)) * f[n - 1] * f[n - 1]);
  }
  return sum;
}

/// -(1/r^2)(r^2 rho0 psi)_r in conservative form; the outer flux uses psi(R).
inline void rho0_divergence(std::span<const double> psi, const RadialGrid& g, std::span<double> out) {
  const std::size_t n = g.size();
  const auto faces = g.faces();
  std::vector<double> flux(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double f = faces[i];
    const double psi_f = (i + 1 < n) ? 0.5 * (psi[i] + psi[i + 1]) : psi[i];
    flux[i] = f * f * profile::rho0(f) * psi_f;
  }
  flux_divergence(flux, g, out);
  for (std::size_t i = 0; i < n; ++i) out[i] = -out[i];
}

/// Negative adjoint of rho0_divergence in the volume inner product weighted
/// by rho0: sum V rho0 psi grad(g) = -sum V g div(rho0 psi) for psi with
/// psi(R) = 0. Consistent to second order away from the first few nodes.
inline void rho0_gradient(std::span<const double> g_vals, const RadialGrid& g, std::span<double> out) {
  const std::size_t n = g.size();
  const auto faces = g.faces();
  const auto vol = g.volumes();
  double lower = 0.0;  // a_{i-1/2} (g_i - g_{i-1}) / 2
  for (std::size_t i = 0; i < n; ++i) {
    double upper = 0.0;
    if (i + 1 < n) {
      const double f = faces[i];
      upper = 0.5 * f * f * profile::rho0(f) * (g_vals[i + 1] - g_vals[i]);
    }
    out[i] = (upper + lower) / (vol[i] * profile::rho0(g.r(i)));
    lower = upper;
  }
}

struct LinearRates {
  GridFunction dPhi;
  GridFunction dPsi;
};

/// Phi_t = -(1/r^2)(r^2 rho0 Psi)_r,
/// Psi_t = -(4pi/15)(rho0^{-4/5} Phi)_r - (4pi/r^2) int_0^r Phi s^2 ds,
/// with Psi_t = 0 at the origin and at R_max. The gradient is the adjoint
/// form, which keeps the acoustic part skew in the energy norm.
inline LinearRates linear_rhs(const GridFunction& Phi, const GridFunction& Psi, const SteadyState& ss) {
  require_same_grid(Phi, Psi, "linear_rhs");
  require_same_grid(Phi, ss.rho0, "linear_rhs");
  const RadialGrid& g = ss.g();
  const std::size_t n = g.size();
  std::vector<double> dphi(n), dpsi(n), h(n), gh(n), phi_r(n);
  rho0_divergence(Psi.values(), g, dphi);
  for (std::size_t i = 0; i < n; ++i) {
    const double r = g.r(i);
    h[i] = kSoundCoef * (1 + r * r) * (1 + r * r) * Phi[i];
  }
  rho0_gradient(h, g, gh);
  potential_gradient(Phi.values(), g, phi_r);
  for (std::size_t i = 0; i < n; ++i) dpsi[i] = -gh[i] - phi_r[i];
  dpsi[0] = 0.0;
  dpsi[n - 1] = 0.0;
  return {GridFunction(ss.grid, std::move(dphi)), GridFunction(ss.grid, std::move(dpsi))};
}

inline LinearRates linear_rhs(const LinearState& s, const SteadyState& ss) { return linear_rhs(s.Phi, s.Psi, ss); }

/// Linear part of E_0^0: (16pi^2/15) int (1+r^2)^2 Phi^2 r^2 + 4pi int rho0 Psi^2 r^2.
inline double linear_energy00(const GridFunction& Phi, const GridFunction& Psi) {
  const RadialGrid& g = Phi.grid();
  const auto v = g.volumes();
  double e = 0.0;
  for (std::size_t i = 0; i < g.size(); ++i) {
    const double r = g.r(i);
    e += v[i] * (kSoundCoef * (1 + r * r) * (1 + r * r) * Phi[i] * Phi[i] + profile::rho0(r) * Psi[i] * Psi[i]);
  }
  return 4.0 * kPi * e;
}

/// Stable explicit step for the first-order pair: cfl times the smallest
/// spacing over the largest sound speed.
inline double first_order_dt(const RadialGrid& g, double cfl) {
  double dt = 1e300;
  for (std::size_t i = 0; i < g.size(); ++i) {
    const double c = std::sqrt(kSoundCoef * std::pow(profile::rho0(g.r(i)), 0.2));
    dt = std::min(dt, g.local_spacing(i) / c);
  }
  return cfl * dt;
}

struct FirstOrderRun {
  LinearState final;
  std::vector<double> t;
  std::vector<double> sqrtE;  // sqrt of linear_energy00
};

/// Classical RK4 on the first-order pair; dt is shortened to land on T.
inline FirstOrderRun evolve_first_order(const LinearState& init, const SteadyState& ss, double T, double dt,
                                        std::size_t stride = 1) {
  if (!(dt > 0.0) || !(T >= 0.0)) throw InvalidArgument("evolve_first_order needs dt > 0 and T >= 0");
  const auto steps = static_cast<std::size_t>(std::ceil(T / dt - 1e-12));
  const double h = steps ? T / static_cast<double>(steps) : 0.0;
  GridFunction Phi = init.Phi;
  GridFunction Psi = init.Psi;
  FirstOrderRun run{init, {}, {}};
  auto record = [&](double t) {
    run.t.push_back(t);
    run.sqrtE.push_back(std::sqrt(linear_energy00(Phi, Psi)));
  };
  record(init.t);
  for (std::size_t s = 1; s <= steps; ++s) {
    const auto k1 = linear_rhs(Phi, Psi, ss);
    const auto k2 = linear_rhs(Phi + (0.5 * h) * k1.dPhi, Psi + (0.5 * h) * k1.dPsi, ss);
    const auto k3 = linear_rhs(Phi + (0.5 * h) * k2.dPhi, Psi + (0.5 * h) * k2.dPsi, ss);
    const auto k4 = linear_rhs(Phi + h * k3.dPhi, Psi + h * k3.dPsi, ss);
    for (std::size_t i = 0; i < Phi.size(); ++i) {
      Phi[i] += h / 6.0 * (k1.dPhi[i] + 2 * k2.dPhi[i] + 2 * k3.dPhi[i] + k4.dPhi[i]);
      Psi[i] += h / 6.0 * (k1.dPsi[i] + 2 * k2.dPsi[i] + 2 * k3.dPsi[i] + k4.dPsi[i]);
    }
    if (s % stride == 0 || s == steps) record(init.t + h * static_cast<double>(s));
  }
  run.final.t = init.t + T;
  run.final.Phi = Phi;
  run.final.Psi = Psi;
  run.final.Psi_t = linear_rhs(Phi, Psi, ss).dPsi;
  return run;
}

/// Largest |lambda| of M^{-1}K: power iteration for a first guess, then
/// tightened by Sturm counts so that the result is a certified upper bound.
inline double max_wave_eigenvalue(const EigenPencil& pen) {
  const std::size_t n = pen.size();
  std::vector<double> x(n, 0.0), y;
  for (std::size_t i = 1; i + 1 < n; ++i) x[i] = (i % 2 ? 1.0 : -1.0) * (1.0 + 1e-3 * static_cast<double>(i % 7));
  double lam = 0.0;
  for (int it = 0; it < 60; ++it) {
    y = apply_stiffness(pen, x);
    double num = 0.0, den = 0.0;
    for (std::size_t i = 1; i + 1 < n; ++i) {
      y[i] /= pen.mass[i];
      num += y[i] * y[i] * pen.mass[i];
      den += x[i] * x[i] * pen.mass[i];
    }
    lam = std::sqrt(num / den);
    const double s = 1.0 / std::sqrt(num);
    for (std::size_t i = 1; i + 1 < n; ++i) x[i] = y[i] * s;
  }
  const std::size_t interior = n - 2;
  double hi = 2.0 * lam;
  while (count_above(pen, -hi) < interior) hi *= 2.0;
  double lo = 0.0;
  for (int k = 0; k < 200 && hi - lo > 1e-8 * hi; ++k) {
    const double mid = 0.5 * (lo + hi);
    (count_above(pen, -mid) < interior ? lo : hi) = mid;
  }
  return hi;
}

inline constexpr double kWaveStability = 3.6;

/// dt with dt^2 lambda_max = 3.6 (leapfrog limit is 4).
inline double default_wave_dt(const EigenPencil& pen) { return std::sqrt(kWaveStability / max_wave_eigenvalue(pen)); }

struct WaveSample {
  double t = 0.0;
  double norm_psi = 0.0;   // ||Psi||_{W0}
  double norm_psit = 0.0;  // ||Psi_t||_{W0}
  double p_psi = 0.0;
  double energy = 0.0;     // (W0 Psi_t, Psi_t) - (L Psi, Psi), leapfrog-staggered
  std::vector<double> norm_psi_wl;
  std::vector<double> norm_psit_wl;
};

struct WaveTrajectory {
  std::vector<double> ls;
  std::vector<WaveSample> samples;
  double dt = 0.0;
  GridFunction final_psi;
  GridFunction final_psit;
};

/// Stormer-Verlet on W0 Psi_tt = L Psi. Psi_t at integer steps is the mean of
/// the neighbouring half-step velocities, i.e. the central difference of Psi.
inline WaveTrajectory evolve_wave(const EigenPencil& pen, const WeightFamily& fam, const LinearState& init,
                                  double T, double dt, std::size_t stride = 1) {
  if (!(dt > 0.0) || !(T >= 0.0)) throw InvalidArgument("evolve_wave needs dt > 0 and T >= 0");
  if (stride == 0) throw InvalidArgument("stride must be positive");
  const std::size_t n = pen.size();
  const auto steps = static_cast<std::size_t>(std::ceil(T / dt - 1e-12));
  const double h = steps ? T / static_cast<double>(steps) : dt;

  std::vector<double> x(init.Psi.values().begin(), init.Psi.values().end());
  std::vector<double> v(init.Psi_t.values().begin(), init.Psi_t.values().end());
  x[0] = x[n - 1] = v[0] = v[n - 1] = 0.0;
  auto accel = [&](const std::vector<double>& xs) {
    auto a = apply_stiffness(pen, xs);
    for (std::size_t i = 1; i + 1 < n; ++i) a[i] /= pen.mass[i];
    return a;
  };
  auto kdot = [&](const std::vector<double>& a, const std::vector<double>& b) {
    const auto kb = apply_stiffness(pen, b);
    double s = 0.0;
    for (std::size_t i = 1; i + 1 < n; ++i) s += a[i] * kb[i];
    return s;
  };
  auto mdot = [&](const std::vector<double>& a) {
    double s = 0.0;
    for (std::size_t i = 1; i + 1 < n; ++i) s += pen.mass[i] * a[i] * a[i];
    return s;
  };

  WaveTrajectory traj{fam.ls, {}, h, init.Psi, init.Psi_t};
  std::vector<double> a = accel(x);
  std::vector<double> v_half(n), v_prev(n);
  for (std::size_t i = 0; i < n; ++i) v_prev[i] = v[i] - 0.5 * h * a[i];
  double initial = -1.0;

  for (std::size_t s = 0; s <= steps; ++s) {
    for (std::size_t i = 0; i < n; ++i) v_half[i] = v_prev[i] + h * a[i];
    std::vector<double> x_next(n);
    for (std::size_t i = 0; i < n; ++i) x_next[i] = x[i] + h * v_half[i];
    if (s % stride == 0 || s == steps) {
      WaveSample smp;
      smp.t = init.t + h * static_cast<double>(s);
      std::vector<double> vc(n);
      for (std::size_t i = 0; i < n; ++i) vc[i] = 0.5 * (v_prev[i] + v_half[i]);
      GridFunction psi(pen.grid, x), psit(pen.grid, vc);
      smp.norm_psi = weighted_norm(psi, fam.W0);
      smp.norm_psit = weighted_norm(psit, fam.W0);
      smp.p_psi = p_functional(psi);
      smp.energy = mdot(v_half) - kdot(x_next, x);
      for (const auto& w : fam.Wl) {
        smp.norm_psi_wl.push_back(weighted_norm(psi, w));
        smp.norm_psit_wl.push_back(weighted_norm(psit, w));
      }
      const double size = std::max(smp.norm_psi, smp.norm_psit);
      if (initial < 0.0) initial = size;
      if (!std::isfinite(size) || (initial > 0.0 && size > 1e12 * initial)) {
        throw InstabilityDetected("wave norm exceeded 1e12 times its initial value at t = " +
                                  std::to_string(smp.t));
      }
      traj.samples.push_back(std::move(smp));
      if (s == steps) {
        traj.final_psi = std::move(psi);
        traj.final_psit = std::move(psit);
      }
    }
    if (s == steps) break;
    x = std::move(x_next);
    v_prev = v_half;
    a = accel(x);
  }
  return traj;
}

struct RateFit {
  double rate = 0.0;
  double residual = 0.0;  // rms deviation of the log-linear fit
};

/// Least-squares slope of ln(values) against t over the trailing fraction of samples.
inline RateFit fit_growth_rate(const std::vector<double>& t, const std::vector<double>& values,
                               double window_fraction = 1.0 / 3.0) {
  const std::size_t n = t.size();
  const auto start = static_cast<std::size_t>(std::floor(static_cast<double>(n) * (1.0 - window_fraction)));
  if (n < start + 10) throw DegenerateInput("fewer than 10 samples in the fit window");
  double st = 0, sy = 0, stt = 0, sty = 0;
  const double m = static_cast<double>(n - start);
  for (std::size_t i = start; i < n; ++i) {
    if (!(values[i] > 0.0)) throw DegenerateInput("nonpositive norm in the fit window");
    const double y = std::log(values[i]);
    st += t[i];
    sy += y;
    stt += t[i] * t[i];
    sty += t[i] * y;
  }
  RateFit fit;
  fit.rate = (m * sty - st * sy) / (m * stt - st * st);
  const double icpt = (sy - fit.rate * st) / m;
  double ss = 0.0;
  for (std::size_t i = start; i < n; ++i) {
    const double e = std::log(values[i]) - icpt - fit.rate * t[i];
    ss += e * e;
  }
  fit.residual = std::sqrt(ss / m);
  return fit;
}

/// Growth rate of ||Psi_t||_{W0} over the trailing window.
inline RateFit measured_growth_rate(const WaveTrajectory& traj, double window_fraction = 1.0 / 3.0) {
  std::vector<double> t, v;
  for (const auto& s : traj.samples) {
    t.push_back(s.t);
    v.push_back(s.norm_psit);
  }
  return fit_growth_rate(t, v, window_fraction);
}

/// Growth rate of ||Psi||_{W_l} for the k-th configured l.
inline RateFit measured_weighted_rate(const WaveTrajectory& traj, std::size_t k, double window_fraction = 1.0 / 3.0) {
  std::vector<double> t, v;
  for (const auto& s : traj.samples) {
    t.push_back(s.t);
    v.push_back(s.norm_psi_wl.at(k));
  }
  return fit_growth_rate(t, v, window_fraction);
}

}  // namespace gravinst
