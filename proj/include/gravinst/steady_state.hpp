#pragma once

// The explicit gamma = 6/5 steady state rho0 = (1+r^2)^{-5/2}.

#include <cmath>
#include <numbers>
#include <vector>

#include "gravinst/gravity.hpp"
#include "gravinst/radial_grid.hpp"

namespace gravinst {

inline constexpr double kPi = std::numbers::pi;
inline constexpr double kEntropyA = 2.0 * kPi / 9.0;
inline constexpr double kGamma = 6.0 / 5.0;
/// A*gamma.
inline constexpr double kSoundCoef = 4.0 * kPi / 15.0;

namespace profile {

inline double rho0(double r) { return std::pow(1.0 + r * r, -2.5); }
inline double drho0(double r) { return -5.0 * r * std::pow(1.0 + r * r, -3.5); }
/// rho0^gamma = (1+r^2)^{-3}.
inline double rho0_gamma(double r) { return std::pow(1.0 + r * r, -3.0); }
inline double phi0_r(double r) { return 4.0 * kPi * r / (3.0 * std::pow(1.0 + r * r, 1.5)); }
inline double phi0(double r) { return -4.0 * kPi / (3.0 * std::sqrt(1.0 + r * r)); }
inline double mass(double r) { return 4.0 * kPi * r * r * r / (3.0 * std::pow(1.0 + r * r, 1.5)); }

}  // namespace profile

struct SteadyState {
  double A = kEntropyA;
  double gamma = kGamma;
  GridPtr grid;
  GridFunction rho0;
  GridFunction drho0;
  GridFunction p0;
  GridFunction phi0_r;

  const RadialGrid& g() const { return *grid; }
};

inline SteadyState build_steady_state(const GridPtr& grid) {
  if (std::abs(kEntropyA * kGamma - kSoundCoef) > 1e-15) {
    throw InvalidArgument("A*gamma differs from 4 pi/15");
  }
  return SteadyState{
      kEntropyA,
      kGamma,
      grid,
      GridFunction::sample(grid, profile::rho0),
      GridFunction::sample(grid, profile::drho0),
      GridFunction::sample(grid, [](double r) { return kEntropyA * profile::rho0_gamma(r); }),
      GridFunction::sample(grid, profile::phi0_r),
  };
}

/// A gamma rho0^{gamma-2} rho0' + phi_r with the given potential gradient.
inline GridFunction hydrostatic_residual(const SteadyState& ss, const GridFunction& phi_r) {
  require_same_grid(ss.rho0, phi_r, "hydrostatic_residual");
  std::vector<double> res(ss.g().size());
  for (std::size_t i = 0; i < res.size(); ++i) {
    const double r = ss.g().r(i);
    // rho0^{-4/5} = (1+r^2)^2
    res[i] = kSoundCoef * (1.0 + r * r) * (1.0 + r * r) * ss.drho0[i] + phi_r[i];
  }
  return GridFunction(ss.grid, std::move(res));
}

/// Residual with the analytic steady gradient; zero to round-off.
inline GridFunction hydrostatic_residual(const SteadyState& ss) { return hydrostatic_residual(ss, ss.phi0_r); }

/// Residual with gravity from the enclosed-mass quadrature of rho0.
inline GridFunction discrete_hydrostatic_residual(const SteadyState& ss) {
  return hydrostatic_residual(ss, potential_gradient(ss.rho0).phi_r);
}

/// 4 pi times the quadrature of rho0 s^2 on [0, r], linear between nodes.
inline double enclosed_mass(const SteadyState& ss, double r) {
  const RadialGrid& g = ss.g();
  if (!(r >= 0.0) || r > g.r_max()) throw InvalidArgument("radius outside [0, R_max]");
  std::vector<double> enc(g.size());
  enclosed_integral(ss.rho0.values(), g, enc);
  const auto nodes = g.nodes();
  auto it = std::upper_bound(nodes.begin(), nodes.end(), r);
  if (it == nodes.end()) return 4.0 * kPi * enc.back();
  const auto j = static_cast<std::size_t>(it - nodes.begin());
  const double t = (r - nodes[j - 1]) / (nodes[j] - nodes[j - 1]);
  return 4.0 * kPi * ((1.0 - t) * enc[j - 1] + t * enc[j]);
}

}  // namespace gravinst
