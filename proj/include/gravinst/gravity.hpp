#pragma once

// Radial Poisson coupling by Gauss's law on the dual cells.

#include <cmath>
#include <numbers>
#include <span>
#include <vector>

#include "gravinst/radial_grid.hpp"

namespace gravinst {

struct PotentialGradient {
  GridFunction phi_r;     // 4 pi enclosed / r^2, zero at the origin
  GridFunction enclosed;  // integral of sigma s^2 from 0 to r
};

/// Enclosed integral of sigma s^2 at every node: full dual cells below the
/// node plus the lower half of its own cell.
inline void enclosed_integral(std::span<const double> sigma, const RadialGrid& grid,
                              std::span<double> out) {
  const auto faces = grid.faces();
  const auto vol = grid.volumes();
  double below = 0.0;
  double lower_face = 0.0;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const double r = grid.r(i);
    out[i] = below + sigma[i] * (r * r * r - lower_face * lower_face * lower_face) / 3.0;
    below += vol[i] * sigma[i];
    lower_face = faces[i];
  }
}

inline void potential_gradient(std::span<const double> sigma, const RadialGrid& grid,
                               std::span<double> phi_r) {
  enclosed_integral(sigma, grid, phi_r);
  phi_r[0] = 0.0;
  for (std::size_t i = 1; i < grid.size(); ++i) {
    const double r = grid.r(i);
    phi_r[i] *= 4.0 * std::numbers::pi / (r * r);
  }
}

inline PotentialGradient potential_gradient(const GridFunction& sigma) {
  const RadialGrid& g = sigma.grid();
  std::vector<double> enclosed(g.size());
  enclosed_integral(sigma.values(), g, enclosed);
  std::vector<double> phi_r(g.size(), 0.0);
  for (std::size_t i = 1; i < g.size(); ++i) {
    phi_r[i] = 4.0 * std::numbers::pi * enclosed[i] / (g.r(i) * g.r(i));
  }
  return {GridFunction(sigma.grid_ptr(), std::move(phi_r)),
          GridFunction(sigma.grid_ptr(), std::move(enclosed))};
}

/// Signed integral of sigma r^2 dr over [0, R_max].
inline double neutrality_defect(const GridFunction& sigma) { return integrate_volume(sigma); }

/// Potential with the monopole closure Phi(R) = -4 pi M / R, where M is the
/// total enclosed integral; the gradient is integrated inward by trapezoids.
inline GridFunction potential(const PotentialGradient& pg) {
  const RadialGrid& g = pg.phi_r.grid();
  const std::size_t n = g.size();
  std::vector<double> phi(n);
  phi[n - 1] = -4.0 * std::numbers::pi * pg.enclosed[n - 1] / g.r_max();
  for (std::size_t i = n - 1; i-- > 0;) {
    phi[i] = phi[i + 1] - 0.5 * g.h(i) * (pg.phi_r[i] + pg.phi_r[i + 1]);
  }
  return GridFunction(pg.phi_r.grid_ptr(), std::move(phi));
}

}  // namespace gravinst
