#pragma once

// Largest growing mode of the linearized operator: the symmetric pencil
// (K, M) for L psi = mu W0 psi with Dirichlet ends, its principal eigenpair,
// the induced density profile and the regularity diagnostics.

#include <algorithm>
#include <cmath>
#include <limits>
#include <span>
#include <vector>

#include "gravinst/radial_grid.hpp"
#include "gravinst/steady_state.hpp"

namespace gravinst {

namespace coef {

/// r^2 rho0^gamma
inline double p(double r) { return r * r * std::pow(1.0 + r * r, -3.0); }
inline double q(double r) { return 2.0 * (3.0 * r * r - 1.0) * std::pow(1.0 + r * r, -4.0); }
/// (15/4pi) r^2 rho0
inline double w0(double r) { return 15.0 / (4.0 * kPi) * r * r * profile::rho0(r); }

}  // namespace coef

/// Symmetric tridiagonal stiffness and diagonal mass on all N nodes; only
/// the interior block 1..N-2 enters the eigenproblem.
struct EigenPencil {
  GridPtr grid;
  std::vector<double> diag;
  std::vector<double> off;   // off[i] = K(i, i+1)
  std::vector<double> mass;

  std::size_t size() const { return diag.size(); }
};

inline EigenPencil assemble_pencil(const SteadyState& ss) {
  const RadialGrid& g = ss.g();
  const std::size_t n = g.size();
  EigenPencil pen{ss.grid, std::vector<double>(n, 0.0), std::vector<double>(n - 1, 0.0),
                  std::vector<double>(n, 0.0)};
  const auto w = g.weights();
  for (std::size_t i = 0; i + 1 < n; ++i) {
    const double pf = 0.5 * (coef::p(g.r(i)) + coef::p(g.r(i + 1)));
    const double c = pf / g.h(i);
    pen.off[i] = c;
    pen.diag[i] -= c;
    pen.diag[i + 1] -= c;
  }
  for (std::size_t i = 0; i < n; ++i) {
    pen.diag[i] += coef::q(g.r(i)) * w[i];
    pen.mass[i] = coef::w0(g.r(i)) * w[i];
  }
  return pen;
}

/// K x with x taken as zero at both end nodes; the end rows are returned as zero.
inline std::vector<double> apply_stiffness(const EigenPencil& pen, std::span<const double> x) {
  const std::size_t n = pen.size();
  std::vector<double> y(n, 0.0);
  for (std::size_t i = 1; i + 1 < n; ++i) {
    double s = pen.diag[i] * x[i];
    if (i > 1) s += pen.off[i - 1] * x[i - 1];
    if (i + 2 < n) s += pen.off[i] * x[i + 1];
    y[i] = s;
  }
  return y;
}

/// Number of generalized eigenvalues strictly above s, from the signs of the
/// LDL^T pivots of K - s M on the interior block.
inline std::size_t count_above(const EigenPencil& pen, double s) {
  const std::size_t n = pen.size();
  std::size_t count = 0;
  double d = 1.0;
  for (std::size_t i = 1; i + 1 < n; ++i) {
    const double a = pen.diag[i] - s * pen.mass[i];
    d = (i == 1) ? a : a - pen.off[i - 1] * pen.off[i - 1] / d;
    if (d == 0.0) d = -std::numeric_limits<double>::min();
    if (d > 0.0) ++count;
  }
  return count;
}

inline double pencil_quotient(const EigenPencil& pen, std::span<const double> x) {
  const auto kx = apply_stiffness(pen, x);
  double num = 0.0;
  double den = 0.0;
  for (std::size_t i = 1; i + 1 < pen.size(); ++i) {
    num += kx[i] * x[i];
    den += pen.mass[i] * x[i] * x[i];
  }
  if (!(den > 0.0)) throw DegenerateInput("zero vector in pencil quotient");
  return num / den;
}

inline double pencil_residual(const EigenPencil& pen, std::span<const double> x, double mu) {
  const auto kx = apply_stiffness(pen, x);
  double rr = 0.0;
  double mm = 0.0;
  for (std::size_t i = 1; i + 1 < pen.size(); ++i) {
    const double mx = pen.mass[i] * x[i];
    rr += (kx[i] - mu * mx) * (kx[i] - mu * mx);
    mm += mx * mx;
  }
  return std::sqrt(rr) / (std::abs(mu) * std::sqrt(mm));
}

struct PrincipalEigen {
  double mu = 0.0;
  std::vector<double> x;  // M-normalized, zero at both ends, positive at node 1
  double residual = 0.0;
  int iterations = 0;
};

/// Largest eigenvalue by Sturm bisection, eigenvector by inverse iteration
/// shifted just above it. The seed only fixes the lower bracket.
inline PrincipalEigen principal_eigen(const EigenPencil& pen, std::span<const double> seed,
                                      int max_iterations = 100) {
  const std::size_t n = pen.size();
  if (n < 4) throw InvalidArgument("pencil too small");
  if (count_above(pen, 0.0) == 0) throw ConvergenceFailure("pencil has no positive eigenvalue");

  double lo = std::max(0.0, pencil_quotient(pen, seed));
  if (count_above(pen, lo) == 0) lo = 0.0;
  double hi = std::max(1.0, 2.0 * lo);
  for (int k = 0; count_above(pen, hi) > 0; ++k) {
    if (k > 200) throw ConvergenceFailure("no upper bracket for the top eigenvalue");
    hi *= 2.0;
  }
  for (int k = 0; k < 200 && hi - lo > 1e-14 * hi; ++k) {
    const double mid = 0.5 * (lo + hi);
    (count_above(pen, mid) > 0 ? lo : hi) = mid;
  }

  // K - s M is negative definite for s above the spectrum, so the
  // tridiagonal elimination needs no pivoting.
  const double shift = hi * (1.0 + 1e-10);
  const std::size_t m = n - 2;
  std::vector<double> a(m), b(m, 0.0), c(m), rhs(m), x(seed.begin() + 1, seed.end() - 1);
  for (std::size_t i = 0; i < m; ++i) a[i] = pen.diag[i + 1] - shift * pen.mass[i + 1];
  for (std::size_t i = 0; i + 1 < m; ++i) b[i] = pen.off[i + 1];

  PrincipalEigen out;
  out.x.assign(n, 0.0);
  for (int it = 1; it <= max_iterations; ++it) {
    for (std::size_t i = 0; i < m; ++i) rhs[i] = pen.mass[i + 1] * x[i];
    c[0] = a[0];
    for (std::size_t i = 1; i < m; ++i) {
      const double l = b[i - 1] / c[i - 1];
      c[i] = a[i] - l * b[i - 1];
      rhs[i] -= l * rhs[i - 1];
    }
    x[m - 1] = rhs[m - 1] / c[m - 1];
    for (std::size_t i = m - 1; i-- > 0;) x[i] = (rhs[i] - b[i] * x[i + 1]) / c[i];

    double norm = 0.0;
    for (std::size_t i = 0; i < m; ++i) norm += pen.mass[i + 1] * x[i] * x[i];
    norm = std::sqrt(norm);
    if (!std::isfinite(norm) || norm == 0.0) throw ConvergenceFailure("inverse iteration broke down");
    const double sign = x[0] < 0.0 ? -1.0 : 1.0;
    for (double& v : x) v *= sign / norm;

    std::copy(x.begin(), x.end(), out.x.begin() + 1);
    out.mu = pencil_quotient(pen, out.x);
    out.residual = pencil_residual(pen, out.x, out.mu);
    out.iterations = it;
    if (out.residual <= 1e-12) return out;
  }
  if (out.residual > 1e-8) throw ConvergenceFailure("eigen-residual above 1e-8 after iteration cap");
  return out;
}

/// Variational quotient pair (Q, I) on the half-line. A field that vanishes at
/// R_max is treated as supported inside the grid; otherwise algebraic tail
/// closures are added.
struct QuotientParts {
  double Q = 0.0;
  double I = 0.0;
  double ratio() const { return Q / I; }
};

inline QuotientParts rayleigh_quotient(const GridFunction& psi, const SteadyState& ss) {
  require_same_grid(psi, ss.rho0, "rayleigh_quotient");
  const RadialGrid& g = psi.grid();
  const std::size_t n = g.size();
  const auto w = g.weights();
  double grad = 0.0;
  double pot = 0.0;
  double mass = 0.0;
  for (std::size_t i = 0; i + 1 < n; ++i) {
    const double pf = 0.5 * (coef::p(g.r(i)) + coef::p(g.r(i + 1)));
    const double d = psi[i + 1] - psi[i];
    grad += pf * d * d / g.h(i);
  }
  for (std::size_t i = 0; i < n; ++i) {
    pot += w[i] * coef::q(g.r(i)) * psi[i] * psi[i];
    mass += w[i] * coef::w0(g.r(i)) * psi[i] * psi[i];
  }
  if (psi[n - 1] != 0.0) {
    std::vector<double> d(n);
    ddr(psi.values(), g, d);
    auto tail = [&](auto&& fn) { return algebraic_tail(g, fn(n - 2), fn(n - 1)); };
    grad += tail([&](std::size_t i) { return coef::p(g.r(i)) * d[i] * d[i]; });
    pot += tail([&](std::size_t i) { return coef::q(g.r(i)) * psi[i] * psi[i]; });
    mass += tail([&](std::size_t i) { return coef::w0(g.r(i)) * psi[i] * psi[i]; });
  }
  const double scale = std::max(psi.max_abs(), 1e-300);
  if (!(mass > 1e-14 * scale * scale)) throw DegenerateInput("I(psi) vanishes; quotient undefined");
  return {pot - grad, mass};
}

/// phi = -(1/omega) r^{-2} (r^2 rho0 psi)' in conservative form: face fluxes
/// differenced over the dual-cell volumes, with the outer flux R^2 rho0(R) psi(R).
inline GridFunction density_eigenfunction(const GridFunction& psi, double omega, const SteadyState& ss) {
  require_same_grid(psi, ss.rho0, "density_eigenfunction");
  if (!(omega > 0.0)) throw InvalidArgument("omega must be positive");
  const RadialGrid& g = psi.grid();
  const std::size_t n = g.size();
  const auto faces = g.faces();
  std::vector<double> flux(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double f = faces[i];
    const double psi_f = (i + 1 < n) ? 0.5 * (psi[i] + psi[i + 1]) : psi[i];
    flux[i] = f * f * profile::rho0(f) * psi_f;
  }
  std::vector<double> phi(n);
  flux_divergence(flux, g, phi);
  for (double& v : phi) v /= -omega;
  return GridFunction(psi.grid_ptr(), std::move(phi));
}

struct EigenPair {
  double mu0 = 0.0;
  GridFunction psi0;
  GridFunction phi0;
  double residual_norm = 0.0;
  double normalization = 0.0;

  double omega() const { return std::sqrt(mu0); }
};

inline EigenPair largest_eigenpair(const EigenPencil& pen, const SteadyState& ss) {
  std::vector<double> seed(pen.size());
  for (std::size_t i = 0; i < seed.size(); ++i) seed[i] = std::sqrt(pen.grid->r(i));
  seed.back() = 0.0;
  auto pe = principal_eigen(pen, seed);
  GridFunction psi(pen.grid, std::move(pe.x));
  const double omega = std::sqrt(pe.mu);
  GridFunction phi = density_eigenfunction(psi, omega, ss);
  const double norm = rayleigh_quotient(psi, ss).I;
  return {pe.mu, std::move(psi), std::move(phi), pe.residual, norm};
}

inline EigenPair largest_eigenpair(const SteadyState& ss) { return largest_eigenpair(assemble_pencil(ss), ss); }

/// Fit psi/r = a + c r^2 + d r^4 on nodes with r in [0.1, 0.3]. The first few
/// nodes carry a grid-scale layer whose size in psi/r falls like (h/r)^2, so
/// the window is fixed in r rather than in node index. Grids with fewer than 8
/// nodes there fall back to nodes 1..8.
struct OriginFit {
  double slope = 0.0;      // a
  double curvature = 0.0;  // c
  double quartic = 0.0;    // d
  double residual = 0.0;   // max |psi/r - a - c r^2 - d r^4| on the window
  bool nonlinear_flag = false;
  std::size_t first = 0;   // window is [first, last]
  std::size_t last = 0;
};

inline constexpr std::size_t kOriginFitNodes = 8;
inline constexpr double kOriginWindowLow = 0.1;
inline constexpr double kOriginWindowHigh = 0.3;

inline std::pair<std::size_t, std::size_t> origin_window(const RadialGrid& g) {
  std::size_t first = 1;
  while (first < g.size() && g.r(first) < kOriginWindowLow) ++first;
  std::size_t last = first;
  while (last + 1 < g.size() && g.r(last + 1) <= kOriginWindowHigh) ++last;
  if (last + 1 < first + kOriginFitNodes) return {1, kOriginFitNodes};
  return {first, last};
}

inline OriginFit origin_slope(const GridFunction& psi) {
  const RadialGrid& g = psi.grid();
  const auto [first, last] = origin_window(g);
  const double scale = g.r(last) * g.r(last);
  // normal equations in x = r^2 / scale, basis 1, x, x^2
  double m[3][4] = {};
  for (std::size_t i = first; i <= last; ++i) {
    const double x = g.r(i) * g.r(i) / scale;
    const double b[3] = {1.0, x, x * x};
    const double y = psi[i] / g.r(i);
    for (int j = 0; j < 3; ++j) {
      for (int k = 0; k < 3; ++k) m[j][k] += b[j] * b[k];
      m[j][3] += b[j] * y;
    }
  }
  for (int col = 0; col < 3; ++col) {
    int piv = col;
    for (int j = col + 1; j < 3; ++j) {
      if (std::abs(m[j][col]) > std::abs(m[piv][col])) piv = j;
    }
    std::swap(m[col], m[piv]);
    if (m[col][col] == 0.0) throw DegenerateInput("origin fit is singular");
    for (int j = 0; j < 3; ++j) {
      if (j == col) continue;
      const double f = m[j][col] / m[col][col];
      for (int k = col; k < 4; ++k) m[j][k] -= f * m[col][k];
    }
  }
  OriginFit fit;
  fit.first = first;
  fit.last = last;
  fit.slope = m[0][3] / m[0][0];
  fit.curvature = m[1][3] / m[1][1] / scale;
  fit.quartic = m[2][3] / m[2][2] / (scale * scale);
  for (std::size_t i = first; i <= last; ++i) {
    const double r2 = g.r(i) * g.r(i);
    const double model = fit.slope + fit.curvature * r2 + fit.quartic * r2 * r2;
    fit.residual = std::max(fit.residual, std::abs(psi[i] / g.r(i) - model));
  }
  fit.nonlinear_flag = fit.residual > 1e-3 * std::abs(fit.slope);
  return fit;
}

struct Moment {
  int n = 0;
  double M = 0.0;
  double D = 0.0;
  double M_tail = 0.0;  // fraction of M from r > R_max/2
  double D_tail = 0.0;
};

inline std::vector<Moment> moment_table(const GridFunction& psi, int n_max) {
  if (n_max < 0 || n_max > 8) throw InvalidArgument("moment order must lie in 0..8");
  const RadialGrid& g = psi.grid();
  std::vector<double> d(g.size());
  ddr(psi.values(), g, d);
  const auto w = g.weights();
  std::vector<Moment> out;
  for (int n = 0; n <= n_max; ++n) {
    Moment m{n};
    double m_far = 0.0;
    double d_far = 0.0;
    for (std::size_t i = 0; i < g.size(); ++i) {
      const double r = g.r(i);
      const double rp = std::pow(r, n + 2);
      const double a = w[i] * rp * profile::rho0(r) * psi[i] * psi[i];
      const double b = w[i] * rp * profile::rho0_gamma(r) * d[i] * d[i];
      m.M += a;
      m.D += b;
      if (r > 0.5 * g.r_max()) {
        m_far += a;
        d_far += b;
      }
    }
    m.M_tail = m.M > 0.0 ? m_far / m.M : 0.0;
    m.D_tail = m.D > 0.0 ? d_far / m.D : 0.0;
    out.push_back(m);
  }
  return out;
}

inline constexpr double kDefaultWeightBeta = 1e-3;

/// Largest eigenvalue of the weighted quotient Q_l/I_l for index l <= 0, with
/// weight (1+r^2)^{k/4}, k = -5l, so that I_l uses W_l = (15/4pi) r^2 rho0^{1+l}.
inline double weighted_growth_bound(const EigenPencil& pen, const SteadyState& ss, double l,
                                    double beta = kDefaultWeightBeta) {
  if (l > 0.0) throw InvalidArgument("weight index must be <= 0");
  if (!(beta > 0.0)) throw InvalidArgument("beta must be positive");
  std::vector<double> seed(pen.size());
  for (std::size_t i = 0; i < seed.size(); ++i) seed[i] = std::sqrt(pen.grid->r(i));
  seed.back() = 0.0;
  if (l == 0.0) return principal_eigen(pen, seed).mu;

  const RadialGrid& g = ss.g();
  const double k = -5.0 * l;
  EigenPencil wp = pen;
  const auto w = g.weights();
  std::vector<double> dscale(pen.size());
  for (std::size_t i = 0; i < pen.size(); ++i) {
    const double r = g.r(i);
    dscale[i] = std::pow(1.0 + r * r, 0.25 * k);
    const double b = w[i] * std::pow(r, 4) * std::pow(1.0 + r * r, -5.0);
    wp.diag[i] = dscale[i] * dscale[i] * (pen.diag[i] - beta * b);
    wp.mass[i] = dscale[i] * dscale[i] * pen.mass[i];
    seed[i] /= dscale[i];
  }
  for (std::size_t i = 0; i + 1 < pen.size(); ++i) wp.off[i] = dscale[i] * dscale[i + 1] * pen.off[i];
  return principal_eigen(wp, seed).mu;
}

}  // namespace gravinst
