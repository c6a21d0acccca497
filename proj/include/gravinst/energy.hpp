#pragma once

// Symmetrizer-weighted energies, the physical energy, the smallness suprema
// and a weighted Gagliardo-Nirenberg check.

#include <algorithm>
#include <cmath>
#include <deque>
#include <vector>

#include "gravinst/gravity.hpp"
#include "gravinst/nonlinear_dynamics.hpp"
#include "gravinst/radial_grid.hpp"
#include "gravinst/steady_state.hpp"

namespace gravinst {

/// {0, -0.3, ..., -3.0} together with -7/5 and -8/5 (-6/5 is already on the grid).
inline std::vector<double> default_l_grid() {
  std::vector<double> ls;
  for (int k = 0; k <= 10; ++k) ls.push_back(k == 0 ? 0.0 : -(3.0 * k) / 10.0);
  for (double l : {-6.0 / 5.0, -7.0 / 5.0, -8.0 / 5.0}) {
    if (std::find(ls.begin(), ls.end(), l) == ls.end()) ls.push_back(l);
  }
  return ls;
}

/// 4pi int [(4pi/15) rho^{-4/5+l} s^2 + rho^{1+l} v^2] r^2 dr with rho = rho0 + sigma.
inline double symmetrized_energy(std::span<const double> sigma, std::span<const double> s,
                                 std::span<const double> v, const SteadyState& ss, double l) {
  const auto vol = ss.g().volumes();
  double e = 0.0;
  for (std::size_t i = 0; i < sigma.size(); ++i) {
    const double rho = ss.rho0[i] + sigma[i];
    e += vol[i] * (kSoundCoef * std::pow(rho, -0.8 + l) * s[i] * s[i] + std::pow(rho, 1.0 + l) * v[i] * v[i]);
  }
  return 4.0 * kPi * e;
}

/// Last few (sigma_t, u_t) levels at a uniform time stride, from which the
/// second and third time derivatives are formed by backward differences.
class DerivativeHistory {
 public:
  explicit DerivativeHistory(double stride) : stride_(stride) {
    if (!(stride > 0.0)) throw InvalidArgument("history stride must be positive");
  }

  void push(const FluidState& s, const FluidRates& r) {
    if (!levels_.empty()) {
      const double gap = s.t - levels_.back().state.t;
      if (std::abs(gap - stride_) > 1e-9 * std::max(1.0, stride_)) {
        throw InvalidArgument("history levels must be one stride apart");
      }
    }
    levels_.push_back({s, r});
    if (levels_.size() > 4) levels_.pop_front();
  }

  std::size_t size() const { return levels_.size(); }
  double stride() const { return stride_; }
  const FluidState& current() const {
    if (levels_.empty()) throw InsufficientHistory("empty history");
    return levels_.back().state;
  }

  /// m-th time derivative (sigma, u) at the latest level, m <= 3.
  std::pair<std::vector<double>, std::vector<double>> derivative(int m) const {
    if (m < 0 || m > 3) throw InvalidArgument("time derivative order must lie in 0..3");
    if (levels_.size() < static_cast<std::size_t>(std::max(1, m + 1)) || levels_.empty()) {
      throw InsufficientHistory("order " + std::to_string(m) + " needs " + std::to_string(m + 1) + " levels, have " +
                                std::to_string(levels_.size()));
    }
    const std::size_t k = levels_.size() - 1;
    const auto& cur = levels_[k];
    const std::size_t n = cur.state.sigma.size();
    if (m == 0) return {cur.state.sigma.vector(), cur.state.u.vector()};
    if (m == 1) return {cur.rates.dsigma.vector(), cur.rates.du.vector()};
    std::vector<double> s(n), v(n);
    const double h = stride_;
    for (std::size_t i = 0; i < n; ++i) {
      auto a = [&](std::size_t back, bool sig) {
        const auto& lv = levels_[k - back].rates;
        return sig ? lv.dsigma[i] : lv.du[i];
      };
      if (m == 2) {
        s[i] = (3.0 * a(0, true) - 4.0 * a(1, true) + a(2, true)) / (2.0 * h);
        v[i] = (3.0 * a(0, false) - 4.0 * a(1, false) + a(2, false)) / (2.0 * h);
      } else {
        s[i] = (2.0 * a(0, true) - 5.0 * a(1, true) + 4.0 * a(2, true) - a(3, true)) / (h * h);
        v[i] = (2.0 * a(0, false) - 5.0 * a(1, false) + 4.0 * a(2, false) - a(3, false)) / (h * h);
      }
    }
    return {std::move(s), std::move(v)};
  }

 private:
  struct Level {
    FluidState state;
    FluidRates rates;
  };
  double stride_;
  std::deque<Level> levels_;
};

/// E_l^0 .. E_l^{j_max} at the latest history level.
inline std::vector<double> instant_energy(const DerivativeHistory& hist, const SteadyState& ss, double l,
                                          int j_max) {
  if (j_max < 0 || j_max > 3) throw InvalidArgument("j_max must lie in 0..3");
  const auto& sigma = hist.current().sigma.values();
  std::vector<double> out;
  for (int j = 0; j <= j_max; ++j) {
    const auto [s, v] = hist.derivative(j);
    out.push_back(symmetrized_energy(sigma, s, v, ss, l));
  }
  return out;
}

/// Rows j = 0..j_max, row j holding Etilde_l^{j,i} for i = 0..j: the field
/// d_t^{j-i} is differentiated i times in r and weighted with exponents shifted by i/5.
inline std::vector<std::vector<double>> total_energy(const DerivativeHistory& hist, const SteadyState& ss,
                                                     double l, int j_max = 3) {
  if (j_max < 0 || j_max > 3) throw InvalidArgument("j_max must lie in 0..3");
  const RadialGrid& g = ss.g();
  const auto& sigma = hist.current().sigma.values();
  std::vector<std::vector<double>> table(j_max + 1);
  for (int m = 0; m <= j_max; ++m) {
    auto [s, v] = hist.derivative(m);
    for (int i = 0; m + i <= j_max; ++i) {
      if (i > 0) {
        std::vector<double> ds(s.size()), dv(v.size());
        ddr(s, g, ds);
        ddr(v, g, dv);
        s = std::move(ds);
        v = std::move(dv);
      }
      table[m + i].resize(m + i + 1);
      table[m + i][i] = symmetrized_energy(sigma, s, v, ss, l + i / 5.0);
    }
  }
  return table;
}

/// 4pi int [rho u^2/2 + 5A rho^{6/5}] r^2 dr + (1/2) 4pi int rho Phi r^2 dr,
/// Phi from the enclosed-mass quadrature with the monopole far-field closure.
inline double physical_energy(const FluidState& s, const SteadyState& ss) {
  const RadialGrid& g = ss.g();
  const std::size_t n = g.size();
  const auto vol = g.volumes();
  std::vector<double> rho(n);
  for (std::size_t i = 0; i < n; ++i) rho[i] = ss.rho0[i] + s.sigma[i];
  const GridFunction rho_f(ss.grid, rho);
  const GridFunction phi = potential(potential_gradient(rho_f));
  double kin = 0.0, internal = 0.0, pot = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    kin += vol[i] * 0.5 * rho[i] * s.u[i] * s.u[i];
    internal += vol[i] * 5.0 * kEntropyA * std::pow(rho[i], 1.2);
    pot += vol[i] * 0.5 * rho[i] * phi[i];
  }
  return 4.0 * kPi * (kin + internal + pot);
}

struct SmallnessSuprema {
  double sigma_rel = 0.0;    // |sigma / rho|
  double sigma_t_rel = 0.0;  // |sigma_t / rho|
  double grad_sigma = 0.0;   // |grad sigma / rho^{9/10}|
  double u_rel = 0.0;        // |u / rho^{1/10}|
  double u_t_rel = 0.0;      // |u_t / rho^{1/10}|
  double grad_u = 0.0;       // |grad u|, full 3-d velocity gradient

  std::vector<double> as_vector() const { return {sigma_rel, sigma_t_rel, grad_sigma, u_rel, u_t_rel, grad_u}; }
};

inline SmallnessSuprema smallness_monitor(const FluidState& s, const FluidRates& r, const SteadyState& ss) {
  const RadialGrid& g = ss.g();
  const std::size_t n = g.size();
  std::vector<double> ds(n), du(n);
  ddr(s.sigma.values(), g, ds);
  ddr(s.u.values(), g, du);
  SmallnessSuprema m;
  for (std::size_t i = 0; i < n; ++i) {
    const double rho = ss.rho0[i] + s.sigma[i];
    const double r10 = std::pow(rho, 0.1);
    m.sigma_rel = std::max(m.sigma_rel, std::abs(s.sigma[i] / rho));
    m.sigma_t_rel = std::max(m.sigma_t_rel, std::abs(r.dsigma[i] / rho));
    m.grad_sigma = std::max(m.grad_sigma, std::abs(ds[i]) / std::pow(rho, 0.9));
    m.u_rel = std::max(m.u_rel, std::abs(s.u[i]) / r10);
    m.u_t_rel = std::max(m.u_t_rel, std::abs(r.du[i]) / r10);
    // Jacobian of u(r) x/r has eigenvalues u_r, u/r, u/r.
    const double ur = i == 0 ? du[0] : s.u[i] / g.r(i);
    m.grad_u = std::max(m.grad_u, std::sqrt(du[i] * du[i] + 2.0 * ur * ur));
  }
  return m;
}

struct GnResult {
  double lhs = 0.0;
  double rhs = 0.0;
  double ratio = 0.0;
};

/// lhs = int (1+r^2)^k f^4 r^2,
/// rhs = (int (1+r^2)^a f'^2 r^2)^{3/2} (int (1+r^2)^b f^2 r^2)^{1/2}
///     + (int (1+r^2)^a2 f^2 r^2)^{3/2} (int (1+r^2)^b2 f^2 r^2)^{1/2},
/// with (3/2)a + (1/2)b = k and the same for (a2, b2).
inline GnResult gn_check(const GridFunction& f, double k, double alpha, double beta, double alpha2,
                         double beta2) {
  for (auto [a, b] : {std::pair{alpha, beta}, std::pair{alpha2, beta2}}) {
    if (std::abs(1.5 * a + 0.5 * b - k) > 1e-12 * std::max(1.0, std::abs(k))) {
      throw InvalidArgument("exponent constraint (3/2)alpha + (1/2)beta = k violated");
    }
  }
  const RadialGrid& g = f.grid();
  const std::size_t n = g.size();
  std::vector<double> df(n);
  ddr(f.values(), g, df);
  const auto w = g.weights();
  double lhs = 0, ga = 0, fb = 0, fa2 = 0, fb2 = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double r = g.r(i);
    const double x = 1.0 + r * r;
    const double f2 = f[i] * f[i];
    const double wr = w[i] * r * r;
    lhs += wr * std::pow(x, k) * f2 * f2;
    ga += wr * std::pow(x, alpha) * df[i] * df[i];
    fb += wr * std::pow(x, beta) * f2;
    fa2 += wr * std::pow(x, alpha2) * f2;
    fb2 += wr * std::pow(x, beta2) * f2;
  }
  GnResult res;
  res.lhs = lhs;
  res.rhs = std::pow(ga, 1.5) * std::sqrt(fb) + std::pow(fa2, 1.5) * std::sqrt(fb2);
  res.ratio = res.rhs > 0.0 ? res.lhs / res.rhs : 0.0;
  return res;
}

inline GnResult gn_check(const GridFunction& f, double k, double alpha, double beta) {
  return gn_check(f, k, alpha, beta, alpha, beta);
}

}  // namespace gravinst
