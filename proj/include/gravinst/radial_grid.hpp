#pragma once

// Stretched radial grids on [0, R_max], node-sampled fields, quadrature and
// differentiation.
//
// Every node i owns a dual cell [f_{i-1}, f_i] where f_i = (r_i + r_{i+1})/2,
// f_{-1} = 0 and f_{N-1} = R_max. The cell lengths are the trapezoid weights,
// and the cell volumes (f_i^3 - f_{i-1}^3)/3 give the r^2-weighted quadrature
// used for masses and energies, which telescopes exactly against flux
// differences taken at the faces f_i.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <memory>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "gravinst/errors.hpp"

namespace gravinst {

/// Node-placement descriptor.
struct Stretch {
  enum class Kind { uniform, sinh, standard };

  Kind kind = Kind::standard;
  double scale = 0.0;  // core length c of r = c sinh(kappa xi); sinh only

  static Stretch uniform() { return {Kind::uniform, 0.0}; }
  static Stretch sinh(double core) { return {Kind::sinh, core}; }
  /// Half of the nodes in [0, 5], geometric grading beyond.
  static Stretch standard() { return {Kind::standard, 0.0}; }
};

inline constexpr std::size_t kMinGridNodes = 8;
inline constexpr double kStandardCoreRadius = 5.0;

class RadialGrid {
 public:
  RadialGrid(double r_max, std::size_t n, Stretch stretch) {
    if (n < kMinGridNodes) {
      throw InvalidArgument("grid needs at least 8 nodes, got " + std::to_string(n));
    }
    if (!(r_max > 0.0) || !std::isfinite(r_max)) {
      throw InvalidArgument("R_max must be positive and finite");
    }
    if (stretch.kind == Stretch::Kind::standard) {
      if (r_max > 2.0 * kStandardCoreRadius) {
        // r(1/2) = c sinh(kappa/2) = 5 and r(1) = c sinh(kappa) = R_max.
        const double half_kappa = std::acosh(r_max / (2.0 * kStandardCoreRadius));
        stretch = Stretch::sinh(kStandardCoreRadius / std::sinh(half_kappa));
      } else {
        stretch = Stretch::uniform();
      }
    }
    if (stretch.kind == Stretch::Kind::sinh && !(stretch.scale > 0.0)) {
      throw InvalidArgument("sinh stretch needs a positive core length");
    }
    stretch_ = stretch;
    r_max_ = r_max;

    nodes_.resize(n);
    const double last = static_cast<double>(n - 1);
    if (stretch.kind == Stretch::Kind::uniform) {
      for (std::size_t i = 0; i < n; ++i) nodes_[i] = r_max * static_cast<double>(i) / last;
    } else {
      const double kappa = std::asinh(r_max / stretch.scale);
      for (std::size_t i = 0; i < n; ++i) {
        nodes_[i] = stretch.scale * std::sinh(kappa * static_cast<double>(i) / last);
      }
    }
    nodes_.front() = 0.0;
    nodes_.back() = r_max;
    for (std::size_t i = 1; i < n; ++i) {
      if (!(nodes_[i] > nodes_[i - 1])) throw InvalidArgument("grid nodes not strictly increasing");
    }

    faces_.resize(n);
    for (std::size_t i = 0; i + 1 < n; ++i) faces_[i] = 0.5 * (nodes_[i] + nodes_[i + 1]);
    faces_[n - 1] = r_max;

    weights_.resize(n);
    volumes_.resize(n);
    double lower = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      weights_[i] = faces_[i] - lower;
      volumes_[i] = (faces_[i] * faces_[i] * faces_[i] - lower * lower * lower) / 3.0;
      lower = faces_[i];
    }
  }

  std::size_t size() const { return nodes_.size(); }
  double r_max() const { return r_max_; }
  const Stretch& stretch() const { return stretch_; }

  std::span<const double> nodes() const { return nodes_; }
  double r(std::size_t i) const { return nodes_[i]; }
  /// Spacing r_{i+1} - r_i.
  double h(std::size_t i) const { return nodes_[i + 1] - nodes_[i]; }

  /// Upper face of the dual cell of node i; face(N-1) = R_max.
  std::span<const double> faces() const { return faces_; }
  /// Trapezoid weights (dual-cell lengths); they sum to R_max.
  std::span<const double> weights() const { return weights_; }
  /// Dual-cell volumes, the weights of the r^2 dr quadrature; they sum to R_max^3/3.
  std::span<const double> volumes() const { return volumes_; }

  /// Smallest neighbouring spacing at node i.
  double local_spacing(std::size_t i) const {
    if (i == 0) return h(0);
    if (i + 1 == size()) return h(i - 1);
    return std::min(h(i - 1), h(i));
  }

  bool same_nodes(const RadialGrid& other) const { return nodes_ == other.nodes_; }

 private:
  double r_max_ = 0.0;
  Stretch stretch_;
  std::vector<double> nodes_;
  std::vector<double> faces_;
  std::vector<double> weights_;
  std::vector<double> volumes_;
};

using GridPtr = std::shared_ptr<const RadialGrid>;

inline GridPtr make_grid(double r_max, std::size_t n, Stretch stretch = Stretch::standard()) {
  return std::make_shared<const RadialGrid>(r_max, n, stretch);
}

/// Same mapping with every interval halved; the old nodes are a subset of the new.
inline GridPtr refined(const RadialGrid& grid) {
  return make_grid(grid.r_max(), 2 * (grid.size() - 1) + 1, grid.stretch());
}

/// Grid on [0, new_r_max] with the same node placement per unit length: the
/// mapping is kept and the node count grows with the mapped extent.
inline GridPtr extended(const RadialGrid& grid, double new_r_max) {
  const Stretch& s = grid.stretch();
  const double intervals = static_cast<double>(grid.size() - 1);
  double ratio = new_r_max / grid.r_max();
  if (s.kind == Stretch::Kind::sinh) {
    ratio = std::asinh(new_r_max / s.scale) / std::asinh(grid.r_max() / s.scale);
  }
  const auto n = static_cast<std::size_t>(std::llround(intervals * ratio)) + 1;
  if (s.kind == Stretch::Kind::uniform) {
    return make_grid(new_r_max, n, s);
  }
  // Keep the core length and let the node count absorb the extra extent.
  return make_grid(new_r_max, n, Stretch::sinh(s.scale));
}

class GridFunction {
 public:
  explicit GridFunction(GridPtr grid) : grid_(std::move(grid)) {
    if (!grid_) throw InvalidArgument("grid function without grid");
    values_.assign(grid_->size(), 0.0);
  }

  GridFunction(GridPtr grid, std::vector<double> values)
      : grid_(std::move(grid)), values_(std::move(values)) {
    if (!grid_) throw InvalidArgument("grid function without grid");
    if (values_.size() != grid_->size()) {
      throw InvalidArgument("value count " + std::to_string(values_.size()) +
                            " differs from node count " + std::to_string(grid_->size()));
    }
    if (!all_finite()) throw InvalidArgument("grid function with non-finite values");
  }

  template <class F>
  static GridFunction sample(const GridPtr& grid, F&& f) {
    std::vector<double> v(grid->size());
    for (std::size_t i = 0; i < v.size(); ++i) v[i] = f(grid->r(i));
    return GridFunction(grid, std::move(v));
  }

  const RadialGrid& grid() const { return *grid_; }
  const GridPtr& grid_ptr() const { return grid_; }
  std::size_t size() const { return values_.size(); }

  std::span<const double> values() const { return values_; }
  std::span<double> mutable_values() { return values_; }
  const std::vector<double>& vector() const { return values_; }

  double operator[](std::size_t i) const { return values_[i]; }
  double& operator[](std::size_t i) { return values_[i]; }

  bool all_finite() const {
    return std::all_of(values_.begin(), values_.end(), [](double x) { return std::isfinite(x); });
  }

  double max_abs() const {
    double m = 0.0;
    for (double x : values_) m = std::max(m, std::abs(x));
    return m;
  }

  GridFunction& operator+=(const GridFunction& o);
  GridFunction& operator-=(const GridFunction& o);
  GridFunction& operator*=(double c) {
    for (double& x : values_) x *= c;
    return *this;
  }

 private:
  GridPtr grid_;
  std::vector<double> values_;
};

inline bool same_grid(const RadialGrid& a, const RadialGrid& b) {
  return &a == &b || a.same_nodes(b);
}

inline void require_same_grid(const GridFunction& a, const GridFunction& b, const char* what) {
  if (!same_grid(a.grid(), b.grid())) throw GridMismatch(what);
}

inline GridFunction& GridFunction::operator+=(const GridFunction& o) {
  require_same_grid(*this, o, "operator+=");
  for (std::size_t i = 0; i < values_.size(); ++i) values_[i] += o.values_[i];
  return *this;
}

inline GridFunction& GridFunction::operator-=(const GridFunction& o) {
  require_same_grid(*this, o, "operator-=");
  for (std::size_t i = 0; i < values_.size(); ++i) values_[i] -= o.values_[i];
  return *this;
}

inline GridFunction operator+(GridFunction a, const GridFunction& b) { return a += b; }
inline GridFunction operator-(GridFunction a, const GridFunction& b) { return a -= b; }
inline GridFunction operator*(double c, GridFunction a) { return a *= c; }
inline GridFunction operator*(GridFunction a, double c) { return a *= c; }

/// Pointwise product.
inline GridFunction times(const GridFunction& a, const GridFunction& b) {
  require_same_grid(a, b, "times");
  std::vector<double> v(a.size());
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = a[i] * b[i];
  return GridFunction(a.grid_ptr(), std::move(v));
}

/// Trapezoid rule for the integral of f*w over [0, R_max].
inline double integrate(const GridFunction& f, const GridFunction& w) {
  require_same_grid(f, w, "integrate");
  const auto weights = f.grid().weights();
  double sum = 0.0;
  for (std::size_t i = 0; i < f.size(); ++i) sum += weights[i] * f[i] * w[i];
  return sum;
}

inline double integrate(const GridFunction& f) {
  const auto weights = f.grid().weights();
  double sum = 0.0;
  for (std::size_t i = 0; i < f.size(); ++i) sum += weights[i] * f[i];
  return sum;
}

/// Integral from r_max to infinity of an integrand that decays like a power:
/// g(r) = g_last (r_last/r)^p, with p read off the samples (r_prev, g_prev)
/// and (r_last, g_last).
inline double algebraic_tail(double r_prev, double g_prev, double r_last, double g_last, double r_max) {
  if (g_last == 0.0) return 0.0;
  if (g_prev == 0.0 || (g_prev > 0.0) != (g_last > 0.0)) {
    throw DegenerateInput("integrand tail is not of one sign at R_max");
  }
  const double p = -std::log(g_last / g_prev) / std::log(r_last / r_prev);
  if (!(p > 1.0)) throw DegenerateInput("integrand does not decay fast enough for a half-line integral");
  const double g_at_max = g_last * std::pow(r_last / r_max, p);
  return g_at_max * r_max / (p - 1.0);
}

inline double algebraic_tail(const RadialGrid& grid, double g_prev, double g_last) {
  const std::size_t n = grid.size();
  return algebraic_tail(grid.r(n - 2), g_prev, grid.r(n - 1), g_last, grid.r_max());
}

/// Half-line integral of f*w: trapezoid on [0, R_max] plus the algebraic tail
/// closure. Fields that vanish at R_max get no tail.
inline double integrate_half_line(const GridFunction& f, const GridFunction& w) {
  const std::size_t n = f.size();
  return integrate(f, w) + algebraic_tail(f.grid(), f[n - 2] * w[n - 2], f[n - 1] * w[n - 1]);
}

inline double integrate_half_line(const GridFunction& f) {
  const std::size_t n = f.size();
  return integrate(f) + algebraic_tail(f.grid(), f[n - 2], f[n - 1]);
}

/// Dual-cell quadrature of the integral of f r^2 dr over [0, R_max].
inline double integrate_volume(std::span<const double> f, const RadialGrid& grid) {
  const auto v = grid.volumes();
  double sum = 0.0;
  for (std::size_t i = 0; i < f.size(); ++i) sum += v[i] * f[i];
  return sum;
}

inline double integrate_volume(const GridFunction& f) { return integrate_volume(f.values(), f.grid()); }

/// (F_i - F_{i-1}) / V_i, where F_i is the r^2-weighted flux through the upper
/// face of cell i and F_{-1} = 0. Summing V_i out_i telescopes to F_{N-1}.
inline void flux_divergence(std::span<const double> flux, const RadialGrid& grid, std::span<double> out) {
  const auto vol = grid.volumes();
  double below = 0.0;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    out[i] = (flux[i] - below) / vol[i];
    below = flux[i];
  }
}

/// Second-order derivative on the nonuniform grid: three-point central
/// stencil inside, three-point one-sided stencils at both ends.
inline void ddr(std::span<const double> f, const RadialGrid& grid, std::span<double> out) {
  const std::size_t n = grid.size();
  for (std::size_t i = 1; i + 1 < n; ++i) {
    const double hm = grid.h(i - 1);
    const double hp = grid.h(i);
    out[i] = (-hp / (hm * (hm + hp))) * f[i - 1] + ((hp - hm) / (hm * hp)) * f[i] +
             (hm / (hp * (hm + hp))) * f[i + 1];
  }
  {
    const double h0 = grid.h(0);
    const double h1 = grid.h(1);
    out[0] = -(2.0 * h0 + h1) / (h0 * (h0 + h1)) * f[0] + (h0 + h1) / (h0 * h1) * f[1] -
             h0 / (h1 * (h0 + h1)) * f[2];
  }
  {
    const double h0 = grid.h(n - 2);  // r_{n-1} - r_{n-2}
    const double h1 = grid.h(n - 3);  // r_{n-2} - r_{n-3}
    out[n - 1] = (2.0 * h0 + h1) / (h0 * (h0 + h1)) * f[n - 1] - (h0 + h1) / (h0 * h1) * f[n - 2] +
                 h0 / (h1 * (h0 + h1)) * f[n - 3];
  }
}

inline GridFunction ddr(const GridFunction& f) {
  std::vector<double> out(f.size());
  ddr(f.values(), f.grid(), out);
  return GridFunction(f.grid_ptr(), std::move(out));
}

}  // namespace gravinst
