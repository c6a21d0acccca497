#pragma once

// Seeded test-function suites. The uniform map is spelled out so that the
// streams are identical across standard libraries.

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include "gravinst/radial_grid.hpp"

namespace gravinst {

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  /// Uniform on [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  double uniform(double a, double b) { return a + (b - a) * uniform(); }

 private:
  std::mt19937_64 engine_;
};

/// r exp(-((r-c)/w)^2): vanishes linearly at the origin like the growing mode.
struct Bump {
  double center = 0.0;
  double width = 1.0;
  double amplitude = 1.0;

  double operator()(double r) const {
    const double z = (r - center) / width;
    return amplitude * r * std::exp(-z * z);
  }
};

inline Bump random_bump(Rng& rng) {
  Bump b;
  b.center = rng.uniform(0.0, 6.0);
  b.width = rng.uniform(0.5, 3.0);
  b.amplitude = rng.uniform(-1.0, 1.0);
  return b;
}

/// Sum of `count` random bumps, zero at both ends of the grid.
inline GridFunction random_smooth_field(const GridPtr& grid, Rng& rng, int count = 3) {
  std::vector<Bump> bumps;
  for (int k = 0; k < count; ++k) bumps.push_back(random_bump(rng));
  auto f = GridFunction::sample(grid, [&](double r) {
    double s = 0.0;
    for (const auto& b : bumps) s += b(r);
    return s;
  });
  f[f.size() - 1] = 0.0;
  return f;
}

}  // namespace gravinst
