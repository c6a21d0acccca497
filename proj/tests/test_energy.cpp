#include <catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>

#include "gravinst/checks.hpp"
#include "gravinst/energy.hpp"
#include "gravinst/random.hpp"

using namespace gravinst;
using Catch::Approx;

TEST_CASE("default l-grid") {
  const auto ls = default_l_grid();
  CHECK(ls.size() == 13);
  CHECK(std::count(ls.begin(), ls.end(), -6.0 / 5.0) == 1);
  CHECK(std::find(ls.begin(), ls.end(), -7.0 / 5.0) != ls.end());
  CHECK(std::find(ls.begin(), ls.end(), -8.0 / 5.0) != ls.end());
  CHECK(ls.front() == 0.0);
}

TEST_CASE("physical energy of the steady state") {
  auto g = make_grid(100.0, 2001);
  const auto ss = build_steady_state(g);
  const FluidState rest{0.0, GridFunction(g), GridFunction(g)};
  CHECK(physical_energy(rest, ss) == Approx(kPi * kPi * kPi / 9.0).epsilon(1e-4));
}

TEST_CASE("symmetrized energy closed form") {
  // sigma = s = rho0, v = 0, l = 0: pi^3 / (15 2^{4/5})
  auto g = make_grid(100.0, 2001);
  const auto ss = build_steady_state(g);
  const std::vector<double> zero(g->size(), 0.0);
  const double e = symmetrized_energy(ss.rho0.values(), ss.rho0.values(), zero, ss, 0.0);
  CHECK(e == Approx(kPi * kPi * kPi / (15.0 * std::pow(2.0, 0.8))).epsilon(1e-4));
}

TEST_CASE("history differences are exact for quadratic rates") {
  auto g = make_grid(10.0, 11);
  DerivativeHistory hist(0.1);
  CHECK_THROWS_AS(hist.derivative(0), InsufficientHistory);
  for (int k = 0; k < 4; ++k) {
    const double t = 0.1 * k;
    FluidState s{t, GridFunction(g), GridFunction(g)};
    FluidRates r{GridFunction::sample(g, [&](double) { return t * t; }),
                 GridFunction::sample(g, [&](double x) { return x * t; })};
    hist.push(s, r);
    if (k == 1) CHECK_THROWS_AS(hist.derivative(2), InsufficientHistory);
  }
  const auto [s2, v2] = hist.derivative(2);
  const auto [s3, v3] = hist.derivative(3);
  CHECK(s2[0] == Approx(2.0 * 0.3).epsilon(1e-12));
  CHECK(v2[5] == Approx(g->r(5)).epsilon(1e-12));
  CHECK(s3[0] == Approx(2.0).epsilon(1e-9));
  CHECK(v3[5] == Approx(0.0).margin(1e-9));
  CHECK_THROWS_AS(hist.derivative(4), InvalidArgument);

  FluidState late{0.55, GridFunction(g), GridFunction(g)};
  CHECK_THROWS_AS(hist.push(late, {GridFunction(g), GridFunction(g)}), InvalidArgument);
}

TEST_CASE("total energy contains the instant energy on its diagonal") {
  auto g = make_grid(100.0, 501);
  const auto ss = build_steady_state(g);
  DerivativeHistory hist(0.05);
  Rng rng(5);
  const auto a = times(random_smooth_field(g, rng), ss.rho0), b = random_smooth_field(g, rng);
  for (int k = 0; k < 4; ++k) {
    const double t = 0.05 * k;
    FluidState s{t, 1e-3 * std::cos(t) * a, 1e-3 * std::sin(t) * b};
    FluidRates r{-1e-3 * std::sin(t) * a, 1e-3 * std::cos(t) * b};
    hist.push(s, r);
  }
  for (double l : default_l_grid()) {
    const auto e = instant_energy(hist, ss, l, 3);
    const auto tab = total_energy(hist, ss, l, 3);
    double se = 0.0, st = 0.0;
    for (int j = 0; j <= 3; ++j) {
      REQUIRE(tab[j].size() == static_cast<std::size_t>(j + 1));
      CHECK(tab[j][0] == e[j]);
      se += e[j];
      for (double x : tab[j]) st += x;
    }
    CHECK(se <= st);
  }
}

TEST_CASE("smallness suprema") {
  auto g = make_grid(10.0, 101);
  const auto ss = build_steady_state(g);
  const FluidState rest{0.0, GridFunction(g), GridFunction(g)};
  const FluidRates still{GridFunction(g), GridFunction(g)};
  for (double x : smallness_monitor(rest, still, ss).as_vector()) CHECK(x == 0.0);
  // u = r is a uniform expansion with velocity gradient norm sqrt(3)
  const FluidState expand{0.0, GridFunction(g), GridFunction::sample(g, [](double r) { return r; })};
  CHECK(smallness_monitor(expand, still, ss).grad_u == Approx(std::sqrt(3.0)).epsilon(1e-10));
}

TEST_CASE("weighted GN inequality on random bumps") {
  auto g = make_grid(100.0, 4001);
  Rng rng(1234);
  double worst = 0.0;
  for (int k = 0; k < 100; ++k) {
    const double c = rng.uniform(0.0, 6.0), w = rng.uniform(0.5, 3.0), s = rng.uniform(-0.5, 0.5);
    const auto f = GridFunction::sample(g, [&](double r) {
      const double z = (r - c) / w;
      return (1.0 + s * r) * std::exp(-z * z);
    });
    const double ratio = gn_check(f, 0.0, 0.0, 0.0).ratio;
    worst = std::max(worst, ratio);
    CHECK(gn_check(2.0 * f, 0.0, 0.0, 0.0).ratio == Approx(ratio).epsilon(1e-14));
  }
  CHECK(worst <= 2.0 * kGnOracleBound);
}

TEST_CASE("GN check at the lattice maximizer matches the oracle") {
  auto g = make_grid(100.0, 4001);
  const auto f = GridFunction::sample(g, [](double r) { return (1.0 - 0.5 * r) * std::exp(-4.0 * r * r); });
  CHECK(gn_check(f, 0.0, 0.0, 0.0).ratio == Approx(kGnOracleBound).epsilon(1e-4));
}

TEST_CASE("GN edge cases") {
  auto g = make_grid(100.0, 401);
  const auto zero = gn_check(GridFunction(g), 0.0, 0.0, 0.0);
  CHECK(zero.lhs == 0.0);
  CHECK(zero.rhs == 0.0);
  CHECK(zero.ratio == 0.0);
  const auto f = GridFunction::sample(g, [](double r) { return std::exp(-r * r); });
  CHECK_THROWS_AS(gn_check(f, 1.0, 0.0, 0.0), InvalidArgument);
  CHECK_NOTHROW(gn_check(f, 1.0, 0.5, 0.5));
  CHECK_NOTHROW(gn_check(f, -1.0, -1.0, 1.0, 0.0, -2.0));
}
