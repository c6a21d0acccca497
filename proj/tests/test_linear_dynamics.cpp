#include <catch_amalgamated.hpp>

#include <cmath>

#include "gravinst/linear_dynamics.hpp"
#include "gravinst/random.hpp"

using namespace gravinst;
using Catch::Approx;

namespace {

struct Setup {
  GridPtr g = make_grid(100.0, 2001);
  SteadyState ss = build_steady_state(g);
  EigenPencil pen = assemble_pencil(ss);
  EigenPair ep = largest_eigenpair(pen, ss);
};

const Setup& setup() {
  static const Setup s;
  return s;
}

}  // namespace

TEST_CASE("weight family") {
  const auto& s = setup();
  CHECK(weight_id(-1.0) == "W-1");
  CHECK(weight_id(-0.5) == "W-0.5");
  const auto fam = make_weight_family(s.ss, {-1.0, -2.0});
  CHECK_NOTHROW(fam.get("W0"));
  CHECK_THROWS_AS(fam.get("W7"), InvalidArgument);
  // W_{-1} = (15/4pi) r^2
  const auto& w = fam.get("W-1");
  CHECK(w[1000] == Approx(15.0 / (4.0 * kPi) * 25.0).epsilon(1e-12));
}

TEST_CASE("P functional of the square-root trial function") {
  auto g = make_grid(200.0, 4000);
  CHECK(p_functional(GridFunction::sample(g, [](double r) { return std::sqrt(r); })) ==
        Approx(19.0 / 48.0).epsilon(1e-3));
}

TEST_CASE("continuity part of the linear operator reproduces the eigen relation") {
  const auto& s = setup();
  const auto rates = linear_rhs(s.ep.phi0, s.ep.psi0, s.ss);
  const double w = s.ep.omega();
  for (std::size_t i = 0; i < s.g->size(); ++i) {
    CHECK(rates.dPhi[i] == Approx(w * s.ep.phi0[i]).margin(1e-10 * s.ep.phi0.max_abs()));
  }
  CHECK(rates.dPsi[0] == 0.0);
  CHECK(rates.dPsi[s.g->size() - 1] == 0.0);
}

TEST_CASE("eigenmode grows at sqrt(mu0) in the wave evolution") {
  const auto& s = setup();
  const double w = s.ep.omega();
  const auto fam = make_weight_family(s.ss, {-1.0, -2.0});
  const double dt = default_wave_dt(s.pen);
  const LinearState init{0.0, s.ep.psi0, w * s.ep.psi0, s.ep.phi0};
  const auto tr = evolve_wave(s.pen, fam, init, 8.0, dt, 10);
  CHECK(measured_growth_rate(tr).rate == Approx(w).epsilon(1e-5));
  CHECK(std::abs(tr.samples.back().energy - tr.samples.front().energy) < 1e-8);
  for (std::size_t k = 0; k < 2; ++k) CHECK(measured_weighted_rate(tr, k).rate == Approx(w).epsilon(1e-4));
}

TEST_CASE("random data never outgrow the principal rate") {
  const auto& s = setup();
  const double w = s.ep.omega();
  const auto fam = make_weight_family(s.ss, {-1.0, -2.0});
  const double dt = default_wave_dt(s.pen);
  Rng rng(11);
  for (int k = 0; k < 3; ++k) {
    const LinearState init{0.0, random_smooth_field(s.g, rng), random_smooth_field(s.g, rng), GridFunction(s.g)};
    const auto tr = evolve_wave(s.pen, fam, init, 30.0, dt, 20);
    CHECK(measured_growth_rate(tr).rate <= 1.01 * w);
  }
}

TEST_CASE("oversized time step is detected") {
  const auto& s = setup();
  const auto fam = make_weight_family(s.ss, {});
  Rng rng(3);
  const LinearState init{0.0, random_smooth_field(s.g, rng), GridFunction(s.g), GridFunction(s.g)};
  CHECK_THROWS_AS(evolve_wave(s.pen, fam, init, 5.0, 10.0 * default_wave_dt(s.pen), 1), InstabilityDetected);
  CHECK_THROWS_AS(evolve_wave(s.pen, fam, init, 5.0, 0.0, 1), InvalidArgument);
}

TEST_CASE("first-order system follows the exponential") {
  const auto& s = setup();
  const double w = s.ep.omega();
  const LinearState init{0.0, s.ep.psi0, GridFunction(s.g), s.ep.phi0};
  const auto run = evolve_first_order(init, s.ss, 2.0, first_order_dt(*s.g, 0.5), 100);
  CHECK(run.sqrtE.back() / run.sqrtE.front() == Approx(std::exp(2.0 * w)).epsilon(1e-3));
}

TEST_CASE("rate fit") {
  std::vector<double> t, v;
  for (int k = 0; k < 30; ++k) t.push_back(0.1 * k), v.push_back(3.0 * std::exp(0.7 * 0.1 * k));
  const auto fit = fit_growth_rate(t, v);
  CHECK(fit.rate == Approx(0.7).epsilon(1e-12));
  CHECK(fit.residual < 1e-12);
  CHECK_THROWS_AS(fit_growth_rate({0, 1, 2}, {1, 2, 3}), DegenerateInput);
  v[29] = 0.0;
  CHECK_THROWS_AS(fit_growth_rate(t, v), DegenerateInput);
}
