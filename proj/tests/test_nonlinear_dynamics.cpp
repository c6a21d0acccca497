#include <catch_amalgamated.hpp>

#include <cmath>

#include "gravinst/linear_dynamics.hpp"
#include "gravinst/nonlinear_dynamics.hpp"

using namespace gravinst;
using Catch::Approx;

namespace {

struct Setup {
  GridPtr g = make_grid(100.0, 1001);
  SteadyState ss = build_steady_state(g);
  EigenPair ep = largest_eigenpair(ss);
};

const Setup& setup() {
  static const Setup s;
  return s;
}

}  // namespace

TEST_CASE("steady state is preserved exactly by the balanced scheme") {
  const auto& s = setup();
  NonlinearOperator op(s.ss);
  const FluidState rest{0.0, GridFunction(s.g), GridFunction(s.g)};
  const auto run = evolve(rest, op, {2.0, 0.9, 0.5});
  CHECK(run.final.t == 2.0);
  CHECK(run.final.sigma.max_abs() == 0.0);
  CHECK(run.final.u.max_abs() == 0.0);
  CHECK(run.samples.size() == 5);
}

TEST_CASE("the unbalanced form drifts off the steady state") {
  const auto& s = setup();
  NonlinearOperator op(s.ss, {false, 0.0});
  const FluidState rest{0.0, GridFunction(s.g), GridFunction(s.g)};
  const auto run = evolve(rest, op, {0.5, 0.9, 0.5});
  CHECK(run.final.sigma.max_abs() > 0.0);
}

TEST_CASE("small amplitudes reduce to the linear operator") {
  const auto& s = setup();
  const double d = 1e-6;
  const FluidState st{0.0, d * s.ep.phi0, d * s.ep.psi0};
  const auto nl = nonlinear_rhs(st, s.ss);
  const auto lin = linear_rhs(d * s.ep.phi0, d * s.ep.psi0, s.ss);
  const double scale = std::max(lin.dPhi.max_abs(), lin.dPsi.max_abs());
  double gap = 0.0;
  for (std::size_t i = 0; i < s.g->size(); ++i) {
    gap = std::max({gap, std::abs(nl.dsigma[i] - lin.dPhi[i]), std::abs(nl.du[i] - lin.dPsi[i])});
  }
  CHECK(gap <= 1e-4 * scale);
}

TEST_CASE("seeded data have the requested energy") {
  const auto& s = setup();
  // the normalization is linear; E_0^0 carries an O(delta) correction through rho0 + sigma
  const auto tiny = seed_initial_data(s.ep, 1e-7, s.ss);
  CHECK(std::sqrt(energy00(tiny.sigma.values(), tiny.u.values(), s.ss)) == Approx(1e-7).epsilon(1e-6));
  const auto st = seed_initial_data(s.ep, 1e-3, s.ss);
  CHECK(std::sqrt(energy00(st.sigma.values(), st.u.values(), s.ss)) == Approx(1e-3).epsilon(1e-3));
  CHECK(guard_holds(st.sigma.values(), s.ss));
  CHECK_THROWS_AS(seed_initial_data(s.ep, 10.0, s.ss), GuardViolated);
  CHECK_THROWS_AS(seed_initial_data(s.ep, -1.0, s.ss), InvalidArgument);
}

TEST_CASE("guard ratios") {
  const auto& s = setup();
  auto sigma = 0.05 * s.ss.rho0;
  auto [lo, hi] = guard_ratios(sigma.values(), s.ss);
  CHECK(lo == Approx(1.05));
  CHECK(hi == Approx(1.05));
  sigma[10] = -0.2 * s.ss.rho0[10];
  CHECK_FALSE(guard_holds(sigma.values(), s.ss));
}

TEST_CASE("escape time from a seeded growing mode") {
  const auto& s = setup();
  const auto at_theta = escape_time(s.ep, s.ss, 1e-2, 1e-2, 20.0);
  REQUIRE(at_theta.T_escape);
  CHECK(*at_theta.T_escape == 0.0);
  CHECK_THROWS_AS(escape_time(s.ep, s.ss, 2e-2, 1e-2, 20.0), InvalidArgument);
  CHECK_THROWS_AS(escape_time(s.ep, s.ss, 0.0, 1e-2, 20.0), InvalidArgument);

  const auto r = escape_time(s.ep, s.ss, 1e-3, 1e-2, 20.0);
  REQUIRE(r.T_escape);
  CHECK_FALSE(r.guard_tripped);
  CHECK(r.max_mass_defect <= 1e-12);
  // linear prediction ln(theta/delta)/sqrt(mu0) plus a small nonlinear delay
  const double linear = std::log(10.0) / s.ep.omega();
  CHECK(*r.T_escape == Approx(linear).epsilon(1e-2));
  CHECK(*r.T_escape > linear);
}

TEST_CASE("time-step settings are validated") {
  const auto& s = setup();
  NonlinearOperator op(s.ss);
  const FluidState rest{0.0, GridFunction(s.g), GridFunction(s.g)};
  CHECK_THROWS_AS(evolve(rest, op, {1.0, 0.95, 0.1}), InvalidArgument);
  CHECK_THROWS_AS(evolve(rest, op, {1.0, 0.0, 0.1}), InvalidArgument);
  CHECK_THROWS_AS(evolve(rest, op, {1.0, 0.5, 0.0}), InvalidArgument);
}

TEST_CASE("a run stops cleanly at the density guard") {
  const auto& s = setup();
  NonlinearOperator op(s.ss);
  const auto run = evolve(seed_initial_data(s.ep, 1e-2, s.ss), op, {40.0, 0.9, 0.1});
  CHECK(run.guard_tripped);
  CHECK(run.final.t < 40.0);
  CHECK(guard_holds(run.final.sigma.values(), s.ss));
}
