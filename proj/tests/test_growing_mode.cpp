#include <catch_amalgamated.hpp>

#include <Eigen/Dense>
#include <cmath>

#include "gravinst/growing_mode.hpp"
#include "gravinst/random.hpp"

using namespace gravinst;
using Catch::Approx;

TEST_CASE("coefficients") {
  CHECK(coef::p(1.0) == Approx(0.125).epsilon(1e-15));
  CHECK(coef::q(0.0) == -2.0);
  CHECK(coef::w0(1.0) == Approx(15.0 / (4.0 * kPi) * std::pow(2.0, -2.5)));
}

TEST_CASE("square-root trial function") {
  auto g = make_grid(200.0, 4000);
  const auto ss = build_steady_state(g);
  const auto psi = GridFunction::sample(g, [](double r) { return std::sqrt(r); });
  const auto qi = rayleigh_quotient(psi, ss);
  CHECK(qi.Q == Approx(5.0 / 48.0).epsilon(1e-3));
  CHECK(qi.I == Approx(5.0 / (2.0 * kPi)).epsilon(1e-3));
  CHECK(qi.ratio() == Approx(kPi / 24.0).epsilon(2e-3));
  CHECK(rayleigh_quotient(7.0 * psi, ss).ratio() == Approx(qi.ratio()).epsilon(1e-14));
  CHECK_THROWS_AS(rayleigh_quotient(GridFunction(g), ss), DegenerateInput);
}

TEST_CASE("principal eigenvalue agrees with a dense generalized solve") {
  auto g = make_grid(100.0, 201);
  const auto ss = build_steady_state(g);
  const auto pen = assemble_pencil(ss);
  const std::size_t m = pen.size() - 2;
  Eigen::MatrixXd K = Eigen::MatrixXd::Zero(m, m), M = Eigen::MatrixXd::Zero(m, m);
  for (std::size_t i = 0; i < m; ++i) {
    K(i, i) = pen.diag[i + 1];
    M(i, i) = pen.mass[i + 1];
    if (i + 1 < m) K(i, i + 1) = K(i + 1, i) = pen.off[i + 1];
  }
  Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> es(K, M);
  const double dense = es.eigenvalues().maxCoeff();
  const auto ep = largest_eigenpair(pen, ss);
  CHECK(ep.mu0 == Approx(dense).epsilon(1e-10));
  // Sturm count: exactly one eigenvalue above a point just below mu0
  CHECK(count_above(pen, 0.999 * ep.mu0) == 1);
  CHECK(count_above(pen, 1.001 * ep.mu0) == 0);
}

TEST_CASE("growing mode at the default resolution") {
  auto g = make_grid(100.0, 2001);
  const auto ss = build_steady_state(g);
  const auto ep = largest_eigenpair(ss);
  CHECK(ep.mu0 == Approx(0.2818404).epsilon(1e-6));
  CHECK(ep.mu0 >= kPi / 24.0);
  CHECK(ep.residual_norm <= 1e-8);
  CHECK(ep.normalization == Approx(1.0).epsilon(1e-10));
  CHECK(rayleigh_quotient(ep.psi0, ss).ratio() == Approx(ep.mu0).epsilon(1e-10));
  for (std::size_t i = 1; i + 1 < g->size(); ++i) REQUIRE(ep.psi0[i] > 0.0);
  CHECK(ep.psi0[0] == 0.0);
  CHECK(ep.psi0[g->size() - 1] == 0.0);
}

TEST_CASE("eigenvalue converges at second order in the node count") {
  double mu[3];
  std::size_t n = 1001;
  for (double& m : mu) {
    m = largest_eigenpair(build_steady_state(make_grid(100.0, n))).mu0;
    n = 2 * n - 1;
  }
  const double order = std::log2((mu[0] - mu[1]) / (mu[1] - mu[2]));
  CHECK(order == Approx(2.0).margin(0.1));
}

TEST_CASE("no trial function beats the principal eigenvalue") {
  auto g = make_grid(100.0, 1001);
  const auto ss = build_steady_state(g);
  const double mu0 = largest_eigenpair(ss).mu0;
  Rng rng(7);
  for (int k = 0; k < 30; ++k) {
    const auto f = random_smooth_field(g, rng);
    if (f.max_abs() == 0.0) continue;
    CHECK(rayleigh_quotient(f, ss).ratio() <= mu0 + 1e-6);
  }
}

TEST_CASE("origin behaviour follows the series solution") {
  auto g = make_grid(100.0, 4001);
  const auto ss = build_steady_state(g);
  const auto ep = largest_eigenpair(ss);
  const auto fit = origin_slope(ep.psi0);
  CHECK_FALSE(fit.nonlinear_flag);
  CHECK(fit.slope > 0.0);
  // 10 c + 2 a = (15/4pi) mu0 a from the power series at r = 0
  const double series = (15.0 * ep.mu0 / (4.0 * kPi) - 2.0) / 10.0;
  CHECK(fit.curvature / fit.slope == Approx(series).epsilon(2e-3));
  for (std::size_t i = fit.first; i <= fit.last; ++i) {
    const double r = g->r(i);
    CHECK(std::abs(ep.psi0[i] / r - fit.slope) <= 2.0 * std::abs(fit.curvature) * r * r);
  }
}

TEST_CASE("density eigenfunction") {
  auto g = make_grid(100.0, 1001);
  const auto ss = build_steady_state(g);
  const auto ep = largest_eigenpair(ss);
  CHECK(ep.phi0.all_finite());
  CHECK(ep.phi0[0] < 0.0);  // outward velocity drains the centre
  CHECK_THROWS_AS(density_eigenfunction(ep.psi0, 0.0, ss), InvalidArgument);
  CHECK_THROWS_AS(density_eigenfunction(ep.psi0, -1.0, ss), InvalidArgument);
}

TEST_CASE("moments are finite and insensitive to the outer radius") {
  auto g = make_grid(100.0, 2001);
  const auto a = moment_table(largest_eigenpair(build_steady_state(g)).psi0, 6);
  const auto b = moment_table(largest_eigenpair(build_steady_state(extended(*g, 200.0))).psi0, 6);
  REQUIRE(a.size() == 7);
  for (std::size_t n = 0; n < a.size(); ++n) {
    CHECK(std::isfinite(a[n].M));
    CHECK(std::isfinite(a[n].D));
    CHECK(b[n].M == Approx(a[n].M).epsilon(1e-2));
    CHECK(b[n].D == Approx(a[n].D).epsilon(1e-2));
  }
  CHECK_THROWS_AS(moment_table(GridFunction(g), 9), InvalidArgument);
}

TEST_CASE("weighted growth bounds") {
  auto g = make_grid(100.0, 1001);
  const auto ss = build_steady_state(g);
  const auto pen = assemble_pencil(ss);
  const double mu0 = largest_eigenpair(pen, ss).mu0;
  CHECK(weighted_growth_bound(pen, ss, 0.0) == Approx(mu0).epsilon(1e-12));
  const double m1 = weighted_growth_bound(pen, ss, -1.0);
  const double m2 = weighted_growth_bound(pen, ss, -2.0);
  CHECK(m1 < mu0);
  CHECK(m2 < mu0);
  CHECK(m1 == Approx(mu0).epsilon(1e-3));
  CHECK_THROWS_AS(weighted_growth_bound(pen, ss, 0.5), InvalidArgument);
  CHECK_THROWS_AS(weighted_growth_bound(pen, ss, -1.0, 0.0), InvalidArgument);
}
