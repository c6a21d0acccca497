#include <catch_amalgamated.hpp>

#include <cmath>
#include <numbers>

#include "gravinst/radial_grid.hpp"

using namespace gravinst;
using Catch::Approx;

TEST_CASE("standard stretch puts the middle node at r = 5") {
  auto g = make_grid(100.0, 2001);
  REQUIRE(g->size() == 2001);
  CHECK(g->r(0) == 0.0);
  CHECK(g->r(2000) == 100.0);
  CHECK(g->r(1000) == Approx(5.0).epsilon(1e-12));
  for (std::size_t i = 1; i < g->size(); ++i) REQUIRE(g->r(i) > g->r(i - 1));
  CHECK(g->stretch().kind == Stretch::Kind::sinh);
}

TEST_CASE("small domains fall back to a uniform grid") {
  auto g = make_grid(8.0, 9);
  CHECK(g->stretch().kind == Stretch::Kind::uniform);
  for (std::size_t i = 0; i < 9; ++i) CHECK(g->r(i) == Approx(double(i)));
}

TEST_CASE("invalid grids are rejected") {
  CHECK_THROWS_AS(make_grid(100.0, 7), InvalidArgument);
  CHECK_THROWS_AS(make_grid(0.0, 100), InvalidArgument);
  CHECK_THROWS_AS(make_grid(-1.0, 100), InvalidArgument);
  CHECK_THROWS_AS(make_grid(100.0, 100, Stretch::sinh(0.0)), InvalidArgument);
}

TEST_CASE("cell weights and volumes tile the domain") {
  auto g = make_grid(50.0, 301);
  double w = 0.0, v = 0.0;
  for (std::size_t i = 0; i < g->size(); ++i) w += g->weights()[i], v += g->volumes()[i];
  CHECK(w == Approx(50.0).epsilon(1e-13));
  CHECK(v == Approx(50.0 * 50.0 * 50.0 / 3.0).epsilon(1e-13));
}

TEST_CASE("refinement keeps the old nodes") {
  auto g = make_grid(100.0, 201);
  auto f = refined(*g);
  REQUIRE(f->size() == 401);
  for (std::size_t i = 0; i < g->size(); ++i) CHECK(f->r(2 * i) == g->r(i));
}

TEST_CASE("extension keeps the core length and spacing") {
  auto g = make_grid(100.0, 2001);
  auto e = extended(*g, 200.0);
  CHECK(e->r_max() == 200.0);
  CHECK(e->stretch().scale == g->stretch().scale);
  CHECK(e->size() > g->size());
  CHECK(e->r(1) == Approx(g->r(1)).epsilon(1e-3));
}

TEST_CASE("grid functions reject non-finite data and foreign grids") {
  auto g = make_grid(10.0, 11);
  auto h = make_grid(10.0, 11);
  std::vector<double> bad(11, 0.0);
  bad[3] = std::nan("");
  CHECK_THROWS_AS(GridFunction(g, bad), InvalidArgument);
  CHECK_THROWS_AS(GridFunction(g, std::vector<double>(5, 0.0)), InvalidArgument);
  GridFunction a(g), b(h);
  CHECK_NOTHROW(a + b);  // same nodes on a different grid object
  auto k = make_grid(10.0, 21);
  CHECK_THROWS_AS(a + GridFunction(k), GridMismatch);
}

TEST_CASE("half-line integrals with the algebraic tail") {
  auto g = make_grid(100.0, 2001);
  // integral of r^2 (1+r^2)^-5/2 over the half line is 1/3
  auto f = GridFunction::sample(g, [](double r) { return r * r * std::pow(1.0 + r * r, -2.5); });
  CHECK(integrate_half_line(f) == Approx(1.0 / 3.0).epsilon(1e-5));
  // integral of r^2 (1+r^2)^-2 is pi/4
  auto q = GridFunction::sample(g, [](double r) { return r * r * std::pow(1.0 + r * r, -2.0); });
  CHECK(integrate_half_line(q) == Approx(std::numbers::pi / 4.0).epsilon(1e-5));
}

TEST_CASE("algebraic tail is exact for a pure power") {
  // integral of r^-3 from 10 is 1/200
  CHECK(algebraic_tail(9.0, std::pow(9.0, -3.0), 10.0, 1e-3, 10.0) == Approx(1.0 / 200.0).epsilon(1e-13));
  CHECK(algebraic_tail(9.0, 1.0, 10.0, 0.0, 10.0) == 0.0);
  CHECK_THROWS_AS(algebraic_tail(9.0, -1.0, 10.0, 1.0, 10.0), DegenerateInput);
  CHECK_THROWS_AS(algebraic_tail(9.0, 1.0 / 9.0, 10.0, 0.1, 10.0), DegenerateInput);  // 1/r
}

TEST_CASE("volume quadrature and flux divergence are consistent") {
  auto g = make_grid(30.0, 301);
  auto one = GridFunction::sample(g, [](double) { return 1.0; });
  CHECK(integrate_volume(one) == Approx(9000.0).epsilon(1e-13));
  // F = f^3 / 3 has divergence 1 cell by cell
  std::vector<double> flux(g->size()), div(g->size());
  for (std::size_t i = 0; i < g->size(); ++i) flux[i] = std::pow(g->faces()[i], 3) / 3.0;
  flux_divergence(flux, *g, div);
  for (double d : div) CHECK(d == Approx(1.0).epsilon(1e-10));
}

TEST_CASE("ddr is exact for quadratics on a stretched grid") {
  auto g = make_grid(100.0, 401);
  auto f = GridFunction::sample(g, [](double r) { return 3.0 * r * r - 2.0 * r + 1.0; });
  const auto d = ddr(f);
  for (std::size_t i = 0; i < g->size(); ++i) {
    CHECK(d[i] == Approx(6.0 * g->r(i) - 2.0).margin(1e-9 * (1.0 + g->r(i))));
  }
}
