#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <vector>

#include "hkbary/measure.hpp"
#include "oracles.hpp"

using namespace hkbary;

namespace {

GridPtr unit_grid(std::size_t n) {
  const Interval b{0.0, 1.0};
  return make_grid(1, std::span(&b, 1), n);
}

}  // namespace

TEST_CASE("grid construction") {
  const Interval unit{0.0, 1.0};
  const auto g2 = GroundGrid::build(1, std::span(&unit, 1), 2);
  REQUIRE(g2.size() == 2);
  CHECK(g2.point(0)[0] == 0.0);
  CHECK(g2.point(1)[0] == 1.0);

  const auto g200 = GroundGrid::build(1, std::span(&unit, 1), 200);
  CHECK(g200.size() == 200);
  CHECK(g200.spacing(0) == doctest::Approx(1.0 / 199).epsilon(1e-15));
  for (std::size_t k = 1; k < 200; ++k) {
    CHECK(g200.coordinate(0, k) - g200.coordinate(0, k - 1) == doctest::Approx(1.0 / 199));
  }
  CHECK(g200.coordinate(0, 199) == 1.0);

  const Interval box[2] = {{0.0, 1.0}, {0.0, 1.0}};
  const auto g3 = GroundGrid::build(2, box, 3);
  REQUIRE(g3.size() == 9);
  CHECK(g3.point(4) == Point{0.5, 0.5});
  CHECK(g3.point(5) == Point{0.5, 1.0});  // ix * n + iy
  CHECK(g3.point(6) == Point{1.0, 0.0});
}

TEST_CASE("grid validation") {
  const Interval unit{0.0, 1.0};
  const Interval flat{1.0, 1.0};
  CHECK_THROWS_AS(GroundGrid::build(1, std::span(&unit, 1), 1), std::invalid_argument);
  CHECK_THROWS_AS(GroundGrid::build(3, std::span(&unit, 1), 5), std::invalid_argument);
  CHECK_THROWS_AS(GroundGrid::build(1, std::span(&flat, 1), 5), std::invalid_argument);
  CHECK_THROWS_AS(GroundGrid::build(2, std::span(&unit, 1), 5), std::invalid_argument);
}

TEST_CASE("nearest grid point") {
  const auto g = unit_grid(11);
  CHECK(g->nearest({0.34, 0}) == 3);
  CHECK(g->nearest({0.36, 0}) == 4);
  CHECK(g->nearest({-5.0, 0}) == 0);
  CHECK(g->nearest({5.0, 0}) == 10);
  CHECK(g->nearest({0.25, 0}) == 2);  // tie goes low
}

TEST_CASE("total mass") {
  const auto g = unit_grid(200);
  CHECK(total_mass(DiscreteMeasure(g)) == 0.0);
  CHECK(total_mass(DiscreteMeasure::dirac(g, 17)) == 1.0);

  std::vector<double> d(200);
  double s = 0.0;
  for (std::size_t i = 0; i < 200; ++i) {
    const double z = (g->coordinate(0, i) - 0.8) / 0.08;
    d[i] = std::exp(-0.5 * z * z);
    s += d[i];
  }
  for (double& v : d) v *= 2.0 / s;
  CHECK(std::abs(total_mass(DiscreteMeasure(g, d)) - 2.0) <= 1e-12);
}

TEST_CASE("measure validation") {
  const auto g = unit_grid(4);
  CHECK_THROWS_AS(DiscreteMeasure(g, {1, -1, 0, 0}), std::invalid_argument);
  CHECK_THROWS_AS(DiscreteMeasure(g, {1, 0, 0}), std::invalid_argument);
  CHECK_THROWS_AS(DiscreteMeasure(g, {1, oracle::inf, 0, 0}), std::invalid_argument);
  const std::pair<std::size_t, double> dup[] = {{1, 1.0}, {1, 2.0}};
  CHECK_THROWS(DiscreteMeasure::from_atoms(g, dup));
  const std::pair<std::size_t, double> atoms[] = {{0, 0.5}, {3, 1.5}};
  const auto m = DiscreteMeasure::from_atoms(g, atoms);
  CHECK(m[3] == 1.5);
  CHECK(m.support() == std::vector<std::size_t>{0, 3});
}

TEST_CASE("support threshold is relative") {
  const auto g = unit_grid(3);
  const DiscreteMeasure m(g, {1.0, 1e-16, 1e-14});
  CHECK(m.support() == std::vector<std::size_t>{0, 2});
}

TEST_CASE("scale_measure") {
  const auto g = unit_grid(5);
  const DiscreteMeasure mu(g, {0.1, 0.2, 0.0, 0.3, 0.4});
  const auto zero = scale_measure(mu, 0.0);
  CHECK(total_mass(zero) == 0.0);
  const auto same = scale_measure(mu, 1.0);
  for (std::size_t i = 0; i < 5; ++i) CHECK(same[i] == mu[i]);
  const auto three = scale_measure(DiscreteMeasure::dirac(g, 2), 3.0);
  CHECK(three[2] == 3.0);
  CHECK(total_mass(three) == 3.0);
  CHECK_THROWS_AS(scale_measure(mu, -1.0), std::invalid_argument);
}

TEST_CASE("scale_measure multiplies total mass") {
  auto rng = oracle::rng(11);
  const auto g = unit_grid(40);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<double> m(40);
    for (double& v : m) v = oracle::uniform(rng, 0.0, 2.0);
    const DiscreteMeasure mu(g, m);
    const double k = oracle::uniform(rng, 0.0, 10.0);
    CHECK(std::abs(total_mass(scale_measure(mu, k)) - k * total_mass(mu)) <=
          1e-12 * std::max(1.0, k * total_mass(mu)));
  }
}

TEST_CASE("density ratios") {
  const auto g = unit_grid(5);
  const DiscreteMeasure mu(g, {0.5, 0.0, 1.0, 2.0, 0.0});

  SUBCASE("identical measures") {
    const auto d = density_ratios(mu, mu);
    for (std::size_t i : {0, 2, 3}) {
      CHECK(d.sigma[i] == 1.0);
      CHECK(d.rho[i] == 1.0);
    }
    CHECK(d.gamma_perp_mass == 0.0);
    CHECK(d.mu_perp_mass == 0.0);
  }
  SUBCASE("double") {
    const auto d = density_ratios(scale_measure(mu, 2.0), mu);
    for (std::size_t i : {0, 2, 3}) {
      CHECK(d.sigma[i] == 2.0);
      CHECK(d.rho[i] == 0.5);
    }
    CHECK(d.gamma_perp_mass == 0.0);
    CHECK(d.mu_perp_mass == 0.0);
  }
  SUBCASE("disjoint Diracs") {
    const auto d = density_ratios(DiscreteMeasure::dirac(g, 0), DiscreteMeasure::dirac(g, 4));
    CHECK(d.gamma_perp_mass == 1.0);
    CHECK(d.mu_perp_mass == 1.0);
  }
  SUBCASE("grid mismatch") {
    CHECK_THROWS_AS(density_ratios(mu, DiscreteMeasure(unit_grid(6))), GridMismatch);
  }
}

TEST_CASE("density decomposition reconstructs both measures") {
  auto rng = oracle::rng(5);
  const auto g = unit_grid(30);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<double> a(30), b(30);
    for (std::size_t i = 0; i < 30; ++i) {
      a[i] = oracle::uniform(rng, 0, 1) < 0.3 ? 0.0 : oracle::uniform(rng, 0, 3);
      b[i] = oracle::uniform(rng, 0, 1) < 0.3 ? 0.0 : oracle::uniform(rng, 0, 3);
    }
    const DiscreteMeasure gamma(g, a), mu(g, b);
    const auto d = density_ratios(gamma, mu);
    for (std::size_t i = 0; i < 30; ++i) {
      CHECK(std::abs(d.sigma[i] * b[i] + d.marginal_perp[i] - a[i]) <= 1e-12);
      CHECK(std::abs(d.rho[i] * a[i] + d.reference_perp[i] - b[i]) <= 1e-12);
    }
  }
}
