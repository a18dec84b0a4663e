#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numbers>

#include "hkbary/cost.hpp"
#include "hkbary/entropy.hpp"
#include "oracles.hpp"

using namespace hkbary;

namespace {

constexpr auto HK = GroundCostKind::HK;
constexpr auto Quad = GroundCostKind::Quadratic;

// -log cos^2(0.25), checked against the oracle below
constexpr double kMidpointLeastCost = 0.06316210249493931;

GridPtr line(double lo, double hi, std::size_t n) {
  const Interval b{lo, hi};
  return make_grid(1, std::span(&b, 1), n);
}

Point at(double x) { return {x, 0.0}; }

}  // namespace

TEST_CASE("ground cost") {
  CHECK(ground_cost(at(0.3), at(0.3), HK) == 0.0);
  CHECK(ground_cost(at(0), at(std::numbers::pi / 3), HK) == doctest::Approx(std::log(4.0)).epsilon(1e-14));
  CHECK(std::isinf(ground_cost(at(0), at(std::numbers::pi / 2), HK)));
  CHECK(ground_cost(at(0), at(0.5), Quad) == 0.25);
  CHECK(ground_cost(Point{0, 0}, Point{0.3, 0.4}, Quad) == doctest::Approx(0.25));
  CHECK(exp_neg(oracle::inf) == 0.0);
}

TEST_CASE("cost matrices") {
  const auto g = line(0, 1, 2);
  const auto c = cost_matrix(*g, *g, HK);
  const double c01 = -std::log(std::cos(1.0) * std::cos(1.0));
  CHECK(c(0, 0) == 0.0);
  CHECK(c(1, 1) == 0.0);
  CHECK(c(0, 1) == doctest::Approx(c01).epsilon(1e-15));
  CHECK(c(1, 0) == c(0, 1));
  CHECK(c(0, 1) == doctest::Approx(1.2312529407720283).epsilon(1e-14));

  const std::vector<Point> a{at(0)}, b{at(2)}, h{at(0.5)};
  CHECK(std::isinf(cost_matrix(a, b, HK)(0, 0)));
  CHECK(cost_matrix(a, h, Quad)(0, 0) == 0.25);

  const Interval box[2] = {{0, 1}, {0, 1}};
  CHECK_THROWS_AS(cost_matrix(*g, GroundGrid::build(2, box, 2), HK), GridMismatch);
}

TEST_CASE("weight validation") {
  const std::vector<double> bad_sum{0.5, 0.6};
  const std::vector<double> negative{1.5, -0.5};
  const std::vector<double> ok{0.25, 0.75};
  CHECK_THROWS_AS(validate_weights(bad_sum), std::invalid_argument);
  CHECK_THROWS_AS(validate_weights(negative), std::invalid_argument);
  CHECK_NOTHROW(validate_weights(ok));
}

TEST_CASE("least cost examples") {
  const std::vector<double> half{0.5, 0.5};

  SUBCASE("coincident inputs") {
    const auto g = line(0, 1, 11);
    const std::vector<Point> xs{at(0.3), at(0.3)};
    const auto lc = least_cost_at(xs, *g, half, HK);
    CHECK(lc.value == 0.0);
    CHECK(lc.argmin_point[0] == doctest::Approx(0.3));
  }
  SUBCASE("quadratic, continuous") {
    const auto g = line(0, 1, 8);  // 0.5 is not a grid point
    const std::vector<Point> xs{at(0), at(1)};
    const auto lc = least_cost_at(xs, *g, half, Quad, {ArgminMode::Continuous});
    const auto ref = oracle::least_cost_1d({0, 1}, half, false, 0, 1);
    CHECK(lc.argmin_point[0] == doctest::Approx(ref.arg).epsilon(1e-7));
    CHECK(lc.argmin_point[0] == 0.5);
    CHECK(lc.value == doctest::Approx(0.25).epsilon(1e-14));
  }
  SUBCASE("HK midpoint, continuous") {
    const auto g = line(0, 1, 11);
    const std::vector<Point> xs{at(0), at(0.5)};
    const auto lc = least_cost_at(xs, *g, half, HK, {ArgminMode::Continuous});
    const auto ref = oracle::least_cost_1d({0, 0.5}, half, true, 0, 1);
    CHECK(std::abs(ref.arg - 0.25) <= 1e-6);
    CHECK(std::abs(ref.value - kMidpointLeastCost) <= 1e-14);
    CHECK(std::abs(lc.argmin_point[0] - 0.25) <= 1e-6);
    CHECK(std::abs(lc.value - kMidpointLeastCost) <= 1e-12);
  }
  SUBCASE("far-apart inputs are infeasible") {
    const auto g = line(0, 5, 51);
    const std::vector<Point> xs{at(0), at(4)};
    const auto lc = least_cost_at(xs, *g, half, HK);
    CHECK_FALSE(lc.feasible);
    CHECK(std::isinf(lc.value));
  }
}

TEST_CASE("least cost table against per-candidate costs") {
  auto rng = oracle::rng(3);
  const auto g = line(0, 1, 25);
  std::vector<std::vector<Point>> axes(3);
  for (auto& ax : axes) {
    for (int k = 0; k < 5; ++k) ax.push_back(at(oracle::uniform(rng, 0, 1)));
  }
  const std::vector<double> lambdas{0.2, 0.3, 0.5};
  for (auto kind : {HK, Quad}) {
    const auto table = least_cost_table(axes, g, lambdas, kind);
    for (std::size_t e = 0; e < table.size(); ++e) {
      const auto xs = table.tuple_points(e);
      double lowest = oracle::inf;
      for (std::size_t j = 0; j < g->size(); ++j) {
        const double v = weighted_cost(xs, lambdas, g->point(j), kind);
        CHECK(table.values[e] <= v);
        lowest = std::min(lowest, v);
      }
      CHECK(table.values[e] == lowest);
      CHECK(weighted_cost(xs, lambdas, g->point(table.argmin_index[e]), kind) == table.values[e]);
    }
  }
}

TEST_CASE("argmin ties resolve to the lowest index") {
  const auto g = line(0, 1, 11);
  const std::vector<Point> xs{at(0), at(0.5)};
  const std::vector<double> half{0.5, 0.5};
  const auto lc = least_cost_at(xs, *g, half, HK);
  CHECK(lc.argmin_index == 2);  // 0.2 and 0.3 cost the same
}

TEST_CASE("refine_argmin") {
  const auto g = line(0, 1, 11);
  const std::vector<double> half{0.5, 0.5};
  SUBCASE("coincident") {
    const std::vector<std::vector<Point>> axes{{at(0.6)}, {at(0.6)}};
    const auto table = least_cost_table(axes, g, half, HK);
    const std::size_t tuple[] = {0, 0};
    const auto [p, v] = refine_argmin(table, tuple, 10);
    CHECK(p[0] == doctest::Approx(0.6));
    CHECK(v == 0.0);
  }
  SUBCASE("HK midpoint") {
    const std::vector<std::vector<Point>> axes{{at(0)}, {at(0.5)}};
    const auto table = least_cost_table(axes, g, half, HK);
    const std::size_t tuple[] = {0, 0};
    const auto [p, v] = refine_argmin(table, tuple, 10);
    CHECK(std::abs(p[0] - 0.25) <= 1e-6);
    CHECK(std::abs(v - kMidpointLeastCost) <= 1e-12);
  }
  SUBCASE("quadratic analytic") {
    const std::vector<double> w{0.3, 0.7};
    const std::vector<std::vector<Point>> axes{{at(0.1)}, {at(0.73)}};
    const auto table = least_cost_table(axes, g, w, Quad);
    const std::size_t tuple[] = {0, 0};
    const auto [p, v] = refine_argmin(table, tuple, 40);
    CHECK(std::abs(p[0] - (0.3 * 0.1 + 0.7 * 0.73)) <= 1e-9);
  }
  SUBCASE("infeasible tuple") {
    const auto wide = line(0, 5, 11);
    const std::vector<std::vector<Point>> axes{{at(0)}, {at(4)}};
    const auto table = least_cost_table(axes, wide, half, HK);
    const std::size_t tuple[] = {0, 0};
    CHECK_THROWS_AS(refine_argmin(table, tuple, 5), std::invalid_argument);
  }
}

TEST_CASE("two-dimensional least cost") {
  const Interval box[2] = {{0, 1}, {0, 1}};
  const auto g = make_grid(2, box, 21);
  const std::vector<Point> xs{{0.1, 0.2}, {0.5, 0.6}, {0.9, 0.1}};
  const std::vector<double> w{0.25, 0.25, 0.5};
  const auto lc = least_cost_at(xs, *g, w, Quad, {ArgminMode::Continuous});
  CHECK(lc.argmin_point[0] == doctest::Approx(0.6));
  CHECK(lc.argmin_point[1] == doctest::Approx(0.25));
}

TEST_CASE("perspective_two") {
  CHECK(perspective_two(1.7, 1.7, 0.0) == doctest::Approx(0.0));
  CHECK(perspective_two(1.0, 1.0, std::log(4.0)) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(perspective_two(1.0, 0.0, 0.7) == 1.0);
  CHECK(perspective_two(1.0, 0.0, oracle::inf) == 1.0);
  CHECK(perspective_two(2.0, 3.0, oracle::inf) == 5.0);

  const OracleGrid grid;
  const double c_log4 = std::log(4.0);
  const double x_log4 = std::acos(0.5);  // HK distance with cost log 4
  CHECK(std::abs(perspective_two_oracle(at(0), 1.3, at(0), 1.3, HK, grid)) <= 1e-8);
  CHECK(std::abs(perspective_two_oracle(at(0), 1.0, at(x_log4), 1.0, HK, grid) - 1.0) <= 1e-8);
  CHECK(std::abs(oracle::perspective_two(1.0, 1.0, c_log4) - 1.0) <= 1e-8);
}

TEST_CASE("perspective_two bounds and oracle agreement") {
  auto rng = oracle::rng(17);
  for (int k = 0; k < 300; ++k) {
    const double s1 = oracle::uniform(rng, 0.1, 10), s2 = oracle::uniform(rng, 0.1, 10);
    const double c = oracle::uniform(rng, 0.0, 3.0);
    const double h = perspective_two(s1, s2, c);
    const double lower = (std::sqrt(s1) - std::sqrt(s2)) * (std::sqrt(s1) - std::sqrt(s2));
    CHECK(h >= lower - 1e-12);
    CHECK(perspective_two(s1, s2, c + 0.1) >= h);
    CHECK(std::abs(h - oracle::perspective_two(s1, s2, c)) <= 1e-8);
  }
}

TEST_CASE("multi-marginal perspective closed form") {
  const std::vector<double> half{0.5, 0.5};
  const std::vector<double> ones{1.0, 1.0};
  const std::vector<double> s12{1.0, 2.0};
  CHECK(perspective_mm(ones, half, 0.0) == 0.0);
  CHECK(perspective_mm(ones, half, std::log(4.0)) == doctest::Approx(0.75).epsilon(1e-15));

  // one-atom oracle: min_t t c~ + sum lambda_i s_i F(t / s_i)
  const auto atom = oracle::one_atom(kMidpointLeastCost, s12, half);
  CHECK(std::abs(atom.value - 0.17234863824970703) <= 1e-12);
  CHECK(perspective_mm(s12, half, kMidpointLeastCost) == doctest::Approx(0.17234863824970703).epsilon(1e-14));

  const auto g = line(0, 1, 11);
  const std::vector<std::vector<Point>> axes{{at(0)}, {at(0.5)}};
  const auto table = least_cost_table(axes, g, half, HK);
  const std::size_t tuple[] = {0, 0};
  // grid-restricted: 0.25 is not a candidate, c~ uses the 0.2/0.3 pair
  const double grid_value = 0.5 * oracle::hk_cost(0.2) + 0.5 * oracle::hk_cost(0.3);
  CHECK(perspective_mm(table, tuple, s12) == doctest::Approx(1.5 - std::sqrt(2.0) * std::exp(-grid_value)));
}

TEST_CASE("multi-marginal perspective oracle") {
  const std::vector<double> half{0.5, 0.5};
  const auto g = line(0, 1, 21);  // contains 0.25
  const std::vector<Point> same{at(0.4), at(0.4)};
  const std::vector<Point> pair{at(0), at(0.5)};
  const std::vector<double> ones{1, 1}, s12{1, 2};
  CHECK(std::abs(perspective_mm_oracle(same, ones, half, *g, HK)) <= 1e-6);
  CHECK(std::abs(perspective_mm_oracle(pair, s12, half, *g, HK) - 0.17234863824970703) <= 1e-6);
  const std::vector<Point> log4{at(0), at(2 * std::acos(0.5))};
  const auto wide = line(0, 2.2, 23);
  const auto lc = least_cost_at(log4, *wide, half, HK);
  CHECK(std::abs(perspective_mm_oracle(log4, ones, half, *wide, HK) - perspective_mm(ones, half, lc.value)) <= 1e-6);
}

TEST_CASE("unconstrained perspective bounds") {
  const std::vector<double> half{0.5, 0.5};
  const auto g = line(0, 1, 21);
  const std::vector<Point> same{at(0.4), at(0.4)};
  const std::vector<double> ones{1, 1};
  CHECK(std::abs(perspective_mm_unconstrained(same, ones, half, *g, HK)) <= 1e-9);

  const std::vector<Point> pair{at(0.1), at(0.6)};
  const std::vector<double> one_zero{1, 0};
  CHECK(perspective_mm_unconstrained(pair, one_zero, half, *g, HK) <= 0.5 + 1e-12);

  auto rng = oracle::rng(23);
  for (int k = 0; k < 40; ++k) {
    const std::vector<Point> xs{at(oracle::uniform(rng, 0, 1)), at(oracle::uniform(rng, 0, 1))};
    const std::vector<double> s{oracle::uniform(rng, 0.1, 5), oracle::uniform(rng, 0.1, 5)};
    const double l = oracle::uniform(rng, 0.05, 0.95);
    const std::vector<double> w{l, 1 - l};
    const auto lc = least_cost_at(xs, *g, w, HK);
    CHECK(perspective_mm_unconstrained(xs, s, w, *g, HK) <= perspective_mm(s, w, lc.value) + 1e-6);
  }
}

TEST_CASE("infeasible tuples are purely linear") {
  const std::vector<double> w{0.3, 0.7};
  const std::vector<double> s{1.5, 0.25};
  const auto g = line(0, 5, 51);
  const std::vector<Point> xs{at(0), at(4)};
  const auto lc = least_cost_at(xs, *g, w, HK);
  CHECK(std::isinf(lc.value));
  CHECK(perspective_mm(s, w, lc.value) == 0.3 * 1.5 + 0.7 * 0.25);
}
