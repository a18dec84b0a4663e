#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numbers>

#include "hkbary/entropy.hpp"
#include "oracles.hpp"

using namespace hkbary;

TEST_CASE("f_entropy values") {
  CHECK(f_entropy(1.0) == 0.0);
  CHECK(f_entropy(0.0) == 1.0);
  CHECK(f_entropy(std::numbers::e) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK_THROWS_AS(f_entropy(-1.0), std::invalid_argument);
}

TEST_CASE("r_entropy values") {
  CHECK(r_entropy(1.0) == 0.0);
  CHECK(r_entropy(2.0) == doctest::Approx(0.30685281944005469).epsilon(1e-14));
  CHECK(std::isinf(r_entropy(0.0)));
  CHECK(R_INF_SLOPE == 1.0);
  for (double s : {0.5, 1.0, 4.0}) CHECK(r_entropy(s) == doctest::Approx(s * f_entropy(1.0 / s)));
}

TEST_CASE("entropies are nonnegative with a unique zero") {
  for (int k = -60; k <= 60; ++k) {
    const double s = std::pow(10.0, k / 10.0);
    CHECK(f_entropy(s) >= 0.0);
    if (k != 0) CHECK(f_entropy(s) > 0.0);
    CHECK(std::abs(r_entropy(s) - s * f_entropy(1.0 / s)) <= 1e-12 * std::max(1.0, r_entropy(s)));
  }
}

TEST_CASE("conjugates") {
  CHECK(f_conjugate(0.0) == 0.0);
  CHECK(f_conjugate(1.0) == doctest::Approx(std::numbers::e - 1.0).epsilon(1e-15));
  for (double phi : {-1.0, 0.0, 0.5}) {
    CHECK(std::abs(f_conjugate(phi) - oracle::f_conjugate(phi)) <= 1e-6);
  }
  CHECK(r_conjugate(0.0) == 0.0);
  CHECK(r_conjugate(1.0 - 1.0 / std::numbers::e) == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(std::isinf(r_conjugate(1.0)));
  CHECK(std::isinf(r_conjugate(2.0)));
  // phi = R*(psi) turns F* back into psi: -F*(-R*(psi)) = psi
  for (double psi : {-1.0, 0.0, 0.5}) {
    CHECK(-f_conjugate(-r_conjugate(psi)) == doctest::Approx(psi).epsilon(1e-14));
  }
}

TEST_CASE("Young inequality") {
  for (int i = 1; i <= 40; ++i) {
    const double s = i * 0.125;
    for (int j = -20; j <= 20; ++j) {
      const double phi = j * 0.1;
      CHECK(s * phi <= f_entropy(s) + f_conjugate(phi) + 1e-12);
    }
    const double phi = std::log(s);
    CHECK(std::abs(s * phi - f_entropy(s) - f_conjugate(phi)) <= 1e-9);
  }
}

TEST_CASE("divergence") {
  const Interval b{0.0, 1.0};
  const auto g = make_grid(1, std::span(&b, 1), 6);
  const DiscreteMeasure mu(g, {0.3, 0.0, 1.2, 0.5, 0.0, 2.0});
  const double m = total_mass(mu);

  CHECK(divergence(mu, mu, EntropyKind::KL) == 0.0);
  CHECK(divergence(scale_measure(mu, 2.0), mu, EntropyKind::KL) ==
        doctest::Approx((2 * std::log(2.0) - 1) * m).epsilon(1e-14));
  CHECK(std::isinf(divergence(DiscreteMeasure::dirac(g, 0), DiscreteMeasure::dirac(g, 1), EntropyKind::KL)));
  CHECK(divergence(DiscreteMeasure(g), mu, EntropyKind::KL) == total_mass(mu));

  CHECK(divergence(mu, mu, EntropyKind::HardEquality) == 0.0);
  CHECK(std::isinf(divergence(scale_measure(mu, 1.0 + 1e-9), mu, EntropyKind::HardEquality)));
  CHECK_THROWS_AS(divergence(mu, DiscreteMeasure(make_grid(1, std::span(&b, 1), 7)), EntropyKind::KL),
                  GridMismatch);
}
