#include <doctest.h>

#include <cmath>

#include "rxid/core_math.hpp"
#include "rxid/error.hpp"
#include "rxid/rng.hpp"
#include "support.hpp"

using namespace rxid;
using namespace rxid::math;

TEST_SUITE("core_math") {
  TEST_CASE("l2_normalize") {
    const Vec a = l2_normalize(Vec{3, 4});
    CHECK(a[0] == doctest::Approx(0.6).epsilon(1e-15));
    CHECK(a[1] == doctest::Approx(0.8).epsilon(1e-15));
    CHECK(l2_normalize(Vec{0, 0, 1}) == Vec{0, 0, 1});

    Rng rng(11);
    Vec v(32);
    for (double& x : v) x = rng.normal();
    double n2 = 0.0;
    for (double x : v) n2 += x * x;
    const Vec u = l2_normalize(v);
    double u2 = 0.0;
    for (std::size_t i = 0; i < v.size(); ++i) {
      CHECK(u[i] == doctest::Approx(v[i] / std::sqrt(n2)).epsilon(1e-12));
      u2 += u[i] * u[i];
    }
    CHECK(std::abs(std::sqrt(u2) - 1.0) <= 1e-9);

    const Vec uu = l2_normalize(u);
    for (std::size_t i = 0; i < u.size(); ++i) CHECK(std::abs(uu[i] - u[i]) <= 1e-9);
  }

  TEST_CASE("l2_normalize rejects the zero vector") {
    CHECK_THROWS_AS(l2_normalize(Vec{0, 0}), Error);
    try {
      l2_normalize(Vec{1e-13, 0});
      FAIL("expected ZeroVector");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::ZeroVector);
    }
  }

  TEST_CASE("tempered_softmax examples") {
    for (double tau : {0.02, 1.0, 5.0}) {
      const Vec p = tempered_softmax(Vec{2.5, 2.5, 2.5}, tau);
      for (double x : p) CHECK(x == doctest::Approx(1.0 / 3).epsilon(1e-15));
    }
    const Vec p = tempered_softmax(Vec{1, 0}, 1.0);
    const double e = std::exp(1.0);
    CHECK(p[0] == doctest::Approx(e / (e + 1)).epsilon(1e-14));
    CHECK(p[1] == doctest::Approx(1 / (e + 1)).epsilon(1e-14));
    CHECK(p[0] == doctest::Approx(0.7311).epsilon(1e-4));
    CHECK(tempered_softmax(Vec{1, 0}, 0.07)[0] >= 1 - 1e-5);
    CHECK_THROWS_AS(tempered_softmax(Vec{1, 0}, 0.0), Error);
    CHECK_THROWS_AS(tempered_softmax(Vec{1, 0}, -1.0), Error);
  }

  TEST_CASE("tempered_softmax sums to one and ignores shifts") {
    Rng rng(5);
    for (int trial = 0; trial < 2000; ++trial) {
      Vec logits(1 + rng.index(300));
      for (double& x : logits) x = 4.0 * rng.normal();
      const double shift = 100.0 * rng.normal();
      Vec shifted = logits;
      for (double& x : shifted) x += shift;
      for (double tau : {0.02, 0.07, 1.0}) {
        const Vec p = tempered_softmax(logits, tau);
        const Vec q = tempered_softmax(shifted, tau);
        double sum = 0.0;
        for (std::size_t i = 0; i < p.size(); ++i) {
          REQUIRE(std::isfinite(p[i]));
          CHECK(std::abs(p[i] - q[i]) <= 1e-9);
          sum += p[i];
        }
        CHECK(std::abs(sum - 1.0) <= 1e-9);
      }
    }
  }

  TEST_CASE("gaussian_cdf against quadrature") {
    CHECK(gaussian_cdf(0.3, 0.3, 2.0) == 0.5);
    const double phi1 = test::quadrature_cdf(1.0);
    CHECK(std::abs(phi1 - 0.841345) <= 1e-5);
    CHECK(std::abs(gaussian_cdf(1.7 + std::sqrt(0.3), 1.7, 0.3) - phi1) <= 1e-10);
    for (double z : {-3.0, -1.2, -0.1, 0.4, 2.5}) CHECK(std::abs(gaussian_cdf(z, 0, 1) - test::quadrature_cdf(z)) <= 1e-10);
    CHECK(gaussian_cdf(-10.0, 0.0, 1.0) < 1e-15);
    CHECK_THROWS_AS(gaussian_cdf(0, 0, 0), Error);
    CHECK_THROWS_AS(gaussian_cdf(0, 0, -1), Error);
  }

  TEST_CASE("gaussian_cdf symmetry and monotonicity") {
    Rng rng(3);
    for (int i = 0; i < 500; ++i) {
      const double mean = rng.normal(), var = 0.01 + rng.uniform() * 4, x = mean + 3 * rng.normal();
      CHECK(std::abs(gaussian_cdf(x, mean, var) + gaussian_cdf(2 * mean - x, mean, var) - 1.0) <= 1e-9);
    }
    double prev = 0.0;
    for (int i = 0; i <= 1000; ++i) {
      const double c = gaussian_cdf(-8.0 + 0.016 * i, 0.0, 1.0);
      CHECK(c >= prev);
      prev = c;
    }
  }

  TEST_CASE("gaussian_icdf") {
    CHECK(gaussian_icdf(0.5) == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(gaussian_icdf(0.841345) == doctest::Approx(1.0).epsilon(1e-5));
    CHECK(gaussian_icdf(0.025) == doctest::Approx(-1.95996).epsilon(1e-5));

    // Bisection oracle against the CDF.
    auto bisect = [](double p) {
      double lo = -40, hi = 40;
      for (int i = 0; i < 200; ++i) {
        const double mid = 0.5 * (lo + hi);
        (gaussian_cdf(mid, 0, 1) < p ? lo : hi) = mid;
      }
      return 0.5 * (lo + hi);
    };
    for (double p : {1e-10, 1e-4, 0.025, 0.1, 0.3, 0.77, 0.999, 1 - 1e-9}) {
      CHECK(std::abs(gaussian_cdf(gaussian_icdf(p), 0, 1) - p) <= 1e-8);
      CHECK(std::abs(gaussian_icdf(p) - bisect(p)) <= 1e-6);
    }
    for (double x = -4.0; x <= 4.0; x += 0.01) CHECK(std::abs(gaussian_icdf(gaussian_cdf(x, 0, 1)) - x) <= 1e-6);
    CHECK_THROWS_AS(gaussian_icdf(0.0), Error);
    CHECK_THROWS_AS(gaussian_icdf(1.0), Error);
    CHECK_THROWS_AS(gaussian_icdf(-0.5), Error);
  }

  TEST_CASE("sample_stats") {
    auto s = sample_stats(Vec{1, 1, 1});
    CHECK(s.mean == 1.0);
    CHECK(s.var == 0.0);
    s = sample_stats(Vec{0, 2});
    CHECK(s.mean == 1.0);
    CHECK(s.var == 2.0);

    Rng rng(1);
    Vec draws(1000);
    for (double& x : draws) x = 0.3 + 0.2 * rng.normal();
    s = sample_stats(draws);
    CHECK(std::abs(s.mean - 0.3) <= 0.02);
    CHECK(std::abs(s.var - 0.04) <= 0.01);
    CHECK_THROWS_AS(sample_stats(Vec{1.0}), Error);
    CHECK_THROWS_AS(sample_stats(Vec{}), Error);
  }

  TEST_CASE("entropy") {
    CHECK(entropy(Vec{1, 0, 0}) == 0.0);
    CHECK(entropy(Vec{0.25, 0.25, 0.25, 0.25}) == doctest::Approx(std::log(4.0)));
  }
}
