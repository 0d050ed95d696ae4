#include <doctest.h>

#include <cmath>
#include <limits>
#include <vector>

#include "rxid/error.hpp"
#include "rxid/weighting.hpp"
#include "support.hpp"

using namespace rxid;

TEST_SUITE("weighting") {
  TEST_CASE("truncate") {
    CHECK(truncate(0.0, 0.25) == 0.25);
    CHECK(truncate(1.0, 0.25) == 1.0);
    CHECK(truncate(1.0, 0.0) == 1.0);
    CHECK(truncate(1.0, 0.9) == 1.0);
    CHECK(truncate(0.5, 0.25) == 0.625);
    CHECK_THROWS_AS(truncate(-0.1, 0.25), Error);
    CHECK_THROWS_AS(truncate(1.1, 0.25), Error);
  }

  TEST_CASE("sample_weight examples") {
    const WeightParams p{.delta = -0.7, .kappa = 0.5, .w_min = 0.25};
    CHECK(sample_weight(0.3 + p.delta * 0.2, 0.3, 0.2, p) == doctest::Approx(0.625).epsilon(1e-12));
    CHECK(sample_weight(-1e6, 0.3, 0.2, p) == doctest::Approx(0.25).epsilon(1e-15));

    const WeightParams q{.delta = 0.0, .kappa = 0.5, .w_min = 0.25};
    const double expect = 0.25 + 0.75 * test::quadrature_cdf(std::sqrt(2.0));
    CHECK(std::abs(expect - (0.25 + 0.75 * 0.9213503964748575)) <= 1e-10);
    CHECK(std::abs(sample_weight(0.2, 0.0, 0.2, q) - expect) <= 1e-10);
  }

  TEST_CASE("sample_weight is monotone and bounded") {
    for (const WeightParams p : {WeightParams{-1.0, 0.5, 0.25}, WeightParams{0.5, 2.0, 0.0}, WeightParams{1.0, 0.1, 0.9}}) {
      double prev = -1.0;
      for (int i = 0; i <= 1000; ++i) {
        const double w = sample_weight(-1.0 + 0.002 * i, 0.2, 0.3, p);
        CHECK(w >= prev);
        CHECK(w >= p.w_min);
        CHECK(w <= 1.0);
        prev = w;
      }
    }
  }

  TEST_CASE("weight curve shape responds to kappa and delta") {
    auto slope_at_mid = [](double kappa) {
      const WeightParams p{.delta = 0.0, .kappa = kappa, .w_min = 0.25};
      return test::central_difference([&](double s) { return sample_weight(s, 0.0, 0.2, p); }, 0.0, 1e-5);
    };
    CHECK(slope_at_mid(0.25) > slope_at_mid(0.5));
    CHECK(slope_at_mid(0.5) > slope_at_mid(2.0));

    for (double delta : {-2.0, -1.0, 0.0, 0.5, 1.5}) {
      const WeightParams p{.delta = delta, .kappa = 0.5, .w_min = 0.25};
      const double target = (1 + p.w_min) / 2;
      double lo = -5, hi = 5;
      for (int i = 0; i < 200; ++i) {
        const double mid = 0.5 * (lo + hi);
        (sample_weight(mid, 0.1, 0.3, p) < target ? lo : hi) = mid;
      }
      CHECK(std::abs(0.5 * (lo + hi) - (0.1 + delta * 0.3)) <= 1e-6);
    }
  }

  TEST_CASE("compute_weight_state from banks") {
    const auto bank = MemoryBank::random(10, 4, 3);
    try {
      compute_weight_state(bank, bank, WeightParams{});
      FAIL("expected DegenerateScores");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::DegenerateScores);
    }

    const auto a = MemoryBank::random(30, 8, 1), b = MemoryBank::random(30, 8, 2);
    const WeightParams p{};
    const auto ws = compute_weight_state(a, b, p);
    REQUIRE(ws.weights.size() == 30);
    std::vector<double> scores;
    for (std::size_t i = 0; i < 30; ++i) {
      scores.push_back(math::dot(a.row(i), b.row(i)));
      CHECK(ws.scores[i] == scores.back());
      CHECK(ws.weights[i] >= p.w_min);
      CHECK(ws.weights[i] <= 1.0);
    }
    double mean = 0, ss = 0;
    for (double s : scores) mean += s / 30;
    for (double s : scores) ss += (s - mean) * (s - mean);
    CHECK(ws.score_mean == doctest::Approx(mean).epsilon(1e-12));
    CHECK(ws.score_std == doctest::Approx(std::sqrt(ss / 29)).epsilon(1e-12));

    CHECK_THROWS_AS(compute_weight_state(a, MemoryBank::random(31, 8, 2), p), Error);
  }

  TEST_CASE("two-point statistics") {
    const std::vector<double> scores{0.0, 1.0};
    const auto ws = compute_weight_state(scores, WeightParams{.delta = 0.0, .kappa = 1.0, .w_min = 0.0});
    const double sd = std::sqrt(0.5);
    CHECK(std::abs(ws.weights[0] - test::quadrature_cdf(-0.5 / sd)) <= 1e-9);
    CHECK(std::abs(ws.weights[1] - test::quadrature_cdf(0.5 / sd)) <= 1e-9);
    CHECK_THROWS_AS(compute_weight_state(std::vector<double>{0.3}, WeightParams{}), Error);
  }

  TEST_CASE("weights are invariant to positive affine score maps") {
    Rng rng(77);
    for (int trial = 0; trial < 50; ++trial) {
      std::vector<double> scores(200);
      for (double& s : scores) s = 0.4 + 0.3 * rng.normal();
      const double a = 0.05 + 10 * rng.uniform(), b = 5 * rng.normal();
      std::vector<double> mapped = scores;
      for (double& s : mapped) s = a * s + b;
      const WeightParams p{.delta = rng.normal(), .kappa = 0.1 + rng.uniform(), .w_min = 0.5 * rng.uniform()};
      const auto w1 = compute_weight_state(scores, p).weights;
      const auto w2 = compute_weight_state(mapped, p).weights;
      for (std::size_t i = 0; i < scores.size(); ++i) CHECK(std::abs(w1[i] - w2[i]) <= 1e-9);
    }
  }

  TEST_CASE("delta_for_noise_fraction") {
    CHECK(delta_for_noise_fraction(0.5) == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(std::abs(delta_for_noise_fraction(0.1587) - (-1.0)) < 1e-3);
    CHECK(std::abs(delta_for_noise_fraction(0.8413) - 1.0) < 1e-3);
    // A fraction n of normal scores falls below the midpoint.
    for (double n : {0.05, 0.3, 0.7})
      CHECK(std::abs(test::quadrature_cdf(delta_for_noise_fraction(n)) - n) <= 1e-8);
    CHECK_THROWS_AS(delta_for_noise_fraction(0.0), Error);
    CHECK_THROWS_AS(delta_for_noise_fraction(1.0), Error);
  }

  TEST_CASE("oracle_weights") {
    CHECK(oracle_weights(std::vector<bool>{false, false}) == std::vector<double>{1, 1});
    CHECK(oracle_weights(std::vector<bool>{true, true}) == std::vector<double>{0, 0});
    CHECK(oracle_weights(std::vector<bool>{true, false, true}) == std::vector<double>{0, 1, 0});
  }

  TEST_CASE("params validation") {
    CHECK_THROWS_AS((WeightParams{0.0, 0.0, 0.25}.validate()), Error);
    CHECK_THROWS_AS((WeightParams{0.0, 0.5, 1.0}.validate()), Error);
    CHECK_THROWS_AS((WeightParams{0.0, 0.5, -0.1}.validate()), Error);
    CHECK_NOTHROW(WeightParams{}.validate());
  }
}
