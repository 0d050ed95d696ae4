#include <doctest.h>

#include <cmath>
#include <numeric>
#include <vector>

#include "rxid/error.hpp"
#include "rxid/soft_targets.hpp"
#include "support.hpp"

using namespace rxid;

namespace {

// Candidate set with explicit rows; row 0 is the base.
CandidateSet crafted(const std::vector<Vec>& video, const std::vector<Vec>& audio) {
  CandidateSet c;
  c.base = 0;
  const std::size_t d = video[0].size();
  c.video = Matrix(video.size(), d);
  c.audio = Matrix(audio.size(), d);
  for (std::size_t r = 0; r < video.size(); ++r) {
    std::copy(video[r].begin(), video[r].end(), c.video.row(r).begin());
    std::copy(audio[r].begin(), audio[r].end(), c.audio.row(r).begin());
    if (r > 0) c.negatives.push_back(r);
  }
  return c;
}

CandidateSet random_candidates(Rng& rng, std::size_t k, std::size_t d) {
  CandidateSet c;
  c.base = 0;
  c.video = test::random_unit_rows(rng, k + 1, d);
  c.audio = test::random_unit_rows(rng, k + 1, d);
  for (std::size_t r = 1; r <= k; ++r) c.negatives.push_back(r);
  return c;
}

// Softmax over negatives of logit(j), j = 1..K, computed directly.
Vec softmax_over_negatives(std::size_t k, auto logit) {
  Vec l(k);
  double mx = -1e300;
  for (std::size_t j = 0; j < k; ++j) mx = std::max(mx, l[j] = logit(j + 1));
  double z = 0;
  for (double& x : l) z += (x = std::exp(x - mx));
  for (double& x : l) x /= z;
  return l;
}

double sum(std::span<const double> v) { return std::accumulate(v.begin(), v.end(), 0.0); }

double max_diff(std::span<const double> a, std::span<const double> b) {
  REQUIRE(a.size() == b.size());
  double m = 0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

const SofteningOptions kOpts{};

}  // namespace

TEST_SUITE("soft_targets") {
  TEST_CASE("make_candidates puts the base first") {
    const auto bv = MemoryBank::random(10, 4, 1), ba = MemoryBank::random(10, 4, 2, 0.5, Modality::Audio);
    const NegativeSet neg{3, {7, 1, 9}};
    const auto c = make_candidates(bv, ba, neg);
    CHECK(c.base == 3);
    CHECK(c.num_candidates() == 4);
    const std::vector<std::size_t> rows{3, 7, 1, 9};
    for (std::size_t r = 0; r < 4; ++r) {
      CHECK(std::equal(c.video.row(r).begin(), c.video.row(r).end(), bv.row(rows[r]).begin()));
      CHECK(std::equal(c.audio.row(r).begin(), c.audio.row(r).end(), ba.row(rows[r]).begin()));
    }
  }

  TEST_CASE("strategies match direct evaluation") {
    Rng rng(3);
    for (int trial = 0; trial < 200; ++trial) {
      const std::size_t k = 1 + rng.index(20);
      const auto c = random_candidates(rng, k, 8);
      const double ts = kOpts.tau_s, tt = kOpts.tau_t;
      auto dv = [&](std::size_t a, std::size_t b) { return math::dot(c.video.row(a), c.audio.row(b)); };
      auto vv = [&](std::size_t a, std::size_t b) { return math::dot(c.video.row(a), c.video.row(b)); };
      auto aa = [&](std::size_t a, std::size_t b) { return math::dot(c.audio.row(a), c.audio.row(b)); };

      const auto boot = bootstrap_scores(c, kOpts);
      CHECK(max_diff(boot.video, softmax_over_negatives(k, [&](std::size_t j) { return dv(0, j) / ts; })) <= 1e-12);
      CHECK(max_diff(boot.audio, softmax_over_negatives(k, [&](std::size_t j) { return dv(j, 0) / ts; })) <= 1e-12);

      const auto sw = swapped_scores(c, kOpts);
      CHECK(max_diff(sw.video, softmax_over_negatives(k, [&](std::size_t j) { return dv(j, 0) / ts; })) <= 1e-12);
      CHECK(max_diff(sw.audio, softmax_over_negatives(k, [&](std::size_t j) { return dv(0, j) / ts; })) <= 1e-12);

      const auto nb = neighbor_scores(c, kOpts);
      CHECK(max_diff(nb.video, softmax_over_negatives(k, [&](std::size_t j) { return vv(0, j) / ts; })) <= 1e-12);
      CHECK(max_diff(nb.audio, softmax_over_negatives(k, [&](std::size_t j) { return aa(0, j) / ts; })) <= 1e-12);

      const auto ccp = ccp_scores(c, kOpts);
      CHECK(max_diff(ccp.video, softmax_over_negatives(k, [&](std::size_t j) {
              return dv(0, 0) / tt + dv(j, 0) / ts + dv(j, j) / tt;
            })) <= 1e-12);
      CHECK(max_diff(ccp.audio, softmax_over_negatives(k, [&](std::size_t j) {
              return dv(0, 0) / tt + dv(0, j) / ts + dv(j, j) / tt;
            })) <= 1e-12);
    }
  }

  TEST_CASE("bootstrap examples") {
    const Vec e1{1, 0}, e2{0, 1};
    // Identical audio negatives: uniform.
    auto c = crafted({e1, e2, e1, e2}, {e2, e1, e1, e1});
    for (double s : bootstrap_scores(c, kOpts).video) CHECK(s == doctest::Approx(1.0 / 3).epsilon(1e-15));

    c = crafted({e1, e2, e2, e2}, {e1, e1, e2, e2});
    const auto one = bootstrap_scores(c, kOpts).video;
    CHECK(one[0] >= 1 - 1e-9);

    c = crafted({e1, e2, e2}, {e1, Vec{0.5, std::sqrt(0.75)}, e2});
    const auto two = bootstrap_scores(c, kOpts).video;
    const double tail = std::exp(-25.0) / (1 + std::exp(-25.0));
    CHECK(two[1] == doctest::Approx(tail).epsilon(1e-12));
    CHECK(std::abs(two[1] - 1.4e-11) < 0.05e-11);
    CHECK(two[0] == doctest::Approx(1.0).epsilon(1e-10));
  }

  TEST_CASE("swapped examples") {
    Rng rng(5);
    auto c = random_candidates(rng, 6, 5);
    c.audio = c.video;
    const auto sw = swapped_scores(c, kOpts), bs = bootstrap_scores(c, kOpts), nb = neighbor_scores(c, kOpts);
    CHECK(max_diff(sw.video, bs.video) <= 1e-12);
    CHECK(max_diff(sw.audio, bs.audio) <= 1e-12);
    CHECK(max_diff(nb.video, bs.video) <= 1e-12);
    CHECK(max_diff(nb.audio, bs.audio) <= 1e-12);

    const Vec e1{1, 0}, e2{0, 1};
    c = crafted({e1, e2, e2, e2}, {e1, e1, e2, Vec{0.6, 0.8}});
    for (double s : swapped_scores(c, kOpts).video) CHECK(s == doctest::Approx(1.0 / 3).epsilon(1e-15));

    // Role exchange oracle.
    auto r = random_candidates(rng, 9, 7);
    CandidateSet exchanged = r;
    std::swap(exchanged.video, exchanged.audio);
    const auto a = swapped_scores(r, kOpts), b = bootstrap_scores(exchanged, kOpts);
    CHECK(max_diff(a.video, b.video) <= 1e-12);
    CHECK(max_diff(a.audio, b.audio) <= 1e-12);
  }

  TEST_CASE("neighbor examples") {
    const Vec e1{1, 0, 0}, e2{0, 1, 0}, e3{0, 0, 1};
    auto c = crafted({e1, e2, e3, e2}, {e1, e2, e3, e1});
    for (double s : neighbor_scores(c, kOpts).video) CHECK(s == doctest::Approx(1.0 / 3).epsilon(1e-15));

    c = crafted({e1, e2, e1, e3}, {e1, e2, e3, e1});
    CHECK(neighbor_scores(c, kOpts).video[1] >= 1 - 1e-6);

    Rng rng(6);
    auto r = random_candidates(rng, 12, 6);
    const Vec before = neighbor_scores(r, kOpts).video;
    r.audio = test::random_unit_rows(rng, 13, 6);
    CHECK(neighbor_scores(r, kOpts).video == before);
  }

  TEST_CASE("ccp examples") {
    const Vec e1{1, 0, 0}, e2{0, 1, 0}, e3{0, 0, 1};
    // Identical swapped and correspondence terms: uniform.
    auto c = crafted({e1, e1, e1, e1}, {e3, e2, e2, e2});
    for (double s : ccp_scores(c, kOpts).video) CHECK(s == doctest::Approx(1.0 / 3).epsilon(1e-14));

    // Swapped terms both zero; correspondence 0.9 vs 0.1.
    c = crafted({e1, e1, e2}, {e3, Vec{0.9, std::sqrt(1 - 0.81), 0}, Vec{std::sqrt(0.99), 0.1, 0}});
    const auto s = ccp_scores(c, kOpts).video;
    CHECK(std::log(s[0] / s[1]) == doctest::Approx(0.8 / 0.07).epsilon(1e-12));

    CHECK_THROWS_AS(ccp_scores(c, SofteningOptions{.tau_s = 0.0}), Error);
    CHECK_THROWS_AS(ccp_scores(c, SofteningOptions{.tau_s = 0.02, .tau_t = -1}), Error);
  }

  TEST_CASE("ccp ignores the base correspondence term") {
    Rng rng(10);
    for (int trial = 0; trial < 500; ++trial) {
      auto c = random_candidates(rng, 1 + rng.index(64), 8);
      const auto before = ccp_scores(c, kOpts);
      // The base video row enters S_v only through dot(v_i, a_i).
      const Vec v0 = test::random_unit(rng, 8);
      std::copy(v0.begin(), v0.end(), c.video.row(0).begin());
      const auto after = ccp_scores(c, kOpts);
      CHECK(max_diff(before.video, after.video) <= 1e-12);
    }
  }

  TEST_CASE("oracle scores") {
    Rng rng(2);
    const auto c = random_candidates(rng, 4, 3);
    const std::vector<std::uint32_t> labels{1, 1, 0, 1, 2};
    const auto s = oracle_scores(c, labels, kOpts);
    CHECK(s.video == Vec{0.5, 0, 0.5, 0});
    CHECK(s.audio == s.video);
    CHECK_FALSE(s.video_empty);

    const auto none = oracle_scores(c, std::vector<std::uint32_t>{1, 0, 0, 2, 3}, kOpts);
    CHECK(none.video_empty);
    CHECK(none.audio_empty);
    CHECK(none.video == Vec{0, 0, 0, 0});

    const auto all = oracle_scores(c, std::vector<std::uint32_t>{4, 4, 4, 4, 4}, kOpts);
    CHECK(all.video == Vec{0.25, 0.25, 0.25, 0.25});
  }

  TEST_CASE("mix_targets") {
    const Vec s{0.1, 0.2, 0.3, 0.4};
    auto t = mix_targets(s, false, false, 5, 0.0);
    CHECK(t.probs == Vec{1, 0, 0, 0, 0});
    t = mix_targets(s, false, false, 5, 1.0);
    CHECK(t.probs == Vec{0, 0.1, 0.2, 0.3, 0.4});
    t = mix_targets(Vec{0.25, 0.25, 0.25, 0.25}, false, false, 5, 0.5);
    CHECK(t.probs == Vec{0.5, 0.125, 0.125, 0.125, 0.125});
    t = mix_targets(Vec{0, 0, 0, 0}, false, true, 5, 0.7);
    CHECK(t.probs == Vec{1, 0, 0, 0, 0});
    // Inclusive scores carry their own self entry.
    t = mix_targets(Vec{0.2, 0.8}, true, false, 2, 0.5);
    CHECK(t.probs[0] == doctest::Approx(0.6));
    CHECK(t.probs[1] == doctest::Approx(0.4));
    CHECK_THROWS_AS(mix_targets(s, false, false, 5, 1.5), Error);
    CHECK_THROWS_AS(mix_targets(s, false, false, 5, -0.1), Error);
    CHECK_THROWS_AS(mix_targets(s, false, false, 4, 0.5), Error);
  }

  TEST_CASE("targets are distributions for every strategy") {
    Rng rng(44);
    const Strategy all[] = {Strategy::OneHot, Strategy::Bootstrap, Strategy::Swapped,
                            Strategy::Neighbor, Strategy::Ccp, Strategy::Oracle};
    for (int trial = 0; trial < 2000; ++trial) {
      const std::size_t ks[] = {4, 64, 256};
      const std::size_t k = ks[trial % 3];
      const auto c = random_candidates(rng, k, 16);
      std::vector<std::uint32_t> labels(k + 1);
      for (auto& l : labels) l = std::uint32_t(rng.index(5));
      const double lambda = rng.uniform();
      const SofteningOptions opts{.tau_s = 0.01 + rng.uniform(), .tau_t = 0.01 + rng.uniform(),
                                  .include_self = rng.uniform() < 0.3};
      for (Strategy s : all) {
        const auto pair = build_targets(s, c, lambda, opts, labels);
        for (const auto* t : {&pair.video, &pair.audio}) {
          REQUIRE(t->probs.size() == k + 1);
          CHECK(std::abs(sum(t->probs) - 1.0) <= 1e-9);
          for (double p : t->probs) CHECK(p >= 0.0);
          if (!opts.include_self) CHECK(t->probs[0] >= 1 - lambda - 1e-12);
        }
      }
    }
  }

  TEST_CASE("large softening temperature gives uniform scores") {
    Rng rng(9);
    const auto c = random_candidates(rng, 32, 8);
    const SofteningOptions hot{.tau_s = 1e6, .tau_t = 1e6};
    for (const auto& s : {bootstrap_scores(c, hot), swapped_scores(c, hot), neighbor_scores(c, hot), ccp_scores(c, hot)})
      for (const Vec* v : {&s.video, &s.audio})
        for (double x : *v) CHECK(std::abs(x - 1.0 / 32) <= 1e-6);
  }

  TEST_CASE("include_self puts the base first") {
    Rng rng(1);
    const auto c = random_candidates(rng, 5, 4);
    const auto s = neighbor_scores(c, SofteningOptions{.include_self = true});
    CHECK(s.includes_self);
    REQUIRE(s.video.size() == 6);
    Vec logits(6);
    for (std::size_t j = 0; j < 6; ++j) logits[j] = math::dot(c.video.row(0), c.video.row(j));
    CHECK(max_diff(s.video, math::tempered_softmax(logits, 0.02)) <= 1e-12);
    CHECK(s.video[0] > 0.5);
  }

  TEST_CASE("strategy names") {
    for (Strategy s : {Strategy::OneHot, Strategy::Bootstrap, Strategy::Swapped, Strategy::Neighbor, Strategy::Ccp,
                       Strategy::Oracle})
      CHECK(parse_strategy(to_string(s)) == s);
    CHECK_THROWS_AS(parse_strategy("cluster"), Error);
  }
}
