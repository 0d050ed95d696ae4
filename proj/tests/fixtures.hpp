#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "rxid/trainer.hpp"

namespace rxid::test {

// A few seconds of training at most: 5 classes of 20 instances.
inline SynthConfig tiny_data(std::uint64_t seed = 1) {
  SynthConfig c;
  c.num_classes = 5;
  c.instances_per_class = 20;
  c.test_per_class = 4;
  c.latent_dim = 8;
  c.raw_dim = 16;
  c.seed = seed;
  return c;
}

inline TrainConfig tiny_train(std::uint64_t seed = 1) {
  TrainConfig t;
  t.warmup_epochs = 3;
  t.robust_epochs = 3;
  t.batch_size = 16;
  t.num_negatives = 20;
  t.hidden_dim = 16;
  t.embedding_dim = 8;
  t.eval_interval = 2;
  t.lr_warmup = t.lr_start = 1e-3;
  t.lr_end = 1e-4;
  t.seed = seed;
  return t;
}

inline double max_abs_diff(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) return INFINITY;
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

// Largest elementwise difference over both encoders and both banks.
inline double max_state_diff(const TrainState& a, const TrainState& b) {
  double m = 0.0;
  for (auto [ea, eb] : {std::pair{&a.video_encoder, &b.video_encoder}, std::pair{&a.audio_encoder, &b.audio_encoder}}) {
    const auto sa = ea->params().spans(), sb = eb->params().spans();
    for (std::size_t t = 0; t < sa.size(); ++t) m = std::max(m, max_abs_diff(sa[t], sb[t]));
  }
  m = std::max(m, max_abs_diff(a.video_bank.entries().data(), b.video_bank.entries().data()));
  m = std::max(m, max_abs_diff(a.audio_bank.entries().data(), b.audio_bank.entries().data()));
  return m;
}

// Steps two trainers in lockstep over identical batches; returns the largest
// state difference seen after any step.
inline double lockstep_divergence(const Trainer& ta, TrainState a, const Trainer& tb, TrainState b, std::size_t epochs) {
  double worst = max_state_diff(a, b);
  const std::size_t n = ta.num_instances(), bs = ta.config().batch_size;
  for (std::size_t e = 0; e < epochs; ++e) {
    const EpochPlan pa = ta.plan_epoch(a), pb = tb.plan_epoch(b);
    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = (i * 7 + e) % n;  // fixed, epoch-dependent order
    for (std::size_t start = 0; start < n; start += bs) {
      const auto batch = std::span<const std::size_t>(order).subspan(start, std::min(bs, n - start));
      ta.train_step(a, batch, pa);
      tb.train_step(b, batch, pb);
      worst = std::max(worst, max_state_diff(a, b));
    }
    ++a.epoch;
    ++b.epoch;
  }
  return worst;
}

}  // namespace rxid::test
