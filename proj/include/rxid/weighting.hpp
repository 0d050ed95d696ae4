#pragma once

#include <span>
#include <vector>

#include "rxid/memory_bank.hpp"

namespace rxid {

/// Shape of the weight curve: midpoint at mean + delta*std, spread kappa*std^2,
/// floor w_min.
struct WeightParams {
  double delta = -1.0;
  double kappa = 0.5;
  double w_min = 0.25;

  void validate() const;

  friend bool operator==(const WeightParams&, const WeightParams&) = default;
};

struct WeightState {
  std::vector<double> weights;
  std::vector<double> scores;
  double score_mean = 0.0;
  double score_std = 0.0;
  WeightParams params;

  friend bool operator==(const WeightState&, const WeightState&) = default;
};

/// Affine map of [0,1] onto [w_min, 1]. Throws OutOfRange for x outside [0,1].
double truncate(double x, double w_min);

/// truncate(Phi(score; mean + delta*std, kappa*std^2), w_min).
double sample_weight(double score, double mean, double std, const WeightParams& params);

/// Correspondence scores dot(bank_v.row(i), bank_a.row(i)).
std::vector<double> correspondence_scores(const MemoryBank& bank_v, const MemoryBank& bank_a);

/// Weights from the empirical score distribution of the two banks.
/// Throws TooFewSamples, ShapeMismatch, or DegenerateScores when std < 1e-8.
WeightState compute_weight_state(const MemoryBank& bank_v, const MemoryBank& bank_a, const WeightParams& params);

/// Same computation over precomputed scores.
WeightState compute_weight_state(std::span<const double> scores, const WeightParams& params);

/// delta placing the weight midpoint at the n-quantile of normal scores.
double delta_for_noise_fraction(double fraction);

/// 0 for flagged instances, 1 otherwise.
std::vector<double> oracle_weights(std::span<const bool> faulty);
std::vector<double> oracle_weights(const std::vector<bool>& faulty);

}  // namespace rxid
