#include "rxid/weighting.hpp"

#include <cmath>

#include "rxid/error.hpp"

namespace rxid {

void WeightParams::validate() const {
  if (!(kappa > 0.0)) throw Error(ErrorCode::OutOfRange, "kappa must be positive");
  if (!(w_min >= 0.0 && w_min < 1.0)) throw Error(ErrorCode::OutOfRange, "w_min must lie in [0,1)");
  if (!std::isfinite(delta)) throw Error(ErrorCode::OutOfRange, "delta must be finite");
}

double truncate(double x, double w_min) {
  if (!(x >= 0.0 && x <= 1.0)) throw Error(ErrorCode::OutOfRange, "truncate expects x in [0,1], got " + std::to_string(x));
  return x * (1.0 - w_min) + w_min;
}

double sample_weight(double score, double mean, double std, const WeightParams& params) {
  const double cdf = math::gaussian_cdf(score, mean + params.delta * std, params.kappa * std * std);
  return truncate(cdf, params.w_min);
}

std::vector<double> correspondence_scores(const MemoryBank& bank_v, const MemoryBank& bank_a) {
  if (bank_v.size() != bank_a.size() || bank_v.dim() != bank_a.dim())
    throw Error(ErrorCode::ShapeMismatch, "video and audio banks differ in shape");
  std::vector<double> scores(bank_v.size());
  for (std::size_t i = 0; i < scores.size(); ++i) scores[i] = math::dot(bank_v.row(i), bank_a.row(i));
  return scores;
}

WeightState compute_weight_state(std::span<const double> scores, const WeightParams& params) {
  params.validate();
  const auto stats = math::sample_stats(scores);
  const double std = std::sqrt(stats.var);
  if (std < 1e-8)
    throw Error(ErrorCode::DegenerateScores, "score standard deviation " + std::to_string(std) + " is below 1e-8");
  WeightState state;
  state.scores.assign(scores.begin(), scores.end());
  state.score_mean = stats.mean;
  state.score_std = std;
  state.params = params;
  state.weights.reserve(scores.size());
  for (double s : scores) state.weights.push_back(sample_weight(s, stats.mean, std, params));
  return state;
}

WeightState compute_weight_state(const MemoryBank& bank_v, const MemoryBank& bank_a, const WeightParams& params) {
  const auto scores = correspondence_scores(bank_v, bank_a);
  return compute_weight_state(scores, params);
}

double delta_for_noise_fraction(double fraction) { return math::gaussian_icdf(fraction); }

std::vector<double> oracle_weights(const std::vector<bool>& faulty) {
  std::vector<double> w(faulty.size());
  for (std::size_t i = 0; i < faulty.size(); ++i) w[i] = faulty[i] ? 0.0 : 1.0;
  return w;
}

std::vector<double> oracle_weights(std::span<const bool> faulty) {
  return oracle_weights(std::vector<bool>(faulty.begin(), faulty.end()));
}

}  // namespace rxid
