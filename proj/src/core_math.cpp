#include "rxid/core_math.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "rxid/error.hpp"

namespace rxid::math {

double dot(std::span<const double> a, std::span<const double> b) {
  double acc = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) acc += a[k] * b[k];
  return acc;
}

double norm(std::span<const double> v) { return std::sqrt(dot(v, v)); }

Vec l2_normalize(std::span<const double> v) {
  const double n = norm(v);
  if (!(n > kNormEpsilon)) throw Error(ErrorCode::ZeroVector, "cannot normalize a vector with norm " + std::to_string(n));
  Vec out(v.begin(), v.end());
  for (double& x : out) x /= n;
  return out;
}

Vec tempered_softmax(std::span<const double> logits, double tau) {
  if (!(tau > 0.0)) throw Error(ErrorCode::InvalidTemperature, "tau must be positive, got " + std::to_string(tau));
  Vec probs(logits.size());
  if (logits.empty()) return probs;
  const double top = *std::max_element(logits.begin(), logits.end());
  double total = 0.0;
  for (std::size_t k = 0; k < logits.size(); ++k) {
    probs[k] = std::exp((logits[k] - top) / tau);
    total += probs[k];
  }
  for (double& p : probs) p /= total;
  return probs;
}

double gaussian_cdf(double x, double mean, double var) {
  if (!(var > 0.0)) throw Error(ErrorCode::InvalidVariance, "variance must be positive, got " + std::to_string(var));
  const double z = (x - mean) / std::sqrt(var);
  return 0.5 * std::erfc(-z / std::numbers::sqrt2);
}

namespace {

// Acklam's rational approximation; ~1e-9 relative error before refinement.
double icdf_initial(double p) {
  static constexpr double a[] = {-3.969683028665376e+01, 2.209460984245205e+02, -2.759285104469687e+02,
                                 1.383577518672690e+02,  -3.066479806614716e+01, 2.506628277459239e+00};
  static constexpr double b[] = {-5.447609879822406e+01, 1.615858368580409e+02, -1.556989798598866e+02,
                                 6.680131188771972e+01,  -1.328068155288572e+01};
  static constexpr double c[] = {-7.784894002430293e-03, -3.223964580411365e-01, -2.400758277161838e+00,
                                 -2.549732539343734e+00, 4.374664141464968e+00,  2.938163982698783e+00};
  static constexpr double d[] = {7.784695709041462e-03, 3.224671290700398e-01, 2.445134137142996e+00,
                                 3.754408661907416e+00};
  constexpr double low = 0.02425;
  if (p < low) {
    const double q = std::sqrt(-2.0 * std::log(p));
    return (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
           ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  }
  if (p > 1.0 - low) {
    const double q = std::sqrt(-2.0 * std::log1p(-p));
    return -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
           ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  }
  const double q = p - 0.5;
  const double r = q * q;
  return (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
         (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
}

}  // namespace

double gaussian_icdf(double p) {
  if (!(p > 0.0 && p < 1.0)) throw Error(ErrorCode::OutOfRange, "quantile requires p in (0,1), got " + std::to_string(p));
  double x = icdf_initial(p);
  // Newton refinement on the exact CDF.
  for (int it = 0; it < 3; ++it) {
    const double err = gaussian_cdf(x, 0.0, 1.0) - p;
    const double density = std::exp(-0.5 * x * x) / std::sqrt(2.0 * std::numbers::pi);
    if (density <= 0.0) break;
    x -= err / density;
  }
  return x;
}

SampleStats sample_stats(std::span<const double> scores) {
  const std::size_t n = scores.size();
  if (n < 2) throw Error(ErrorCode::TooFewSamples, "need at least 2 scores, got " + std::to_string(n));
  double mean = 0.0;
  for (double s : scores) mean += s;
  mean /= static_cast<double>(n);
  double ss = 0.0;
  for (double s : scores) ss += (s - mean) * (s - mean);
  return {mean, ss / static_cast<double>(n - 1)};
}

double entropy(std::span<const double> probs) {
  double h = 0.0;
  for (double p : probs)
    if (p > 0.0) h -= p * std::log(p);
  return h;
}

}  // namespace rxid::math
