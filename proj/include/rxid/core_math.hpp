#pragma once

#include <cstddef>
#include <span>
#include <utility>
#include <vector>

namespace rxid {

using Vec = std::vector<double>;

/// Row-major dense matrix. Rows are handed out as spans so callers never
/// touch the storage layout directly.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  bool empty() const noexcept { return rows_ == 0; }

  std::span<double> row(std::size_t i) { return {data_.data() + i * cols_, cols_}; }
  std::span<const double> row(std::size_t i) const { return {data_.data() + i * cols_, cols_}; }

  double& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
  double operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }

  std::span<double> data() noexcept { return data_; }
  std::span<const double> data() const noexcept { return data_; }

  friend bool operator==(const Matrix&, const Matrix&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

namespace math {

inline constexpr double kNormEpsilon = 1e-12;

double dot(std::span<const double> a, std::span<const double> b);
double norm(std::span<const double> v);

/// Throws ZeroVector when the norm is at or below kNormEpsilon.
Vec l2_normalize(std::span<const double> v);

/// softmax(logits / tau) with max subtraction. Throws InvalidTemperature for tau <= 0.
Vec tempered_softmax(std::span<const double> logits, double tau);

/// Phi((x - mean) / sqrt(var)). Throws InvalidVariance for var <= 0.
double gaussian_cdf(double x, double mean, double var);

/// Standard-normal quantile, accurate to 1e-8 in probability. Throws OutOfRange outside (0, 1).
double gaussian_icdf(double p);

struct SampleStats {
  double mean = 0.0;
  double var = 0.0;  // unbiased, n - 1 denominator
};

/// Throws TooFewSamples for fewer than two scores.
SampleStats sample_stats(std::span<const double> scores);

/// Shannon entropy in nats; zero entries contribute nothing.
double entropy(std::span<const double> probs);

}  // namespace math
}  // namespace rxid
