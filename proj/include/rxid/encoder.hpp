#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <vector>

#include "rxid/core_math.hpp"

namespace rxid {

struct MlpShape {
  std::size_t input = 64;
  std::size_t hidden = 128;
  std::size_t output = 32;

  friend bool operator==(const MlpShape&, const MlpShape&) = default;
};

/// Parameter-shaped buffers: W1 (hidden x input), b1, W2 (output x hidden), b2.
struct MlpTensors {
  Matrix w1;
  Vec b1;
  Matrix w2;
  Vec b2;

  static MlpTensors zeros(const MlpShape& shape);

  std::array<std::span<double>, 4> spans();
  std::array<std::span<const double>, 4> spans() const;
  void fill(double value);

  friend bool operator==(const MlpTensors&, const MlpTensors&) = default;
};

using MlpGradients = MlpTensors;

struct ForwardCache {
  Vec input;
  Vec hidden_pre;
  Vec hidden;
  Vec projection;  // z before normalization
  Vec embedding;   // z / |z|
  double projection_norm = 0.0;
  std::uint64_t version = 0;
};

/// input -> relu(W1 x + b1) -> W2 h + b2 -> unit sphere.
class MlpEncoder {
 public:
  MlpEncoder() = default;
  /// Uniform fan-in initialization, U(-1/sqrt(fan_in), 1/sqrt(fan_in)).
  MlpEncoder(const MlpShape& shape, std::uint64_t seed);
  MlpEncoder(const MlpShape& shape, MlpTensors params);

  const MlpShape& shape() const noexcept { return shape_; }
  const MlpTensors& params() const noexcept { return params_; }
  /// Mutable access invalidates outstanding caches.
  MlpTensors& mutable_params() noexcept {
    ++version_;
    return params_;
  }
  std::uint64_t version() const noexcept { return version_; }

  /// Throws ShapeMismatch on input size, ZeroVector if |z| <= 1e-12.
  ForwardCache forward(std::span<const double> input) const;
  Vec embed(std::span<const double> input) const { return forward(input).embedding; }

  /// Accumulates parameter gradients for dL/d(embedding) into grads.
  /// Returns dL/d(input) when requested, else an empty vector.
  /// Throws StaleCache if parameters changed since the forward pass.
  Vec backward(const ForwardCache& cache, std::span<const double> grad_embedding, MlpGradients& grads,
               bool want_input_grad = false) const;

  friend bool operator==(const MlpEncoder& a, const MlpEncoder& b) {
    return a.shape_ == b.shape_ && a.params_ == b.params_;
  }

 private:
  MlpShape shape_;
  MlpTensors params_;
  std::uint64_t version_ = 0;
};

struct AdamState {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  std::uint64_t step = 0;
  std::vector<Vec> first_moment;
  std::vector<Vec> second_moment;

  friend bool operator==(const AdamState&, const AdamState&) = default;
};

/// One bias-corrected Adam update over matched parameter/gradient buffers.
/// Moments are allocated on first use. Throws ShapeMismatch.
void adam_step(std::span<const std::span<double>> params, std::span<const std::span<const double>> grads,
               AdamState& state, double lr);

void adam_step(MlpEncoder& encoder, const MlpGradients& grads, AdamState& state, double lr);

/// lr_end + (lr_start - lr_end) (1 + cos(pi epoch / total)) / 2. Throws OutOfRange.
double cosine_lr(std::size_t epoch, std::size_t total_epochs, double lr_start, double lr_end);

}  // namespace rxid
