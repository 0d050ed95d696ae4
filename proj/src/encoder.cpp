#include "rxid/encoder.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include "rxid/error.hpp"
#include "rxid/rng.hpp"

namespace rxid {

MlpTensors MlpTensors::zeros(const MlpShape& s) {
  return {Matrix(s.hidden, s.input), Vec(s.hidden, 0.0), Matrix(s.output, s.hidden), Vec(s.output, 0.0)};
}

std::array<std::span<double>, 4> MlpTensors::spans() { return {w1.data(), b1, w2.data(), b2}; }

std::array<std::span<const double>, 4> MlpTensors::spans() const {
  return {w1.data(), std::span<const double>(b1), w2.data(), std::span<const double>(b2)};
}

void MlpTensors::fill(double value) {
  for (auto s : spans())
    for (double& x : s) x = value;
}

MlpEncoder::MlpEncoder(const MlpShape& shape, std::uint64_t seed) : shape_(shape), params_(MlpTensors::zeros(shape)) {
  if (shape.input == 0 || shape.hidden == 0 || shape.output < 2)
    throw Error(ErrorCode::InvalidShape, "encoder dimensions must be positive with output >= 2");
  Rng rng(seed);
  auto init = [&rng](std::span<double> values, std::size_t fan_in) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
    for (double& x : values) x = (2.0 * rng.uniform() - 1.0) * bound;
  };
  init(params_.w1.data(), shape.input);
  init(params_.b1, shape.input);
  init(params_.w2.data(), shape.hidden);
  init(params_.b2, shape.hidden);
}

MlpEncoder::MlpEncoder(const MlpShape& shape, MlpTensors params) : shape_(shape), params_(std::move(params)) {
  if (params_.w1.rows() != shape.hidden || params_.w1.cols() != shape.input || params_.b1.size() != shape.hidden ||
      params_.w2.rows() != shape.output || params_.w2.cols() != shape.hidden || params_.b2.size() != shape.output)
    throw Error(ErrorCode::ShapeMismatch, "parameter tensors do not match the encoder shape");
}

ForwardCache MlpEncoder::forward(std::span<const double> input) const {
  if (input.size() != shape_.input)
    throw Error(ErrorCode::ShapeMismatch,
                "encoder expects input of size " + std::to_string(shape_.input) + ", got " + std::to_string(input.size()));
  ForwardCache c;
  c.version = version_;
  c.input.assign(input.begin(), input.end());
  c.hidden_pre.resize(shape_.hidden);
  c.hidden.resize(shape_.hidden);
  for (std::size_t h = 0; h < shape_.hidden; ++h) {
    const double pre = math::dot(params_.w1.row(h), input) + params_.b1[h];
    c.hidden_pre[h] = pre;
    c.hidden[h] = pre > 0.0 ? pre : 0.0;
  }
  c.projection.resize(shape_.output);
  for (std::size_t o = 0; o < shape_.output; ++o)
    c.projection[o] = math::dot(params_.w2.row(o), c.hidden) + params_.b2[o];
  c.projection_norm = math::norm(c.projection);
  c.embedding = math::l2_normalize(c.projection);
  return c;
}

Vec MlpEncoder::backward(const ForwardCache& cache, std::span<const double> grad_embedding, MlpGradients& grads,
                         bool want_input_grad) const {
  if (cache.version != version_) throw Error(ErrorCode::StaleCache, "forward cache predates a parameter update");
  if (grad_embedding.size() != shape_.output) throw Error(ErrorCode::ShapeMismatch, "upstream gradient size mismatch");

  // Through the normalization: (I - u u^T) g / |z|.
  const auto& u = cache.embedding;
  const double radial = math::dot(u, grad_embedding);
  Vec grad_z(shape_.output);
  for (std::size_t o = 0; o < shape_.output; ++o)
    grad_z[o] = (grad_embedding[o] - radial * u[o]) / cache.projection_norm;

  Vec grad_h(shape_.hidden, 0.0);
  for (std::size_t o = 0; o < shape_.output; ++o) {
    const double g = grad_z[o];
    grads.b2[o] += g;
    auto dw = grads.w2.row(o);
    const auto w = params_.w2.row(o);
    for (std::size_t h = 0; h < shape_.hidden; ++h) {
      dw[h] += g * cache.hidden[h];
      grad_h[h] += g * w[h];
    }
  }

  Vec grad_x;
  if (want_input_grad) grad_x.assign(shape_.input, 0.0);
  for (std::size_t h = 0; h < shape_.hidden; ++h) {
    if (!(cache.hidden_pre[h] > 0.0)) continue;
    const double g = grad_h[h];
    grads.b1[h] += g;
    auto dw = grads.w1.row(h);
    for (std::size_t i = 0; i < shape_.input; ++i) dw[i] += g * cache.input[i];
    if (want_input_grad) {
      const auto w = params_.w1.row(h);
      for (std::size_t i = 0; i < shape_.input; ++i) grad_x[i] += g * w[i];
    }
  }
  return grad_x;
}

void adam_step(std::span<const std::span<double>> params, std::span<const std::span<const double>> grads,
               AdamState& state, double lr) {
  if (params.size() != grads.size()) throw Error(ErrorCode::ShapeMismatch, "parameter and gradient lists differ");
  if (state.first_moment.empty()) {
    for (const auto& p : params) {
      state.first_moment.emplace_back(p.size(), 0.0);
      state.second_moment.emplace_back(p.size(), 0.0);
    }
  }
  if (state.first_moment.size() != params.size()) throw Error(ErrorCode::ShapeMismatch, "optimizer state shape mismatch");
  for (std::size_t t = 0; t < params.size(); ++t)
    if (params[t].size() != grads[t].size() || state.first_moment[t].size() != params[t].size())
      throw Error(ErrorCode::ShapeMismatch, "tensor " + std::to_string(t) + " size mismatch");

  ++state.step;
  const double step = static_cast<double>(state.step);
  const double correction1 = 1.0 - std::pow(state.beta1, step);
  const double correction2 = 1.0 - std::pow(state.beta2, step);
  for (std::size_t t = 0; t < params.size(); ++t) {
    auto& m = state.first_moment[t];
    auto& v = state.second_moment[t];
    for (std::size_t k = 0; k < params[t].size(); ++k) {
      const double g = grads[t][k];
      m[k] = state.beta1 * m[k] + (1.0 - state.beta1) * g;
      v[k] = state.beta2 * v[k] + (1.0 - state.beta2) * g * g;
      const double m_hat = m[k] / correction1;
      const double v_hat = v[k] / correction2;
      params[t][k] -= lr * m_hat / (std::sqrt(v_hat) + state.eps);
    }
  }
}

void adam_step(MlpEncoder& encoder, const MlpGradients& grads, AdamState& state, double lr) {
  auto p = encoder.mutable_params().spans();
  auto g = grads.spans();
  adam_step(std::span<const std::span<double>>(p), std::span<const std::span<const double>>(g), state, lr);
}

double cosine_lr(std::size_t epoch, std::size_t total_epochs, double lr_start, double lr_end) {
  if (epoch > total_epochs)
    throw Error(ErrorCode::OutOfRange, "epoch " + std::to_string(epoch) + " beyond schedule of " + std::to_string(total_epochs));
  if (total_epochs == 0) return lr_start;
  const double phase = std::numbers::pi * static_cast<double>(epoch) / static_cast<double>(total_epochs);
  return lr_end + 0.5 * (lr_start - lr_end) * (1.0 + std::cos(phase));
}

}  // namespace rxid
