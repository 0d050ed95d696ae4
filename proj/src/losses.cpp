#include "rxid/losses.hpp"

#include <cmath>
#include <string>

#include "rxid/error.hpp"

namespace rxid {

namespace {

void check_target(std::span<const double> t, std::size_t n) {
  if (t.size() != n) throw Error(ErrorCode::InvalidTarget, "target has " + std::to_string(t.size()) + " entries for " + std::to_string(n) + " candidates");
  double total = 0.0;
  for (double p : t) {
    if (!(p >= 0.0)) throw Error(ErrorCode::InvalidTarget, "negative or non-finite target entry");
    total += p;
  }
  if (std::abs(total - 1.0) > 1e-9) throw Error(ErrorCode::InvalidTarget, "target sums to " + std::to_string(total));
}

// log softmax_k(query . rows_k / tau), via log-sum-exp.
Vec log_posterior(std::span<const double> query, const Matrix& rows, double tau) {
  const std::size_t n = rows.rows();
  Vec logits(n);
  for (std::size_t k = 0; k < n; ++k) logits[k] = math::dot(query, rows.row(k)) / tau;
  double top = logits[0];
  for (double l : logits) top = std::max(top, l);
  double z = 0.0;
  for (double l : logits) z += std::exp(l - top);
  const double log_z = top + std::log(z);
  for (double& l : logits) l -= log_z;
  return logits;
}

struct Direction {
  double loss = 0.0;
  Vec grad;
};

// Cross-entropy against target and its gradient
// (1/tau) * sum_k (P_k - T_k) rows_k with respect to the query.
Direction soft_direction(std::span<const double> query, const Matrix& rows, std::span<const double> target,
                         double tau) {
  const Vec log_p = log_posterior(query, rows, tau);
  Direction out;
  out.grad.assign(query.size(), 0.0);
  for (std::size_t k = 0; k < rows.rows(); ++k) {
    if (target[k] > 0.0) out.loss -= target[k] * log_p[k];
    const double coeff = (std::exp(log_p[k]) - target[k]) / tau;
    if (coeff == 0.0) continue;
    const auto r = rows.row(k);
    for (std::size_t d = 0; d < query.size(); ++d) out.grad[d] += coeff * r[d];
  }
  return out;
}

// One-hot case written as attraction toward row 0 and repulsion from the rest:
// -dL/ds = t_0 (1 - P_0) / tau - sum_{n>0} t_n P_n / tau.
Direction onehot_direction(std::span<const double> query, const Matrix& rows, double tau) {
  const Vec log_p = log_posterior(query, rows, tau);
  Direction out;
  out.loss = -log_p[0];
  out.grad.assign(query.size(), 0.0);
  const double attraction = (1.0 - std::exp(log_p[0])) / tau;
  const auto positive = rows.row(0);
  for (std::size_t d = 0; d < query.size(); ++d) out.grad[d] -= attraction * positive[d];
  for (std::size_t n = 1; n < rows.rows(); ++n) {
    const double repulsion = std::exp(log_p[n]) / tau;
    if (repulsion == 0.0) continue;
    const auto r = rows.row(n);
    for (std::size_t d = 0; d < query.size(); ++d) out.grad[d] += repulsion * r[d];
  }
  return out;
}

void check_instance(const ContrastInstance& inst) {
  if (!(inst.tau > 0.0)) throw Error(ErrorCode::InvalidTemperature, "tau must be positive");
  const auto& t = inst.targets;
  if (t.video.rows() == 0 || t.video.rows() != t.audio.rows())
    throw Error(ErrorCode::ShapeMismatch, "candidate rows missing or unequal across modalities");
  if (inst.video.size() != t.audio.cols() || inst.audio.size() != t.video.cols())
    throw Error(ErrorCode::ShapeMismatch, "embedding and target dimensions differ");
}

}  // namespace

Vec xid_posterior(std::span<const double> query, const Matrix& targets, double tau) {
  Vec logits(targets.rows());
  for (std::size_t k = 0; k < targets.rows(); ++k) logits[k] = math::dot(query, targets.row(k));
  return math::tempered_softmax(logits, tau);
}

LossGrad soft_xid_grad(const ContrastInstance& inst, std::span<const double> target_video,
                       std::span<const double> target_audio) {
  check_instance(inst);
  const std::size_t n = inst.targets.num_candidates();
  check_target(target_video, n);
  check_target(target_audio, n);
  auto dv = soft_direction(inst.video, inst.targets.audio, target_video, inst.tau);
  auto da = soft_direction(inst.audio, inst.targets.video, target_audio, inst.tau);
  return {dv.loss + da.loss, std::move(dv.grad), std::move(da.grad)};
}

double soft_xid_loss(const ContrastInstance& inst, std::span<const double> target_video,
                     std::span<const double> target_audio) {
  return soft_xid_grad(inst, target_video, target_audio).loss;
}

LossGrad xid_grad(const ContrastInstance& inst) {
  check_instance(inst);
  auto dv = onehot_direction(inst.video, inst.targets.audio, inst.tau);
  auto da = onehot_direction(inst.audio, inst.targets.video, inst.tau);
  return {dv.loss + da.loss, std::move(dv.grad), std::move(da.grad)};
}

double xid_loss(const ContrastInstance& inst) { return xid_grad(inst).loss; }

BatchLoss robust_batch_loss(std::span<const ContrastInstance> instances, std::span<const double> weights,
                            std::span<const TargetPair> targets) {
  if (weights.size() != instances.size() || targets.size() != instances.size())
    throw Error(ErrorCode::ShapeMismatch, "instances, weights and targets differ in length");
  double total_weight = 0.0;
  for (double w : weights) {
    if (!(w >= 0.0)) throw Error(ErrorCode::OutOfRange, "weights must be non-negative");
    total_weight += w;
  }
  if (!(total_weight > 0.0)) throw Error(ErrorCode::AllZeroWeights, "batch weights sum to zero");

  BatchLoss out;
  out.instance_losses.reserve(instances.size());
  out.grads.reserve(instances.size());
  for (std::size_t i = 0; i < instances.size(); ++i) {
    LossGrad g = soft_xid_grad(instances[i], targets[i].video.probs, targets[i].audio.probs);
    const double scale = weights[i] / total_weight;
    out.loss += scale * g.loss;
    out.instance_losses.push_back(g.loss);
    g.loss *= scale;
    for (double& x : g.grad_video) x *= scale;
    for (double& x : g.grad_audio) x *= scale;
    out.grads.push_back(std::move(g));
  }
  return out;
}

}  // namespace rxid
