#pragma once

#include <span>
#include <vector>

#include "rxid/core_math.hpp"
#include "rxid/soft_targets.hpp"

namespace rxid {

/// Live embeddings of one instance against its candidate target rows.
/// The video embedding is scored against the audio rows and vice versa.
struct ContrastInstance {
  Vec video;
  Vec audio;
  CandidateSet targets;
  double tau = 0.07;
};

/// Loss with gradients w.r.t. the live (unit) embeddings; targets get none.
struct LossGrad {
  double loss = 0.0;
  Vec grad_video;
  Vec grad_audio;
};

/// P(t_k | s) = softmax_k(s . t_k / tau) over the rows of targets.
Vec xid_posterior(std::span<const double> query, const Matrix& targets, double tau);

/// -log P(a_i | v_i) - log P(v_i | a_i).
double xid_loss(const ContrastInstance& inst);
LossGrad xid_grad(const ContrastInstance& inst);

/// Cross-entropy of each direction's posterior against its target distribution,
/// summed over both directions. Throws InvalidTarget for malformed targets.
double soft_xid_loss(const ContrastInstance& inst, std::span<const double> target_video,
                     std::span<const double> target_audio);
LossGrad soft_xid_grad(const ContrastInstance& inst, std::span<const double> target_video,
                       std::span<const double> target_audio);

struct BatchLoss {
  double loss = 0.0;
  std::vector<double> instance_losses;
  /// Per-instance gradients already scaled by w_i / sum(w).
  std::vector<LossGrad> grads;
};

/// sum_i w_i L_soft(i) / sum_k w_k. Throws AllZeroWeights if sum(w) <= 0.
BatchLoss robust_batch_loss(std::span<const ContrastInstance> instances, std::span<const double> weights,
                            std::span<const TargetPair> targets);

}  // namespace rxid
