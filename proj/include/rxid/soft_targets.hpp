#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "rxid/core_math.hpp"
#include "rxid/memory_bank.hpp"

namespace rxid {

enum class Strategy : std::uint8_t { OneHot, Bootstrap, Swapped, Neighbor, Ccp, Oracle };

std::string_view to_string(Strategy s) noexcept;
/// Throws InvalidConfig for unknown names.
Strategy parse_strategy(std::string_view name);

/// Bank rows at {base} followed by its negatives, for both modalities.
/// Row 0 is always the base instance.
struct CandidateSet {
  std::size_t base = 0;
  std::vector<std::size_t> negatives;
  Matrix video;  // v-bar rows
  Matrix audio;  // a-bar rows

  std::size_t num_candidates() const noexcept { return video.rows(); }
  std::size_t num_negatives() const noexcept { return negatives.size(); }
};

CandidateSet make_candidates(const MemoryBank& bank_v, const MemoryBank& bank_a, const NegativeSet& negatives);

struct SofteningOptions {
  double tau_s = 0.02;
  double tau_t = 0.07;
  /// Normalize over {base} plus negatives instead of negatives only.
  bool include_self = false;
};

/// Softening scores S_v, S_a. With include_self off each vector has one entry
/// per negative; with it on, entry 0 is the base instance. An empty flag means
/// no candidate qualified (oracle with no same-class negatives).
struct SofteningScores {
  Vec video;
  Vec audio;
  bool includes_self = false;
  bool video_empty = false;
  bool audio_empty = false;
};

SofteningScores bootstrap_scores(const CandidateSet& cands, const SofteningOptions& opts);
SofteningScores swapped_scores(const CandidateSet& cands, const SofteningOptions& opts);
SofteningScores neighbor_scores(const CandidateSet& cands, const SofteningOptions& opts);
/// Throws InvalidTemperature unless both temperatures are positive.
SofteningScores ccp_scores(const CandidateSet& cands, const SofteningOptions& opts);
/// Uniform over same-class candidates. candidate_labels is aligned with the candidate rows.
SofteningScores oracle_scores(const CandidateSet& cands, std::span<const std::uint32_t> candidate_labels,
                              const SofteningOptions& opts);

struct TargetDistribution {
  Vec probs;  // over {base} then negatives
  Strategy strategy = Strategy::OneHot;
  double lambda = 0.0;
};

/// (1 - lambda) at the base plus lambda * S. Empty scores collapse to one-hot.
/// Throws OutOfRange for lambda outside [0, 1], InvalidTarget on a size mismatch.
TargetDistribution mix_targets(std::span<const double> scores, bool includes_self, bool empty, std::size_t num_candidates,
                               double lambda, Strategy strategy = Strategy::OneHot);

TargetDistribution one_hot_target(std::size_t num_candidates);

struct TargetPair {
  TargetDistribution video;
  TargetDistribution audio;
};

/// Builds both targets for a strategy. Labels are required only for Oracle.
TargetPair build_targets(Strategy strategy, const CandidateSet& cands, double lambda, const SofteningOptions& opts,
                         std::span<const std::uint32_t> candidate_labels = {});

}  // namespace rxid
