#include "rxid/soft_targets.hpp"

#include <cmath>
#include <string>

#include "rxid/error.hpp"

namespace rxid {

std::string_view to_string(Strategy s) noexcept {
  switch (s) {
    case Strategy::OneHot: return "onehot";
    case Strategy::Bootstrap: return "bootstrap";
    case Strategy::Swapped: return "swapped";
    case Strategy::Neighbor: return "neighbor";
    case Strategy::Ccp: return "ccp";
    case Strategy::Oracle: return "oracle";
  }
  return "unknown";
}

Strategy parse_strategy(std::string_view name) {
  for (auto s : {Strategy::OneHot, Strategy::Bootstrap, Strategy::Swapped, Strategy::Neighbor, Strategy::Ccp,
                 Strategy::Oracle})
    if (to_string(s) == name) return s;
  throw Error(ErrorCode::InvalidConfig, "unknown soft-target strategy '" + std::string(name) + "'");
}

CandidateSet make_candidates(const MemoryBank& bank_v, const MemoryBank& bank_a, const NegativeSet& negatives) {
  std::vector<std::size_t> rows;
  rows.reserve(negatives.indices.size() + 1);
  rows.push_back(negatives.base);
  rows.insert(rows.end(), negatives.indices.begin(), negatives.indices.end());
  return CandidateSet{negatives.base, negatives.indices, bank_v.lookup(rows), bank_a.lookup(rows)};
}

namespace {

std::size_t first_row(const SofteningOptions& opts) { return opts.include_self ? 0 : 1; }

// softmax over rows [first, K] of dot(query, targets.row(j)) / tau
Vec posterior_over(std::span<const double> query, const Matrix& targets, std::size_t first, double tau) {
  Vec logits;
  logits.reserve(targets.rows() - first);
  for (std::size_t j = first; j < targets.rows(); ++j) logits.push_back(math::dot(query, targets.row(j)));
  return math::tempered_softmax(logits, tau);
}

}  // namespace

SofteningScores bootstrap_scores(const CandidateSet& c, const SofteningOptions& opts) {
  const std::size_t f = first_row(opts);
  return {posterior_over(c.video.row(0), c.audio, f, opts.tau_s), posterior_over(c.audio.row(0), c.video, f, opts.tau_s),
          opts.include_self};
}

SofteningScores swapped_scores(const CandidateSet& c, const SofteningOptions& opts) {
  const std::size_t f = first_row(opts);
  return {posterior_over(c.audio.row(0), c.video, f, opts.tau_s), posterior_over(c.video.row(0), c.audio, f, opts.tau_s),
          opts.include_self};
}

SofteningScores neighbor_scores(const CandidateSet& c, const SofteningOptions& opts) {
  const std::size_t f = first_row(opts);
  return {posterior_over(c.video.row(0), c.video, f, opts.tau_s), posterior_over(c.audio.row(0), c.audio, f, opts.tau_s),
          opts.include_self};
}

SofteningScores ccp_scores(const CandidateSet& c, const SofteningOptions& opts) {
  if (!(opts.tau_s > 0.0) || !(opts.tau_t > 0.0))
    throw Error(ErrorCode::InvalidTemperature, "cycle-consistent scores need positive tau_s and tau_t");
  const std::size_t f = first_row(opts);
  const auto v_i = c.video.row(0);
  const auto a_i = c.audio.row(0);
  const double base_term = math::dot(v_i, a_i) / opts.tau_t;
  Vec logits_v, logits_a;
  for (std::size_t j = f; j < c.num_candidates(); ++j) {
    const auto v_j = c.video.row(j);
    const auto a_j = c.audio.row(j);
    const double corr_j = math::dot(v_j, a_j) / opts.tau_t;
    logits_v.push_back(base_term + math::dot(a_i, v_j) / opts.tau_s + corr_j);
    logits_a.push_back(base_term + math::dot(v_i, a_j) / opts.tau_s + corr_j);
  }
  return {math::tempered_softmax(logits_v, 1.0), math::tempered_softmax(logits_a, 1.0), opts.include_self};
}

SofteningScores oracle_scores(const CandidateSet& c, std::span<const std::uint32_t> labels,
                              const SofteningOptions& opts) {
  if (labels.size() != c.num_candidates())
    throw Error(ErrorCode::ShapeMismatch, "oracle targets need one label per candidate");
  const std::size_t f = first_row(opts);
  Vec s(c.num_candidates() - f, 0.0);
  std::size_t matches = 0;
  for (std::size_t j = f; j < c.num_candidates(); ++j)
    if (labels[j] == labels[0]) ++matches;
  for (std::size_t j = f; j < c.num_candidates(); ++j)
    if (labels[j] == labels[0]) s[j - f] = 1.0 / static_cast<double>(matches);
  const bool empty = matches == 0;
  return {s, s, opts.include_self, empty, empty};
}

TargetDistribution one_hot_target(std::size_t num_candidates) {
  TargetDistribution t;
  t.probs.assign(num_candidates, 0.0);
  t.probs[0] = 1.0;
  return t;
}

TargetDistribution mix_targets(std::span<const double> scores, bool includes_self, bool empty, std::size_t num_candidates,
                               double lambda, Strategy strategy) {
  if (!(lambda >= 0.0 && lambda <= 1.0))
    throw Error(ErrorCode::OutOfRange, "lambda must lie in [0,1], got " + std::to_string(lambda));
  if (num_candidates == 0) throw Error(ErrorCode::InvalidTarget, "empty candidate set");
  TargetDistribution t = one_hot_target(num_candidates);
  t.strategy = strategy;
  t.lambda = lambda;
  if (empty) return t;
  const std::size_t offset = includes_self ? 0 : 1;
  if (scores.size() + offset != num_candidates)
    throw Error(ErrorCode::InvalidTarget, "softening scores do not cover the candidate set");
  t.probs[0] = 1.0 - lambda;
  for (std::size_t k = 0; k < scores.size(); ++k) t.probs[k + offset] += lambda * scores[k];
  return t;
}

TargetPair build_targets(Strategy strategy, const CandidateSet& cands, double lambda, const SofteningOptions& opts,
                         std::span<const std::uint32_t> labels) {
  const std::size_t n = cands.num_candidates();
  SofteningScores s;
  switch (strategy) {
    case Strategy::OneHot: {
      auto v = mix_targets({}, false, true, n, lambda, strategy);
      auto a = v;
      return {std::move(v), std::move(a)};
    }
    case Strategy::Bootstrap: s = bootstrap_scores(cands, opts); break;
    case Strategy::Swapped: s = swapped_scores(cands, opts); break;
    case Strategy::Neighbor: s = neighbor_scores(cands, opts); break;
    case Strategy::Ccp: s = ccp_scores(cands, opts); break;
    case Strategy::Oracle: s = oracle_scores(cands, labels, opts); break;
  }
  return {mix_targets(s.video, s.includes_self, s.video_empty, n, lambda, strategy),
          mix_targets(s.audio, s.includes_self, s.audio_empty, n, lambda, strategy)};
}

}  // namespace rxid
