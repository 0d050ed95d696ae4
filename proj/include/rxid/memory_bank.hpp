#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "rxid/core_math.hpp"
#include "rxid/rng.hpp"

namespace rxid {

enum class Modality : std::uint8_t { Video = 0, Audio = 1 };

/// Per-instance target embeddings for one modality. Rows stay on the unit
/// sphere: every EMA blend is renormalized.
class MemoryBank {
 public:
  MemoryBank() = default;

  /// Rows are normalized Gaussian draws. Throws InvalidShape unless N >= 2 and d >= 2.
  static MemoryBank random(std::size_t num_instances, std::size_t dim, std::uint64_t seed,
                           double momentum = 0.5, Modality modality = Modality::Video);

  /// Adopts existing rows (checkpoint restore). Rows must already be unit norm.
  MemoryBank(Matrix entries, double momentum, Modality modality);

  std::size_t size() const noexcept { return entries_.rows(); }
  std::size_t dim() const noexcept { return entries_.cols(); }
  double momentum() const noexcept { return momentum_; }
  Modality modality() const noexcept { return modality_; }
  const Matrix& entries() const noexcept { return entries_; }

  std::span<const double> row(std::size_t i) const;

  /// row_i <- normalize(momentum * row_i + (1 - momentum) * feat).
  /// Throws IndexOutOfRange, or ZeroVector when the blend cancels.
  std::span<const double> ema_update(std::size_t i, std::span<const double> feat);

  /// Copies of the requested rows, in order. Throws IndexOutOfRange.
  Matrix lookup(std::span<const std::size_t> indices) const;

  friend bool operator==(const MemoryBank&, const MemoryBank&) = default;

 private:
  Matrix entries_;
  double momentum_ = 0.5;
  Modality modality_ = Modality::Video;
};

struct NegativeSet {
  std::size_t base = 0;
  std::vector<std::size_t> indices;
};

/// K distinct indices drawn uniformly without replacement from [0, N) \ {i}.
/// Throws TooManyNegatives if K > N - 1, IndexOutOfRange if i >= N.
NegativeSet sample_negatives(std::size_t num_instances, std::size_t base, std::size_t count, Rng& rng);

inline NegativeSet sample_negatives(const MemoryBank& bank, std::size_t base, std::size_t count, Rng& rng) {
  return sample_negatives(bank.size(), base, count, rng);
}

}  // namespace rxid
