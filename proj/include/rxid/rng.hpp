#pragma once

#include <cstdint>
#include <random>
#include <string>

namespace rxid {

/// Seeded generator whose derived draws (uniform, normal, bounded index) are
/// defined here rather than by the standard library distributions, so a seed
/// produces the same stream on every toolchain.
class Rng {
 public:
  explicit Rng(std::uint64_t seed = 0) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }

  /// Uniform in [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  /// Standard normal via Box-Muller; consumes exactly two words per call.
  double normal();

  /// Uniform integer in [0, n) by rejection, n > 0.
  std::uint64_t index(std::uint64_t n);

  /// Engine state in the standard textual form, for checkpoints.
  std::string state() const;
  void restore(const std::string& state);

  friend bool operator==(const Rng& a, const Rng& b) { return a.engine_ == b.engine_; }

 private:
  std::mt19937_64 engine_;
};

/// Derives an independent stream seed from a base seed and a purpose tag.
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream);

}  // namespace rxid
