#include "rxid/memory_bank.hpp"

#include <cmath>

#include "rxid/error.hpp"

namespace rxid {

MemoryBank MemoryBank::random(std::size_t num_instances, std::size_t dim, std::uint64_t seed, double momentum,
                              Modality modality) {
  if (num_instances < 2 || dim < 2)
    throw Error(ErrorCode::InvalidShape, "memory bank needs N >= 2 and d >= 2, got N=" +
                                             std::to_string(num_instances) + " d=" + std::to_string(dim));
  Rng rng(seed);
  Matrix entries(num_instances, dim);
  Vec draw(dim);
  for (std::size_t i = 0; i < num_instances; ++i) {
    for (double& x : draw) x = rng.normal();
    const Vec unit = math::l2_normalize(draw);
    std::copy(unit.begin(), unit.end(), entries.row(i).begin());
  }
  return MemoryBank(std::move(entries), momentum, modality);
}

MemoryBank::MemoryBank(Matrix entries, double momentum, Modality modality)
    : entries_(std::move(entries)), momentum_(momentum), modality_(modality) {
  if (!(momentum >= 0.0 && momentum <= 1.0))
    throw Error(ErrorCode::OutOfRange, "momentum must lie in [0,1], got " + std::to_string(momentum));
}

std::span<const double> MemoryBank::row(std::size_t i) const {
  if (i >= size()) throw Error(ErrorCode::IndexOutOfRange, "bank row " + std::to_string(i) + " of " + std::to_string(size()));
  return entries_.row(i);
}

std::span<const double> MemoryBank::ema_update(std::size_t i, std::span<const double> feat) {
  if (i >= size()) throw Error(ErrorCode::IndexOutOfRange, "bank row " + std::to_string(i) + " of " + std::to_string(size()));
  if (feat.size() != dim()) throw Error(ErrorCode::ShapeMismatch, "feature dim does not match bank");
  auto dst = entries_.row(i);
  Vec blend(dim());
  for (std::size_t k = 0; k < dim(); ++k) blend[k] = momentum_ * dst[k] + (1.0 - momentum_) * feat[k];
  const Vec unit = math::l2_normalize(blend);
  std::copy(unit.begin(), unit.end(), dst.begin());
  return dst;
}

Matrix MemoryBank::lookup(std::span<const std::size_t> indices) const {
  Matrix out(indices.size(), dim());
  for (std::size_t r = 0; r < indices.size(); ++r) {
    const auto src = row(indices[r]);
    std::copy(src.begin(), src.end(), out.row(r).begin());
  }
  return out;
}

NegativeSet sample_negatives(std::size_t num_instances, std::size_t base, std::size_t count, Rng& rng) {
  if (base >= num_instances)
    throw Error(ErrorCode::IndexOutOfRange, "base index " + std::to_string(base) + " of " + std::to_string(num_instances));
  const std::size_t pool = num_instances - 1;
  if (count > pool)
    throw Error(ErrorCode::TooManyNegatives,
                "requested " + std::to_string(count) + " negatives from " + std::to_string(pool) + " candidates");

  // Floyd's subset sampling over [0, pool); slot s maps to s + (s >= base).
  NegativeSet out{base, {}};
  out.indices.reserve(count);
  std::vector<bool> taken(pool, false);
  for (std::size_t j = pool - count; j < pool; ++j) {
    auto t = static_cast<std::size_t>(rng.index(j + 1));
    if (taken[t]) t = j;
    taken[t] = true;
    out.indices.push_back(t >= base ? t + 1 : t);
  }
  return out;
}

}  // namespace rxid
