#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "rxid/core_math.hpp"

namespace rxid {

struct SynthConfig {
  std::uint32_t num_classes = 20;
  std::uint32_t instances_per_class = 100;
  /// Held-out instances per class, drawn from the same prototypes, used as retrieval queries.
  std::uint32_t test_per_class = 100;
  std::uint32_t latent_dim = 16;
  std::uint32_t raw_dim = 64;
  /// Audio classes outside the training set, used as replacement audio.
  std::uint32_t distractor_classes = 2;
  double within_class_noise = 0.25;
  double faulty_fraction = 0.0;
  std::uint64_t seed = 1;

  /// Throws InvalidConfig.
  void validate() const;

  friend bool operator==(const SynthConfig&, const SynthConfig&) = default;
};

struct SynthInstance {
  std::uint64_t id = 0;
  std::uint32_t label = 0;
  bool faulty = false;
  std::vector<float> video;
  std::vector<float> audio;

  friend bool operator==(const SynthInstance&, const SynthInstance&) = default;
};

struct SynthDataset {
  SynthConfig config;
  /// Fraction actually injected and the seed that chose the instances.
  double injected_fraction = 0.0;
  std::uint64_t injection_seed = 0;
  std::vector<SynthInstance> train;
  std::vector<SynthInstance> test;

  std::size_t size() const noexcept { return train.size(); }
  std::vector<bool> faulty_flags() const;
  std::vector<std::uint32_t> train_labels() const;
  std::vector<std::uint32_t> test_labels() const;

  friend bool operator==(const SynthDataset&, const SynthDataset&) = default;
};

/// Class prototypes on the latent sphere and the per-modality mixing maps.
/// A pure function of the config seed.
struct SynthGeometry {
  Matrix video_prototypes;       // C x latent
  Matrix audio_prototypes;       // C x latent
  Matrix distractor_prototypes;  // D x latent
  Matrix video_mixing;           // raw x latent
  Matrix audio_mixing;           // raw x latent
};

SynthGeometry make_geometry(const SynthConfig& config);

/// Latent codes behind each training instance, before mixing.
struct SynthLatents {
  Matrix video;
  Matrix audio;
  std::vector<std::uint32_t> labels;
};

SynthLatents generate_train_latents(const SynthConfig& config);

/// Clean dataset: no faulty flags regardless of config.faulty_fraction.
SynthDataset generate(const SynthConfig& config);

/// Replaces the audio of floor(fraction * N) uniformly chosen training
/// instances with audio from distractor classes and flags them.
/// Throws OutOfRange unless 0 <= fraction < 1.
void inject_faulty_positives(SynthDataset& dataset, double fraction, std::uint64_t seed);

/// Instances chosen for replacement, in the order they were drawn.
std::vector<std::size_t> choose_faulty(std::size_t num_instances, double fraction, std::uint64_t seed);

/// generate followed by inject_faulty_positives(config.faulty_fraction).
SynthDataset generate_with_faults(const SynthConfig& config);

/// tanh(mixing * latent), rounded to 32-bit floats.
std::vector<float> mix_raw(const Matrix& mixing, std::span<const double> latent);

/// Binary file: "RXID", u32 version 1, little-endian header then records.
void save_dataset(const SynthDataset& dataset, const std::filesystem::path& path);
/// Throws IoError, FormatError, or CorruptRecord.
SynthDataset load_dataset(const std::filesystem::path& path);

std::vector<char> encode_dataset(const SynthDataset& dataset);
SynthDataset decode_dataset(std::span<const char> bytes);

}  // namespace rxid
