#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "rxid/encoder.hpp"
#include "rxid/eval.hpp"
#include "rxid/losses.hpp"
#include "rxid/memory_bank.hpp"
#include "rxid/rng.hpp"
#include "rxid/soft_targets.hpp"
#include "rxid/synth_data.hpp"
#include "rxid/weighting.hpp"

namespace rxid {

enum class WeightSource : std::uint8_t { Estimated, Oracle };

std::string_view to_string(WeightSource s) noexcept;

struct TrainConfig {
  std::size_t warmup_epochs = 100;
  std::size_t robust_epochs = 100;
  std::size_t batch_size = 128;
  std::size_t num_negatives = 256;

  double tau = 0.07;
  double tau_s = 0.02;
  double tau_t = 0.07;
  double lambda = 0.5;
  WeightParams weight_params{};
  /// Replace weight_params.delta by the quantile of the dataset's injected fraction.
  bool delta_from_noise_fraction = false;

  bool enable_weighting = true;
  WeightSource weight_source = WeightSource::Estimated;
  bool enable_soft_targets = true;
  Strategy strategy = Strategy::Ccp;
  bool include_self_in_softening = false;

  double lr_warmup = 1e-4;
  double lr_start = 1e-4;
  double lr_end = 1e-5;
  double bank_momentum = 0.5;

  std::size_t hidden_dim = 128;
  std::size_t embedding_dim = 32;

  /// Retrieval metrics every this many epochs (and always on the final epoch).
  std::size_t eval_interval = 10;
  std::uint64_t seed = 1;

  std::size_t total_epochs() const noexcept { return warmup_epochs + robust_epochs; }
  /// Throws InvalidConfig; N is the training-set size.
  void validate(std::size_t num_instances) const;
  /// Flags off in the robust stage: the loss is plain xID.
  bool vanilla_robust_stage() const noexcept { return !enable_weighting && !enable_soft_targets; }

  friend bool operator==(const TrainConfig&, const TrainConfig&) = default;
};

struct TrainState {
  MlpEncoder video_encoder;
  MlpEncoder audio_encoder;
  AdamState video_optimizer;
  AdamState audio_optimizer;
  MemoryBank video_bank;
  MemoryBank audio_bank;
  /// Weights used by the most recent robust epoch; empty before the robust stage.
  WeightState weights;
  std::uint64_t epoch = 0;  // completed epochs
  Rng rng;

  friend bool operator==(const TrainState&, const TrainState&) = default;
};

enum class Stage : std::uint8_t { Warmup, Robust };
std::string_view to_string(Stage s) noexcept;

/// Everything a batch step needs besides the state: fixed for one epoch.
struct EpochPlan {
  Stage stage = Stage::Warmup;
  double lr = 0.0;
  bool robust_path = false;  // weighted / soft objective instead of plain xID
  bool soft_targets = false;
  std::vector<double> weights;  // per training instance
};

struct StepMetrics {
  double loss = 0.0;
  double mean_weight = 1.0;
  double target_entropy = 0.0;
};

struct EpochMetrics {
  std::uint64_t epoch = 0;
  Stage stage = Stage::Warmup;
  double lr = 0.0;
  double loss = 0.0;
  double mean_weight_clean = 0.0;
  double mean_weight_faulty = 0.0;
  double r_at_1 = 0.0;
  double r_at_5 = 0.0;
  double faulty_auc = 0.0;
};

/// Per-instance losses and gradients for one batch, without touching state.
struct BatchEvaluation {
  std::vector<ForwardCache> video_caches;
  std::vector<ForwardCache> audio_caches;
  std::vector<double> instance_losses;
  std::vector<LossGrad> grads;  // scaled by each instance's share of the batch
  double loss = 0.0;
  double mean_weight = 1.0;
  double target_entropy = 0.0;
};

class Trainer {
 public:
  Trainer(const SynthDataset& dataset, TrainConfig config);

  const TrainConfig& config() const noexcept { return config_; }
  std::size_t num_instances() const noexcept { return labels_.size(); }

  /// Fresh encoders, random banks, unit weights; deterministic in config.seed.
  TrainState init_state() const;

  EpochPlan plan_epoch(const TrainState& state) const;

  /// Losses and gradients for the given batch and negatives. Pure.
  BatchEvaluation evaluate_batch(const TrainState& state, std::span<const std::size_t> indices,
                                 std::span<const NegativeSet> negatives, const EpochPlan& plan) const;

  /// Samples negatives, evaluates, applies Adam and the bank EMA.
  StepMetrics train_step(TrainState& state, std::span<const std::size_t> indices, const EpochPlan& plan) const;

  /// One shuffled pass over the data followed by epoch metrics.
  EpochMetrics run_epoch(TrainState& state) const;

  /// Runs epochs until state.epoch == until (default: all configured epochs).
  void run(TrainState& state, const std::function<void(const EpochMetrics&)>& on_epoch = {},
           std::optional<std::uint64_t> until = std::nullopt) const;

  /// Fresh state trained through the warmup epochs.
  TrainState warmup() const;
  /// Continues a warmed-up state through the robust epochs.
  void robust_stage(TrainState& state, const std::function<void(const EpochMetrics&)>& on_epoch = {}) const;

  LabeledFeatures embed_train(const TrainState& state) const;
  LabeledFeatures embed_test(const TrainState& state) const;

  /// Retrieval, detection, histogram and few-shot report for a state.
  EvalReport evaluate(const TrainState& state, std::size_t histogram_bins = 40, std::size_t few_shot_trials = 50) const;

  std::vector<double> estimated_weights_or_ones(const TrainState& state) const;

 private:
  WeightParams effective_weight_params() const;

  TrainConfig config_;
  double injected_fraction_ = 0.0;
  Matrix train_video_;
  Matrix train_audio_;
  Matrix test_video_;
  std::vector<std::uint32_t> labels_;
  std::vector<std::uint32_t> test_labels_;
  std::vector<bool> faulty_;
};

void checkpoint_save(const TrainState& state, const std::filesystem::path& path);
/// Throws IoError, FormatError, VersionMismatch.
TrainState checkpoint_load(const std::filesystem::path& path);

std::vector<char> encode_checkpoint(const TrainState& state);
TrainState decode_checkpoint(std::span<const char> bytes);

std::string metrics_csv_header();
std::string metrics_csv_row(const EpochMetrics& m);

}  // namespace rxid
