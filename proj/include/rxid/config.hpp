#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "rxid/experiments.hpp"
#include "rxid/synth_data.hpp"
#include "rxid/trainer.hpp"

namespace rxid {

/// Presets for the robust-stage flags. Custom leaves them to explicit keys.
enum class TrainMode : std::uint8_t { Xid, Weighted, OracleWeighted, Soft, Robust, Custom };

std::string_view to_string(TrainMode m) noexcept;
/// Throws InvalidConfig.
TrainMode parse_train_mode(std::string_view name);
TrainConfig apply_mode(TrainConfig config, TrainMode mode);

struct EvalOptions {
  std::size_t histogram_bins = 40;
  std::size_t few_shot_trials = 50;
  std::vector<double> fractions{0.0, 0.1, 0.2, 0.3, 0.5};
  std::vector<std::uint64_t> seeds{1, 2, 3};
  SweepParam sweep_param = SweepParam::Lambda;
  std::vector<double> sweep_values{0.0, 0.25, 0.5, 0.75, 1.0};

  friend bool operator==(const EvalOptions&, const EvalOptions&) = default;
};

struct ExperimentConfig {
  SynthConfig data;
  TrainConfig train;
  TrainMode mode = TrainMode::Robust;
  EvalOptions eval;
  std::filesystem::path output_dir = "rxid_out";

  /// Seeds every stage from one value: data, training and the experiment seed list.
  void override_seed(std::uint64_t seed);

  friend bool operator==(const ExperimentConfig&, const ExperimentConfig&) = default;
};

/// Parses the INI text ([data], [train], [eval], [output]); absent keys keep
/// their defaults. Throws InvalidConfig naming the offending key.
ExperimentConfig parse_config(std::string_view text);
ExperimentConfig load_config(const std::filesystem::path& path);

/// Every key with its resolved value; parse_config of the result reproduces the config.
std::string to_ini(const ExperimentConfig& config);

}  // namespace rxid
