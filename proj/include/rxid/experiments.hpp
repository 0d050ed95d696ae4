#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "rxid/synth_data.hpp"
#include "rxid/trainer.hpp"

namespace rxid {

/// Robust-stage variants. All of them keep the warmup fields of the base
/// config, so one warmed-up state can seed every variant.
TrainConfig xid_config(TrainConfig base);
/// Weighting only; delta follows the injected fraction when there is one.
TrainConfig weighted_config(TrainConfig base);
TrainConfig oracle_weighted_config(TrainConfig base);
/// Soft targets only (unit weights).
TrainConfig soft_config(TrainConfig base, Strategy strategy, double lambda);

struct Variant {
  std::string method;
  TrainConfig config;
};

struct CellResult {
  std::string method;
  double fraction = 0.0;
  double value = 0.0;  // swept parameter, 0 when unused
  std::uint64_t seed = 0;
  double r_at_1 = 0.0;
  double r_at_5 = 0.0;
  double faulty_auc = 0.0;
};

using Progress = std::function<void(const CellResult&)>;

/// Detection statistics of the shared warmed-up state. Weights use the
/// weighted variant's parameters for the dataset.
struct WarmupReport {
  double faulty_auc = 0.0;
  double mean_weight_clean = 0.0;
  double mean_weight_faulty = 0.0;
};

struct VariantRuns {
  WarmupReport warmup;
  std::vector<CellResult> cells;
};

/// Warms up once on the dataset with the first variant's config, then runs the
/// robust stage of every variant from a copy of that state. Throws InvalidConfig
/// if the variants disagree on a warmup field.
VariantRuns run_variants(const SynthDataset& data, const std::vector<Variant>& variants, const Progress& progress = {});

struct NoiseCurveRequest {
  SynthConfig data;
  TrainConfig train;
  std::vector<double> fractions{0.0, 0.1, 0.2, 0.3, 0.5};
  std::vector<std::uint64_t> seeds{1, 2, 3};
};

/// xid, weighted and oracle per fraction and seed. The seed overrides both the
/// data and training seeds.
std::vector<CellResult> noise_curve(const NoiseCurveRequest& request, const Progress& progress = {});

/// Vanilla xID against every softening strategy on the configured data.
std::vector<CellResult> strategy_table(const SynthConfig& data, const TrainConfig& train,
                                       const std::vector<std::uint64_t>& seeds, const Progress& progress = {});

enum class SweepParam : std::uint8_t { Delta, Lambda };
SweepParam parse_sweep_param(std::string_view name);
std::string_view to_string(SweepParam p) noexcept;

/// Delta sweeps use weighting only; lambda sweeps use soft targets with the
/// configured strategy.
std::vector<CellResult> sweep(const SynthConfig& data, const TrainConfig& train, SweepParam param,
                              const std::vector<double>& values, const std::vector<std::uint64_t>& seeds,
                              const Progress& progress = {});

std::string cells_csv_header();
std::string cells_csv_row(const CellResult& c);

/// Mean R@1 of the cells matching a method and fraction.
double mean_r_at_1(const std::vector<CellResult>& cells, const std::string& method, double fraction);

}  // namespace rxid
