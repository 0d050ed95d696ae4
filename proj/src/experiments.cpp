#include "rxid/experiments.hpp"

#include <cmath>
#include <limits>

#include "rxid/error.hpp"

namespace rxid {

TrainConfig xid_config(TrainConfig base) {
  base.enable_weighting = false;
  base.enable_soft_targets = false;
  return base;
}

TrainConfig weighted_config(TrainConfig base) {
  base.enable_weighting = true;
  base.weight_source = WeightSource::Estimated;
  base.delta_from_noise_fraction = true;
  base.enable_soft_targets = false;
  return base;
}

TrainConfig oracle_weighted_config(TrainConfig base) {
  base.enable_weighting = true;
  base.weight_source = WeightSource::Oracle;
  base.enable_soft_targets = false;
  return base;
}

TrainConfig soft_config(TrainConfig base, Strategy strategy, double lambda) {
  base.enable_weighting = false;
  base.enable_soft_targets = true;
  base.strategy = strategy;
  base.lambda = lambda;
  return base;
}

namespace {

bool same_warmup(const TrainConfig& a, const TrainConfig& b) {
  return a.warmup_epochs == b.warmup_epochs && a.batch_size == b.batch_size && a.num_negatives == b.num_negatives &&
         a.tau == b.tau && a.lr_warmup == b.lr_warmup && a.bank_momentum == b.bank_momentum &&
         a.hidden_dim == b.hidden_dim && a.embedding_dim == b.embedding_dim && a.seed == b.seed;
}

std::vector<std::uint64_t> checked_seeds(const std::vector<std::uint64_t>& seeds) {
  if (seeds.empty()) throw Error(ErrorCode::InvalidConfig, "at least one seed is required");
  return seeds;
}

double auc_or_nan(std::span<const double> scores, const std::vector<bool>& faulty) {
  try {
    return faulty_detection_auc(scores, faulty);
  } catch (const Error& e) {
    if (e.code() != ErrorCode::DegenerateLabels) throw;
    return std::numeric_limits<double>::quiet_NaN();
  }
}

double masked_mean(std::span<const double> values, const std::vector<bool>& mask, bool want) {
  double sum = 0.0;
  std::size_t n = 0;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (mask[i] == want) {
      sum += values[i];
      ++n;
    }
  }
  return n ? sum / static_cast<double>(n) : std::numeric_limits<double>::quiet_NaN();
}

}  // namespace

VariantRuns run_variants(const SynthDataset& data, const std::vector<Variant>& variants, const Progress& progress) {
  VariantRuns out;
  if (variants.empty()) return out;
  for (const auto& v : variants)
    if (!same_warmup(v.config, variants.front().config))
      throw Error(ErrorCode::InvalidConfig, "variant '" + v.method + "' changes a warmup setting");

  const TrainState warm = Trainer(data, variants.front().config).warmup();
  const auto flags = data.faulty_flags();
  const auto warm_weights = Trainer(data, weighted_config(variants.front().config)).estimated_weights_or_ones(warm);
  out.warmup.faulty_auc = auc_or_nan(correspondence_scores(warm.video_bank, warm.audio_bank), flags);
  out.warmup.mean_weight_clean = masked_mean(warm_weights, flags, false);
  out.warmup.mean_weight_faulty = masked_mean(warm_weights, flags, true);
  for (const auto& v : variants) {
    const Trainer trainer(data, v.config);
    TrainState state = warm;
    trainer.robust_stage(state);
    const std::size_t ks[] = {1, 5};
    const auto r = retrieval_r_at_ks(trainer.embed_test(state), trainer.embed_train(state), ks);
    CellResult cell;
    cell.method = v.method;
    cell.fraction = data.injected_fraction;
    cell.seed = v.config.seed;
    cell.r_at_1 = r.at(1);
    cell.r_at_5 = r.at(5);
    cell.faulty_auc = auc_or_nan(correspondence_scores(state.video_bank, state.audio_bank), flags);
    if (progress) progress(cell);
    out.cells.push_back(cell);
  }
  return out;
}

std::vector<CellResult> noise_curve(const NoiseCurveRequest& request, const Progress& progress) {
  std::vector<CellResult> out;
  for (double f : request.fractions) {
    if (!(f >= 0.0 && f <= 0.9)) throw Error(ErrorCode::InvalidConfig, "noise fractions must lie in [0, 0.9]");
    for (std::uint64_t seed : checked_seeds(request.seeds)) {
      SynthConfig dc = request.data;
      dc.faulty_fraction = f;
      dc.seed = seed;
      TrainConfig tc = request.train;
      tc.seed = seed;
      const auto data = generate_with_faults(dc);
      const auto cells = run_variants(
          data, {{"xid", xid_config(tc)}, {"weighted", weighted_config(tc)}, {"oracle", oracle_weighted_config(tc)}},
          progress).cells;
      out.insert(out.end(), cells.begin(), cells.end());
    }
  }
  return out;
}

std::vector<CellResult> strategy_table(const SynthConfig& data, const TrainConfig& train,
                                       const std::vector<std::uint64_t>& seeds, const Progress& progress) {
  std::vector<CellResult> out;
  for (std::uint64_t seed : checked_seeds(seeds)) {
    SynthConfig dc = data;
    dc.seed = seed;
    TrainConfig tc = train;
    tc.seed = seed;
    std::vector<Variant> variants{{"xid", xid_config(tc)}};
    for (Strategy s : {Strategy::Bootstrap, Strategy::Swapped, Strategy::Neighbor, Strategy::Ccp, Strategy::Oracle})
      variants.push_back({std::string(to_string(s)), soft_config(tc, s, tc.lambda)});
    const auto cells = run_variants(generate_with_faults(dc), variants, progress).cells;
    out.insert(out.end(), cells.begin(), cells.end());
  }
  return out;
}

SweepParam parse_sweep_param(std::string_view name) {
  if (name == "delta") return SweepParam::Delta;
  if (name == "lambda") return SweepParam::Lambda;
  throw Error(ErrorCode::InvalidConfig, "unknown sweep parameter '" + std::string(name) + "' (expected delta or lambda)");
}

std::string_view to_string(SweepParam p) noexcept { return p == SweepParam::Delta ? "delta" : "lambda"; }

std::vector<CellResult> sweep(const SynthConfig& data, const TrainConfig& train, SweepParam param,
                              const std::vector<double>& values, const std::vector<std::uint64_t>& seeds,
                              const Progress& progress) {
  if (values.empty()) throw Error(ErrorCode::InvalidConfig, "sweep needs at least one value");
  std::vector<CellResult> out;
  for (std::uint64_t seed : checked_seeds(seeds)) {
    SynthConfig dc = data;
    dc.seed = seed;
    TrainConfig tc = train;
    tc.seed = seed;
    std::vector<Variant> variants;
    for (double v : values) {
      TrainConfig c;
      if (param == SweepParam::Delta) {
        c = weighted_config(tc);
        c.delta_from_noise_fraction = false;
        c.weight_params.delta = v;
      } else {
        c = soft_config(tc, tc.strategy, v);
      }
      variants.push_back({std::string(to_string(param)) + "=" + format_number(v), c});
    }
    auto cells = run_variants(generate_with_faults(dc), variants, progress).cells;
    for (std::size_t i = 0; i < cells.size(); ++i) cells[i].value = values[i];
    out.insert(out.end(), cells.begin(), cells.end());
  }
  return out;
}

std::string cells_csv_header() { return "method,fraction,value,seed,r_at_1,r_at_5,faulty_auc"; }

std::string cells_csv_row(const CellResult& c) {
  return c.method + ',' + format_number(c.fraction) + ',' + format_number(c.value) + ',' + std::to_string(c.seed) + ',' +
         format_number(c.r_at_1) + ',' + format_number(c.r_at_5) + ',' + format_number(c.faulty_auc);
}

double mean_r_at_1(const std::vector<CellResult>& cells, const std::string& method, double fraction) {
  double sum = 0.0;
  std::size_t n = 0;
  for (const auto& c : cells) {
    if (c.method == method && std::abs(c.fraction - fraction) < 1e-12) {
      sum += c.r_at_1;
      ++n;
    }
  }
  return n ? sum / static_cast<double>(n) : std::numeric_limits<double>::quiet_NaN();
}

}  // namespace rxid
