#include "rxid/trainer.hpp"

#include <cmath>
#include <iostream>
#include <limits>

#include "rxid/binary_io.hpp"
#include "rxid/error.hpp"

namespace rxid {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

enum Stream : std::uint64_t { kVideoInit = 10, kAudioInit = 11, kVideoBank = 12, kAudioBank = 13, kTraining = 14 };

Matrix to_matrix(const std::vector<SynthInstance>& xs, bool video, std::size_t dim) {
  Matrix m(xs.size(), dim);
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const auto& src = video ? xs[i].video : xs[i].audio;
    if (src.size() != dim) throw Error(ErrorCode::ShapeMismatch, "instance " + std::to_string(i) + " has wrong raw size");
    auto dst = m.row(i);
    for (std::size_t k = 0; k < dim; ++k) dst[k] = src[k];
  }
  return m;
}

std::pair<double, double> split_means(std::span<const double> values, const std::vector<bool>& faulty) {
  double clean = 0.0, bad = 0.0;
  std::size_t n_clean = 0, n_bad = 0;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (faulty[i]) {
      bad += values[i];
      ++n_bad;
    } else {
      clean += values[i];
      ++n_clean;
    }
  }
  return {n_clean ? clean / static_cast<double>(n_clean) : kNaN, n_bad ? bad / static_cast<double>(n_bad) : kNaN};
}

}  // namespace

std::string_view to_string(WeightSource s) noexcept { return s == WeightSource::Oracle ? "oracle" : "estimated"; }

std::string_view to_string(Stage s) noexcept { return s == Stage::Robust ? "robust" : "warmup"; }

void TrainConfig::validate(std::size_t num_instances) const {
  auto fail = [](const std::string& what) { throw Error(ErrorCode::InvalidConfig, what); };
  if (batch_size == 0 || batch_size > num_instances) fail("batch_size must lie in [1, N]");
  if (num_negatives == 0 || num_negatives + 1 > num_instances) fail("num_negatives must lie in [1, N-1]");
  if (!(tau > 0.0) || !(tau_s > 0.0) || !(tau_t > 0.0)) fail("temperatures must be positive");
  if (!(lambda >= 0.0 && lambda <= 1.0)) fail("lambda must lie in [0,1]");
  if (!(lr_warmup >= 0.0) || !(lr_start >= 0.0) || !(lr_end >= 0.0)) fail("learning rates must be non-negative");
  if (!(bank_momentum >= 0.0 && bank_momentum <= 1.0)) fail("bank_momentum must lie in [0,1]");
  if (hidden_dim == 0 || embedding_dim < 2) fail("hidden_dim must be positive and embedding_dim at least 2");
  if (eval_interval == 0) fail("eval_interval must be positive");
  try {
    weight_params.validate();
  } catch (const Error& e) {
    fail(e.what());
  }
}

Trainer::Trainer(const SynthDataset& dataset, TrainConfig config)
    : config_(std::move(config)),
      injected_fraction_(dataset.injected_fraction),
      train_video_(to_matrix(dataset.train, true, dataset.config.raw_dim)),
      train_audio_(to_matrix(dataset.train, false, dataset.config.raw_dim)),
      test_video_(to_matrix(dataset.test, true, dataset.config.raw_dim)),
      labels_(dataset.train_labels()),
      test_labels_(dataset.test_labels()),
      faulty_(dataset.faulty_flags()) {
  config_.validate(dataset.train.size());
}

WeightParams Trainer::effective_weight_params() const {
  WeightParams p = config_.weight_params;
  if (config_.delta_from_noise_fraction && injected_fraction_ > 0.0) p.delta = delta_for_noise_fraction(injected_fraction_);
  return p;
}

TrainState Trainer::init_state() const {
  const MlpShape shape{train_video_.cols(), config_.hidden_dim, config_.embedding_dim};
  const std::uint64_t seed = config_.seed;
  const std::size_t n = num_instances();
  return TrainState{
      MlpEncoder(shape, derive_seed(seed, kVideoInit)),
      MlpEncoder(shape, derive_seed(seed, kAudioInit)),
      AdamState{},
      AdamState{},
      MemoryBank::random(n, config_.embedding_dim, derive_seed(seed, kVideoBank), config_.bank_momentum, Modality::Video),
      MemoryBank::random(n, config_.embedding_dim, derive_seed(seed, kAudioBank), config_.bank_momentum, Modality::Audio),
      WeightState{},
      0,
      Rng(derive_seed(seed, kTraining)),
  };
}

std::vector<double> Trainer::estimated_weights_or_ones(const TrainState& state) const {
  try {
    return compute_weight_state(state.video_bank, state.audio_bank, effective_weight_params()).weights;
  } catch (const Error& e) {
    if (e.code() != ErrorCode::DegenerateScores) throw;
    return std::vector<double>(num_instances(), 1.0);
  }
}

EpochPlan Trainer::plan_epoch(const TrainState& state) const {
  EpochPlan plan;
  const std::size_t n = num_instances();
  if (state.epoch < config_.warmup_epochs) {
    plan.stage = Stage::Warmup;
    plan.lr = config_.lr_warmup;
    plan.weights.assign(n, 1.0);
    return plan;
  }
  plan.stage = Stage::Robust;
  plan.lr = cosine_lr(state.epoch - config_.warmup_epochs, config_.robust_epochs, config_.lr_start, config_.lr_end);
  plan.robust_path = !config_.vanilla_robust_stage();
  plan.soft_targets = config_.enable_soft_targets;
  if (!config_.enable_weighting) {
    plan.weights.assign(n, 1.0);
  } else if (config_.weight_source == WeightSource::Oracle) {
    plan.weights = oracle_weights(faulty_);
  } else {
    try {
      plan.weights = compute_weight_state(state.video_bank, state.audio_bank, effective_weight_params()).weights;
    } catch (const Error& e) {
      if (e.code() != ErrorCode::DegenerateScores) throw;
      std::cerr << "warning: degenerate correspondence scores at epoch " << state.epoch << "; using unit weights\n";
      plan.weights.assign(n, 1.0);
    }
  }
  return plan;
}

BatchEvaluation Trainer::evaluate_batch(const TrainState& state, std::span<const std::size_t> indices,
                                        std::span<const NegativeSet> negatives, const EpochPlan& plan) const {
  if (negatives.size() != indices.size()) throw Error(ErrorCode::ShapeMismatch, "one negative set per batch index required");
  const std::size_t b = indices.size();
  BatchEvaluation out;
  out.video_caches.reserve(b);
  out.audio_caches.reserve(b);
  std::vector<ContrastInstance> instances;
  instances.reserve(b);
  std::vector<TargetPair> targets;
  const SofteningOptions soft_opts{config_.tau_s, config_.tau_t, config_.include_self_in_softening};
  std::vector<std::uint32_t> cand_labels;

  for (std::size_t k = 0; k < b; ++k) {
    const std::size_t i = indices[k];
    if (i >= num_instances()) throw Error(ErrorCode::IndexOutOfRange, "batch index " + std::to_string(i));
    if (negatives[k].base != i) throw Error(ErrorCode::ShapeMismatch, "negative set does not belong to its batch index");
    out.video_caches.push_back(state.video_encoder.forward(train_video_.row(i)));
    out.audio_caches.push_back(state.audio_encoder.forward(train_audio_.row(i)));
    instances.push_back({out.video_caches.back().embedding, out.audio_caches.back().embedding,
                         make_candidates(state.video_bank, state.audio_bank, negatives[k]), config_.tau});
    if (plan.robust_path) {
      if (plan.soft_targets) {
        cand_labels.clear();
        if (config_.strategy == Strategy::Oracle) {
          cand_labels.push_back(labels_[i]);
          for (std::size_t j : negatives[k].indices) cand_labels.push_back(labels_[j]);
        }
        targets.push_back(build_targets(config_.strategy, instances.back().targets, config_.lambda, soft_opts, cand_labels));
      } else {
        const auto t = one_hot_target(instances.back().targets.num_candidates());
        targets.push_back({t, t});
      }
    }
  }

  if (plan.robust_path) {
    std::vector<double> w(b);
    double w_sum = 0.0;
    for (std::size_t k = 0; k < b; ++k) w_sum += (w[k] = plan.weights[indices[k]]);
    BatchLoss bl = robust_batch_loss(instances, w, targets);
    out.loss = bl.loss;
    out.instance_losses = std::move(bl.instance_losses);
    out.grads = std::move(bl.grads);
    out.mean_weight = w_sum / static_cast<double>(b);
    double h = 0.0;
    for (const auto& t : targets) h += 0.5 * (math::entropy(t.video.probs) + math::entropy(t.audio.probs));
    out.target_entropy = h / static_cast<double>(b);
  } else {
    const double scale = 1.0 / static_cast<double>(b);
    for (const auto& inst : instances) {
      LossGrad g = xid_grad(inst);
      out.instance_losses.push_back(g.loss);
      out.loss += scale * g.loss;
      g.loss *= scale;
      for (double& x : g.grad_video) x *= scale;
      for (double& x : g.grad_audio) x *= scale;
      out.grads.push_back(std::move(g));
    }
  }
  return out;
}

StepMetrics Trainer::train_step(TrainState& state, std::span<const std::size_t> indices, const EpochPlan& plan) const {
  std::vector<NegativeSet> negatives;
  negatives.reserve(indices.size());
  for (std::size_t i : indices) negatives.push_back(sample_negatives(num_instances(), i, config_.num_negatives, state.rng));

  const BatchEvaluation eval = evaluate_batch(state, indices, negatives, plan);

  MlpGradients grad_v = MlpTensors::zeros(state.video_encoder.shape());
  MlpGradients grad_a = MlpTensors::zeros(state.audio_encoder.shape());
  for (std::size_t k = 0; k < indices.size(); ++k) {
    state.video_encoder.backward(eval.video_caches[k], eval.grads[k].grad_video, grad_v);
    state.audio_encoder.backward(eval.audio_caches[k], eval.grads[k].grad_audio, grad_a);
  }
  adam_step(state.video_encoder, grad_v, state.video_optimizer, plan.lr);
  adam_step(state.audio_encoder, grad_a, state.audio_optimizer, plan.lr);

  for (std::size_t k = 0; k < indices.size(); ++k) {
    state.video_bank.ema_update(indices[k], eval.video_caches[k].embedding);
    state.audio_bank.ema_update(indices[k], eval.audio_caches[k].embedding);
  }
  return {eval.loss, eval.mean_weight, eval.target_entropy};
}

EpochMetrics Trainer::run_epoch(TrainState& state) const {
  if (state.epoch >= config_.total_epochs()) throw Error(ErrorCode::OutOfRange, "all configured epochs already ran");
  const EpochPlan plan = plan_epoch(state);
  if (plan.stage == Stage::Robust) {
    state.weights.weights = plan.weights;
    state.weights.params = effective_weight_params();
  }

  const std::size_t n = num_instances();
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  for (std::size_t k = n - 1; k > 0; --k) std::swap(order[k], order[state.rng.index(k + 1)]);

  double loss_sum = 0.0;
  std::size_t steps = 0;
  for (std::size_t start = 0; start < n; start += config_.batch_size) {
    const std::size_t end = std::min(n, start + config_.batch_size);
    const auto metrics = train_step(state, std::span<const std::size_t>(order).subspan(start, end - start), plan);
    if (!std::isfinite(metrics.loss)) throw Error(ErrorCode::OutOfRange, "non-finite loss at epoch " + std::to_string(state.epoch));
    loss_sum += metrics.loss;
    ++steps;
  }

  EpochMetrics m;
  m.epoch = state.epoch;
  m.stage = plan.stage;
  m.lr = plan.lr;
  m.loss = loss_sum / static_cast<double>(steps);
  ++state.epoch;

  const auto scores = correspondence_scores(state.video_bank, state.audio_bank);
  const auto weights = estimated_weights_or_ones(state);
  std::tie(m.mean_weight_clean, m.mean_weight_faulty) = split_means(weights, faulty_);
  try {
    m.faulty_auc = faulty_detection_auc(scores, faulty_);
  } catch (const Error& e) {
    if (e.code() != ErrorCode::DegenerateLabels) throw;
    m.faulty_auc = kNaN;
  }
  const bool last = state.epoch == config_.total_epochs();
  if (last || state.epoch % config_.eval_interval == 0) {
    const std::size_t ks[] = {1, 5};
    const auto r = retrieval_r_at_ks(embed_test(state), embed_train(state), ks);
    m.r_at_1 = r.at(1);
    m.r_at_5 = r.at(5);
  } else {
    m.r_at_1 = m.r_at_5 = kNaN;
  }
  return m;
}

void Trainer::run(TrainState& state, const std::function<void(const EpochMetrics&)>& on_epoch,
                  std::optional<std::uint64_t> until) const {
  const std::uint64_t stop = until.value_or(config_.total_epochs());
  if (stop > config_.total_epochs()) throw Error(ErrorCode::OutOfRange, "requested epoch beyond the configured schedule");
  while (state.epoch < stop) {
    const auto m = run_epoch(state);
    if (on_epoch) on_epoch(m);
  }
}

TrainState Trainer::warmup() const {
  TrainState state = init_state();
  run(state, {}, config_.warmup_epochs);
  return state;
}

void Trainer::robust_stage(TrainState& state, const std::function<void(const EpochMetrics&)>& on_epoch) const {
  if (state.epoch < config_.warmup_epochs) throw Error(ErrorCode::OutOfRange, "robust stage requires a warmed-up state");
  run(state, on_epoch);
}

LabeledFeatures Trainer::embed_train(const TrainState& state) const {
  LabeledFeatures f{Matrix(num_instances(), state.video_encoder.shape().output), labels_};
  for (std::size_t i = 0; i < num_instances(); ++i) {
    const Vec e = state.video_encoder.embed(train_video_.row(i));
    std::copy(e.begin(), e.end(), f.features.row(i).begin());
  }
  return f;
}

LabeledFeatures Trainer::embed_test(const TrainState& state) const {
  LabeledFeatures f{Matrix(test_video_.rows(), state.video_encoder.shape().output), test_labels_};
  for (std::size_t i = 0; i < test_video_.rows(); ++i) {
    const Vec e = state.video_encoder.embed(test_video_.row(i));
    std::copy(e.begin(), e.end(), f.features.row(i).begin());
  }
  return f;
}

EvalReport Trainer::evaluate(const TrainState& state, std::size_t histogram_bins, std::size_t few_shot_trials) const {
  EvalReport report;
  const auto gallery = embed_train(state);
  const auto query = embed_test(state);
  const std::size_t ks[] = {1, 5, 20};
  report.r_at_k = retrieval_r_at_ks(query, gallery, ks);
  report.per_class_r_at_1 = per_class_r_at_1(query, gallery);
  const auto scores = correspondence_scores(state.video_bank, state.audio_bank);
  try {
    report.faulty_auc = faulty_detection_auc(scores, faulty_);
  } catch (const Error& e) {
    if (e.code() != ErrorCode::DegenerateLabels) throw;
    report.faulty_auc = kNaN;
  }
  std::tie(report.mean_weight_clean, report.mean_weight_faulty) = split_means(estimated_weights_or_ones(state), faulty_);
  report.histogram = score_histogram(scores, histogram_bins, -1.0, 1.0, faulty_);
  if (!query.labels.empty()) {
    for (std::size_t shots : {1, 5, 20}) {
      try {
        report.few_shot[shots] = few_shot_probe(gallery, shots, query, few_shot_trials, config_.seed);
      } catch (const Error& e) {
        if (e.code() != ErrorCode::InsufficientSamples) throw;
      }
    }
  }
  return report;
}

// ---- checkpoint ------------------------------------------------------------

namespace {

constexpr char kCheckpointMagic[] = "RXCK";
constexpr std::uint32_t kCheckpointVersion = 1;

void put_encoder(io::ByteWriter& w, const MlpEncoder& enc, const AdamState& opt) {
  w.u64(enc.shape().input);
  w.u64(enc.shape().hidden);
  w.u64(enc.shape().output);
  for (auto s : enc.params().spans()) w.f64s(s);
  w.f64(opt.beta1);
  w.f64(opt.beta2);
  w.f64(opt.eps);
  w.u64(opt.step);
  w.u64(opt.first_moment.size());
  for (std::size_t t = 0; t < opt.first_moment.size(); ++t) {
    w.f64s(opt.first_moment[t]);
    w.f64s(opt.second_moment[t]);
  }
}

std::pair<MlpEncoder, AdamState> get_encoder(io::ByteReader& r) {
  MlpShape shape;
  shape.input = r.u64();
  shape.hidden = r.u64();
  shape.output = r.u64();
  if (shape.input == 0 || shape.hidden == 0 || shape.output < 2 || shape.input > r.remaining() ||
      shape.hidden > r.remaining() || shape.output > r.remaining())
    throw Error(ErrorCode::FormatError, "invalid encoder shape");
  auto read_into = [&r](std::span<double> dst) {
    const auto src = r.f64s();
    if (src.size() != dst.size()) throw Error(ErrorCode::FormatError, "parameter tensor size disagrees with header");
    std::copy(src.begin(), src.end(), dst.begin());
  };
  MlpTensors params = MlpTensors::zeros(shape);
  for (auto t : params.spans()) read_into(t);
  AdamState opt;
  opt.beta1 = r.f64();
  opt.beta2 = r.f64();
  opt.eps = r.f64();
  opt.step = r.u64();
  const std::size_t tensors = r.checked_count(r.u64(), 16);
  for (std::size_t t = 0; t < tensors; ++t) {
    opt.first_moment.push_back(r.f64s());
    opt.second_moment.push_back(r.f64s());
  }
  return {MlpEncoder(shape, std::move(params)), std::move(opt)};
}

void put_bank(io::ByteWriter& w, const MemoryBank& bank) {
  w.u64(bank.size());
  w.u64(bank.dim());
  w.f64(bank.momentum());
  w.u8(static_cast<std::uint8_t>(bank.modality()));
  w.f64s(bank.entries().data());
}

MemoryBank get_bank(io::ByteReader& r) {
  const std::uint64_t n = r.u64();
  const std::uint64_t d = r.u64();
  const double momentum = r.f64();
  const std::uint8_t modality = r.u8();
  if (modality > 1) throw Error(ErrorCode::FormatError, "unknown bank modality");
  const auto values = r.f64s();
  if (n == 0 || d == 0 || values.size() / d != n || values.size() % d != 0)
    throw Error(ErrorCode::FormatError, "bank shape disagrees with its data");
  Matrix entries(n, d);
  std::copy(values.begin(), values.end(), entries.data().begin());
  return MemoryBank(std::move(entries), momentum, static_cast<Modality>(modality));
}

}  // namespace

std::vector<char> encode_checkpoint(const TrainState& s) {
  io::ByteWriter w;
  w.raw(std::string_view(kCheckpointMagic, 4));
  w.u32(kCheckpointVersion);
  w.u64(s.epoch);
  w.str(s.rng.state());
  put_encoder(w, s.video_encoder, s.video_optimizer);
  put_encoder(w, s.audio_encoder, s.audio_optimizer);
  put_bank(w, s.video_bank);
  put_bank(w, s.audio_bank);
  w.f64s(s.weights.weights);
  w.f64s(s.weights.scores);
  w.f64(s.weights.score_mean);
  w.f64(s.weights.score_std);
  w.f64(s.weights.params.delta);
  w.f64(s.weights.params.kappa);
  w.f64(s.weights.params.w_min);
  return w.bytes();
}

TrainState decode_checkpoint(std::span<const char> bytes) {
  io::ByteReader r(bytes);
  if (r.remaining() < 4 || r.raw(4) != std::string_view(kCheckpointMagic, 4))
    throw Error(ErrorCode::FormatError, "not a checkpoint file (bad magic)");
  if (const auto version = r.u32(); version != kCheckpointVersion)
    throw Error(ErrorCode::VersionMismatch, "checkpoint version " + std::to_string(version) + ", expected " +
                                               std::to_string(kCheckpointVersion));
  TrainState s;
  s.epoch = r.u64();
  s.rng.restore(r.str());
  std::tie(s.video_encoder, s.video_optimizer) = get_encoder(r);
  std::tie(s.audio_encoder, s.audio_optimizer) = get_encoder(r);
  s.video_bank = get_bank(r);
  s.audio_bank = get_bank(r);
  s.weights.weights = r.f64s();
  s.weights.scores = r.f64s();
  s.weights.score_mean = r.f64();
  s.weights.score_std = r.f64();
  s.weights.params.delta = r.f64();
  s.weights.params.kappa = r.f64();
  s.weights.params.w_min = r.f64();
  if (r.remaining() != 0) throw Error(ErrorCode::FormatError, "trailing bytes in checkpoint");
  if (s.video_bank.size() != s.audio_bank.size()) throw Error(ErrorCode::FormatError, "bank sizes differ");
  return s;
}

void checkpoint_save(const TrainState& state, const std::filesystem::path& path) {
  io::write_file(path, encode_checkpoint(state));
}

TrainState checkpoint_load(const std::filesystem::path& path) { return decode_checkpoint(io::read_file(path)); }

// ---- metrics ---------------------------------------------------------------

std::string metrics_csv_header() {
  return "epoch,stage,lr,loss,mean_weight_clean,mean_weight_faulty,r_at_1,r_at_5,faulty_auc";
}

std::string metrics_csv_row(const EpochMetrics& m) {
  std::string row = std::to_string(m.epoch);
  row += ',';
  row += to_string(m.stage);
  for (double v : {m.lr, m.loss, m.mean_weight_clean, m.mean_weight_faulty, m.r_at_1, m.r_at_5, m.faulty_auc}) {
    row += ',';
    row += format_number(v);
  }
  return row;
}

}  // namespace rxid
