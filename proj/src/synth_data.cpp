#include "rxid/synth_data.hpp"

#include <cmath>
#include <string>

#include "rxid/binary_io.hpp"
#include "rxid/error.hpp"
#include "rxid/rng.hpp"

namespace rxid {

namespace {

constexpr char kMagic[] = "RXID";
constexpr std::uint32_t kVersion = 1;

enum Stream : std::uint64_t { kPrototypes = 1, kMixing = 2, kTrain = 3, kTest = 4, kInjectChoice = 5, kInjectAudio = 6 };

Matrix random_unit_rows(std::size_t rows, std::size_t cols, Rng& rng) {
  Matrix m(rows, cols);
  Vec draw(cols);
  for (std::size_t r = 0; r < rows; ++r) {
    for (double& x : draw) x = rng.normal();
    const Vec u = math::l2_normalize(draw);
    std::copy(u.begin(), u.end(), m.row(r).begin());
  }
  return m;
}

Matrix gaussian_matrix(std::size_t rows, std::size_t cols, Rng& rng) {
  Matrix m(rows, cols);
  for (double& x : m.data()) x = rng.normal();
  return m;
}

Vec perturbed_latent(std::span<const double> prototype, double sigma, Rng& rng) {
  Vec z(prototype.begin(), prototype.end());
  for (double& x : z) x += sigma * rng.normal();
  return math::l2_normalize(z);
}

// Latents for per_class instances of every class, class-major order.
SynthLatents draw_latents(const SynthConfig& cfg, const SynthGeometry& geo, std::uint32_t per_class, Rng& rng) {
  const std::size_t n = static_cast<std::size_t>(cfg.num_classes) * per_class;
  SynthLatents out{Matrix(n, cfg.latent_dim), Matrix(n, cfg.latent_dim), {}};
  out.labels.reserve(n);
  std::size_t row = 0;
  for (std::uint32_t c = 0; c < cfg.num_classes; ++c) {
    for (std::uint32_t k = 0; k < per_class; ++k, ++row) {
      const Vec zv = perturbed_latent(geo.video_prototypes.row(c), cfg.within_class_noise, rng);
      const Vec za = perturbed_latent(geo.audio_prototypes.row(c), cfg.within_class_noise, rng);
      std::copy(zv.begin(), zv.end(), out.video.row(row).begin());
      std::copy(za.begin(), za.end(), out.audio.row(row).begin());
      out.labels.push_back(c);
    }
  }
  return out;
}

std::vector<SynthInstance> to_instances(const SynthLatents& lat, const SynthGeometry& geo, std::uint64_t first_id) {
  std::vector<SynthInstance> out;
  out.reserve(lat.labels.size());
  for (std::size_t i = 0; i < lat.labels.size(); ++i)
    out.push_back({first_id + i, lat.labels[i], false, mix_raw(geo.video_mixing, lat.video.row(i)),
                   mix_raw(geo.audio_mixing, lat.audio.row(i))});
  return out;
}

}  // namespace

void SynthConfig::validate() const {
  auto fail = [](const std::string& what) { throw Error(ErrorCode::InvalidConfig, what); };
  if (num_classes < 2) fail("num_classes must be at least 2");
  if (instances_per_class < 1) fail("instances_per_class must be at least 1");
  if (latent_dim < 2 || raw_dim < 2) fail("latent_dim and raw_dim must be at least 2");
  if (distractor_classes < 1) fail("distractor_classes must be at least 1");
  if (!(within_class_noise >= 0.0) || !std::isfinite(within_class_noise)) fail("within_class_noise must be >= 0");
  if (!(faulty_fraction >= 0.0 && faulty_fraction < 1.0)) fail("faulty_fraction must lie in [0,1)");
  if (static_cast<std::uint64_t>(num_classes) * instances_per_class < 2) fail("dataset needs at least 2 instances");
}

std::vector<bool> SynthDataset::faulty_flags() const {
  std::vector<bool> flags(train.size());
  for (std::size_t i = 0; i < train.size(); ++i) flags[i] = train[i].faulty;
  return flags;
}

std::vector<std::uint32_t> SynthDataset::train_labels() const {
  std::vector<std::uint32_t> labels;
  labels.reserve(train.size());
  for (const auto& x : train) labels.push_back(x.label);
  return labels;
}

std::vector<std::uint32_t> SynthDataset::test_labels() const {
  std::vector<std::uint32_t> labels;
  labels.reserve(test.size());
  for (const auto& x : test) labels.push_back(x.label);
  return labels;
}

SynthGeometry make_geometry(const SynthConfig& cfg) {
  Rng proto(derive_seed(cfg.seed, kPrototypes));
  SynthGeometry geo;
  geo.video_prototypes = random_unit_rows(cfg.num_classes, cfg.latent_dim, proto);
  geo.audio_prototypes = random_unit_rows(cfg.num_classes, cfg.latent_dim, proto);
  geo.distractor_prototypes = random_unit_rows(cfg.distractor_classes, cfg.latent_dim, proto);
  Rng mix(derive_seed(cfg.seed, kMixing));
  geo.video_mixing = gaussian_matrix(cfg.raw_dim, cfg.latent_dim, mix);
  geo.audio_mixing = gaussian_matrix(cfg.raw_dim, cfg.latent_dim, mix);
  return geo;
}

std::vector<float> mix_raw(const Matrix& mixing, std::span<const double> latent) {
  std::vector<float> raw(mixing.rows());
  for (std::size_t r = 0; r < mixing.rows(); ++r) raw[r] = static_cast<float>(std::tanh(math::dot(mixing.row(r), latent)));
  return raw;
}

SynthLatents generate_train_latents(const SynthConfig& cfg) {
  cfg.validate();
  const auto geo = make_geometry(cfg);
  Rng rng(derive_seed(cfg.seed, kTrain));
  return draw_latents(cfg, geo, cfg.instances_per_class, rng);
}

SynthDataset generate(const SynthConfig& cfg) {
  cfg.validate();
  const auto geo = make_geometry(cfg);
  SynthDataset ds;
  ds.config = cfg;
  Rng train_rng(derive_seed(cfg.seed, kTrain));
  ds.train = to_instances(draw_latents(cfg, geo, cfg.instances_per_class, train_rng), geo, 0);
  Rng test_rng(derive_seed(cfg.seed, kTest));
  ds.test = to_instances(draw_latents(cfg, geo, cfg.test_per_class, test_rng), geo, ds.train.size());
  return ds;
}

std::vector<std::size_t> choose_faulty(std::size_t num_instances, double fraction, std::uint64_t seed) {
  if (!(fraction >= 0.0 && fraction < 1.0))
    throw Error(ErrorCode::OutOfRange, "faulty fraction must lie in [0,1), got " + std::to_string(fraction));
  const auto count = static_cast<std::size_t>(std::floor(fraction * static_cast<double>(num_instances)));
  // Partial Fisher-Yates: the first count slots are a uniform subset.
  std::vector<std::size_t> order(num_instances);
  for (std::size_t i = 0; i < num_instances; ++i) order[i] = i;
  Rng rng(derive_seed(seed, kInjectChoice));
  for (std::size_t k = 0; k < count; ++k) {
    const std::size_t j = k + static_cast<std::size_t>(rng.index(num_instances - k));
    std::swap(order[k], order[j]);
  }
  order.resize(count);
  return order;
}

void inject_faulty_positives(SynthDataset& ds, double fraction, std::uint64_t seed) {
  const auto chosen = choose_faulty(ds.train.size(), fraction, seed);
  const auto geo = make_geometry(ds.config);
  Rng rng(derive_seed(seed, kInjectAudio));
  for (std::size_t i : chosen) {
    const auto d = static_cast<std::size_t>(rng.index(ds.config.distractor_classes));
    const Vec z = perturbed_latent(geo.distractor_prototypes.row(d), ds.config.within_class_noise, rng);
    ds.train[i].audio = mix_raw(geo.audio_mixing, z);
    ds.train[i].faulty = true;
  }
  ds.injected_fraction = fraction;
  ds.injection_seed = seed;
}

SynthDataset generate_with_faults(const SynthConfig& cfg) {
  SynthDataset ds = generate(cfg);
  if (cfg.faulty_fraction > 0.0) inject_faulty_positives(ds, cfg.faulty_fraction, derive_seed(cfg.seed, 100));
  return ds;
}

std::vector<char> encode_dataset(const SynthDataset& ds) {
  io::ByteWriter w;
  w.raw(std::string_view(kMagic, 4));
  w.u32(kVersion);
  const auto& c = ds.config;
  w.u64(ds.train.size());
  w.u64(ds.test.size());
  w.u32(c.num_classes);
  w.u32(c.instances_per_class);
  w.u32(c.test_per_class);
  w.u32(c.latent_dim);
  w.u32(c.raw_dim);
  w.u32(c.distractor_classes);
  w.f64(c.within_class_noise);
  w.f64(c.faulty_fraction);
  w.u64(c.seed);
  w.f64(ds.injected_fraction);
  w.u64(ds.injection_seed);
  auto records = [&w](const std::vector<SynthInstance>& xs) {
    for (const auto& x : xs) {
      w.u64(x.id);
      w.u32(x.label);
      w.u8(x.faulty ? 1 : 0);
      for (float v : x.video) w.f32(v);
      for (float v : x.audio) w.f32(v);
    }
  };
  records(ds.train);
  records(ds.test);
  return w.bytes();
}

SynthDataset decode_dataset(std::span<const char> bytes) {
  io::ByteReader r(bytes);
  if (r.remaining() < 4 || r.raw(4) != std::string_view(kMagic, 4))
    throw Error(ErrorCode::FormatError, "not a dataset file (bad magic)");
  if (const auto version = r.u32(); version != kVersion)
    throw Error(ErrorCode::FormatError, "unsupported dataset version " + std::to_string(version));
  SynthDataset ds;
  const std::uint64_t n_train = r.u64();
  const std::uint64_t n_test = r.u64();
  auto& c = ds.config;
  c.num_classes = r.u32();
  c.instances_per_class = r.u32();
  c.test_per_class = r.u32();
  c.latent_dim = r.u32();
  c.raw_dim = r.u32();
  c.distractor_classes = r.u32();
  c.within_class_noise = r.f64();
  c.faulty_fraction = r.f64();
  c.seed = r.u64();
  ds.injected_fraction = r.f64();
  ds.injection_seed = r.u64();
  try {
    c.validate();
  } catch (const Error& e) {
    throw Error(ErrorCode::FormatError, std::string("invalid header: ") + e.what());
  }
  const std::size_t record_size = 8 + 4 + 1 + 8 * static_cast<std::size_t>(c.raw_dim);
  if (r.checked_count(n_train, record_size) + r.checked_count(n_test, record_size) > r.remaining() / record_size)
    throw Error(ErrorCode::FormatError, "file shorter than its declared record count");

  auto records = [&](std::uint64_t n, std::vector<SynthInstance>& out, bool allow_faulty) {
    out.resize(n);
    for (auto& x : out) {
      x.id = r.u64();
      x.label = r.u32();
      const std::uint8_t flag = r.u8();
      if (x.label >= c.num_classes) throw Error(ErrorCode::CorruptRecord, "record " + std::to_string(x.id) + " has class out of range");
      if (flag > 1 || (flag == 1 && !allow_faulty))
        throw Error(ErrorCode::CorruptRecord, "record " + std::to_string(x.id) + " has an invalid faulty flag");
      x.faulty = flag == 1;
      x.video.resize(c.raw_dim);
      x.audio.resize(c.raw_dim);
      for (float& v : x.video) v = r.f32();
      for (float& v : x.audio) v = r.f32();
      for (const auto* xs : {&x.video, &x.audio})
        for (float v : *xs)
          if (!(v >= -1.0f && v <= 1.0f))
            throw Error(ErrorCode::CorruptRecord, "record " + std::to_string(x.id) + " has a value outside [-1,1]");
    }
  };
  records(n_train, ds.train, true);
  records(n_test, ds.test, false);
  if (r.remaining() != 0) throw Error(ErrorCode::FormatError, "trailing bytes after the last record");
  return ds;
}

void save_dataset(const SynthDataset& ds, const std::filesystem::path& path) { io::write_file(path, encode_dataset(ds)); }

SynthDataset load_dataset(const std::filesystem::path& path) { return decode_dataset(io::read_file(path)); }

}  // namespace rxid
