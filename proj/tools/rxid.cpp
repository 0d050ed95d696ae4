#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include "rxid/config.hpp"
#include "rxid/error.hpp"
#include "rxid/experiments.hpp"
#include "rxid/synth_data.hpp"
#include "rxid/trainer.hpp"

namespace fs = std::filesystem;
using namespace rxid;

namespace {

constexpr int kOk = 0;
constexpr int kRuntimeError = 1;
constexpr int kConfigError = 2;

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  out << text;
  if (!out) throw Error(ErrorCode::IoError, "cannot write " + path.string());
}

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoError, "cannot read " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

struct Common {
  std::string config_path;
  std::string out;
  std::optional<std::uint64_t> seed;

  ExperimentConfig load() const {
    ExperimentConfig c = config_path.empty() ? ExperimentConfig{} : load_config(config_path);
    if (seed) c.override_seed(*seed);
    if (!out.empty()) c.output_dir = out;
    return c;
  }
};

void add_common(CLI::App* cmd, Common& common, const char* out_help) {
  cmd->add_option("--config", common.config_path, "INI config file ([data], [train], [eval], [output])")
      ->check(CLI::ExistingFile);
  cmd->add_option("--out", common.out, out_help);
  cmd->add_option("--seed", common.seed, "overrides every seed in the config");
}

SynthDataset dataset_for(const ExperimentConfig& c, const std::string& data_path) {
  if (data_path.empty()) return generate_with_faults(c.data);
  return load_dataset(data_path);
}

int cmd_generate(const Common& common, const std::string& summary) {
  const ExperimentConfig c = common.load();
  const fs::path out = common.out.empty() ? c.output_dir / "dataset.rxid" : fs::path(common.out);
  if (out.has_parent_path()) fs::create_directories(out.parent_path());
  const SynthDataset data = generate_with_faults(c.data);
  save_dataset(data, out);
  std::size_t flagged = 0;
  for (const auto& x : data.train) flagged += x.faulty;
  std::cout << "N=" << data.train.size() << " C=" << c.data.num_classes << " faulty=" << flagged
            << " test=" << data.test.size() << " -> " << out.string() << "\n";
  if (!summary.empty()) {
    std::string csv = "id,class,faulty\n";
    for (const auto& x : data.train) csv += std::to_string(x.id) + ',' + std::to_string(x.label) + ',' + (x.faulty ? "1" : "0") + '\n';
    write_text(summary, csv);
  }
  return kOk;
}

// Keeps the header and rows for epochs before `epoch`, so a resumed run
// appends exactly where the checkpoint left off.
std::string metrics_prefix(const fs::path& path, std::uint64_t epoch) {
  std::istringstream in(read_text(path));
  std::string line, out;
  std::getline(in, line);
  if (line != metrics_csv_header()) throw Error(ErrorCode::FormatError, path.string() + " has an unexpected header");
  out = line + "\n";
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    if (std::stoull(line.substr(0, line.find(','))) < epoch) out += line + "\n";
  }
  return out;
}

int cmd_train(const Common& common, const std::string& data_path, bool resume, std::optional<std::uint64_t> stop_at) {
  ExperimentConfig c = common.load();
  const SynthDataset data = dataset_for(c, data_path);
  c.data = data.config;
  const fs::path dir = c.output_dir;
  fs::create_directories(dir);
  const fs::path checkpoint = dir / "checkpoint.rxck";
  const fs::path metrics = dir / "metrics.csv";

  const Trainer trainer(data, c.train);
  TrainState state;
  std::string csv;
  if (resume) {
    state = checkpoint_load(checkpoint);
    if (state.video_bank.size() != data.train.size())
      throw Error(ErrorCode::ShapeMismatch, "checkpoint was trained on a dataset of a different size");
    csv = metrics_prefix(metrics, state.epoch);
    std::cerr << "resuming at epoch " << state.epoch << "\n";
  } else {
    state = trainer.init_state();
    csv = metrics_csv_header() + "\n";
  }
  write_text(dir / "resolved_config.ini", to_ini(c));
  std::cerr << "mode=" << to_string(c.mode) << " epochs=" << c.train.total_epochs() << " N=" << data.train.size() << "\n";

  std::ofstream out(metrics, std::ios::binary | std::ios::trunc);
  out << csv;
  trainer.run(
      state,
      [&](const EpochMetrics& m) {
        out << metrics_csv_row(m) << "\n";
        out.flush();
        if (!std::isnan(m.r_at_1))
          std::cerr << "epoch " << m.epoch << " " << to_string(m.stage) << " loss=" << format_number(m.loss)
                    << " r@1=" << format_number(m.r_at_1) << "\n";
      },
      stop_at);
  if (!out) throw Error(ErrorCode::IoError, "cannot write " + metrics.string());
  checkpoint_save(state, checkpoint);
  std::cerr << "checkpoint at epoch " << state.epoch << " -> " << checkpoint.string() << "\n";
  return kOk;
}

int cmd_eval(const Common& common, const std::string& data_path, std::string checkpoint_path) {
  ExperimentConfig c = common.load();
  const SynthDataset data = dataset_for(c, data_path);
  const fs::path dir = c.output_dir;
  if (checkpoint_path.empty()) checkpoint_path = (dir / "checkpoint.rxck").string();
  const TrainState state = checkpoint_load(checkpoint_path);
  if (state.video_bank.size() != data.train.size() || state.video_encoder.shape().input != data.config.raw_dim)
    throw Error(ErrorCode::ShapeMismatch, "checkpoint does not match the dataset");
  const Trainer trainer(data, c.train);
  const EvalReport report = trainer.evaluate(state, c.eval.histogram_bins, c.eval.few_shot_trials);
  fs::create_directories(dir);
  write_text(dir / "report.json", report.to_json() + "\n");
  write_text(dir / "histograms.csv", histogram_csv(report.histogram));
  std::cout << "r_at_1=" << format_number(report.r_at_k.at(1)) << " r_at_5=" << format_number(report.r_at_k.at(5))
            << " faulty_auc=" << format_number(report.faulty_auc) << "\n";
  return kOk;
}

void write_cells(const fs::path& path, const std::vector<CellResult>& cells) {
  std::string csv = cells_csv_header() + "\n";
  for (const auto& cell : cells) csv += cells_csv_row(cell) + "\n";
  write_text(path, csv);
}

void log_cell(const CellResult& c) {
  std::cerr << c.method << " fraction=" << format_number(c.fraction) << " seed=" << c.seed
            << " r@1=" << format_number(c.r_at_1) << "\n";
}

int cmd_noise_curve(const Common& common, const std::vector<double>& fractions) {
  ExperimentConfig c = common.load();
  if (!fractions.empty()) c.eval.fractions = fractions;
  fs::create_directories(c.output_dir);
  write_text(c.output_dir / "resolved_config.ini", to_ini(c));
  const auto cells = noise_curve({c.data, c.train, c.eval.fractions, c.eval.seeds}, log_cell);
  write_cells(c.output_dir / "noise_curve.csv", cells);
  for (double f : c.eval.fractions)
    std::cout << "fraction=" << format_number(f) << " xid=" << format_number(mean_r_at_1(cells, "xid", f))
              << " weighted=" << format_number(mean_r_at_1(cells, "weighted", f))
              << " oracle=" << format_number(mean_r_at_1(cells, "oracle", f)) << "\n";
  return kOk;
}

int cmd_sweep(const Common& common, const std::string& param, const std::vector<double>& values) {
  ExperimentConfig c = common.load();
  if (!param.empty()) c.eval.sweep_param = parse_sweep_param(param);
  if (!values.empty()) c.eval.sweep_values = values;
  fs::create_directories(c.output_dir);
  write_text(c.output_dir / "resolved_config.ini", to_ini(c));
  const auto cells = sweep(c.data, c.train, c.eval.sweep_param, c.eval.sweep_values, c.eval.seeds, log_cell);
  write_cells(c.output_dir / ("sweep_" + std::string(to_string(c.eval.sweep_param)) + ".csv"), cells);
  double lo = 1.0, hi = 0.0;
  for (double v : c.eval.sweep_values) {
    const double r = mean_r_at_1(cells, std::string(to_string(c.eval.sweep_param)) + "=" + format_number(v), c.data.faulty_fraction);
    lo = std::min(lo, r);
    hi = std::max(hi, r);
    std::cout << to_string(c.eval.sweep_param) << "=" << format_number(v) << " r_at_1=" << format_number(r) << "\n";
  }
  std::cout << "r_at_1 spread (max - min) = " << format_number(hi - lo) << "\n";
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Robust cross-modal instance discrimination on synthetic paired data"};
  app.require_subcommand(1);

  Common common;
  std::string data_path, summary, checkpoint, param;
  bool resume = false;
  std::optional<std::uint64_t> stop_at;
  std::vector<double> fractions, values;

  auto* gen = app.add_subcommand("generate", "generate a dataset file");
  add_common(gen, common, "dataset file (default <output.dir>/dataset.rxid)");
  gen->add_option("--summary", summary, "also write id,class,faulty CSV here");

  auto* train = app.add_subcommand("train", "warmup then robust stage; writes metrics.csv and a checkpoint");
  add_common(train, common, "output directory");
  train->add_option("--data", data_path, "dataset file (default: generate from [data])")->check(CLI::ExistingFile);
  train->add_flag("--resume", resume, "continue from <out>/checkpoint.rxck");
  train->add_option("--stop-at", stop_at, "stop after this many completed epochs");

  auto* eval = app.add_subcommand("eval", "report.json and histograms.csv for a checkpoint");
  add_common(eval, common, "output directory");
  eval->add_option("--data", data_path, "dataset file (default: generate from [data])")->check(CLI::ExistingFile);
  eval->add_option("--checkpoint", checkpoint, "checkpoint file (default <out>/checkpoint.rxck)");

  auto* noise = app.add_subcommand("noise-curve", "xid, weighted and oracle across injected noise fractions");
  add_common(noise, common, "output directory");
  noise->add_option("--fractions", fractions, "noise fractions in [0, 0.9]")->delimiter(',');

  auto* sw = app.add_subcommand("sweep", "one run per value of delta or lambda");
  add_common(sw, common, "output directory");
  sw->add_option("--param", param, "delta or lambda");
  sw->add_option("--values", values, "comma-separated values")->delimiter(',');

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kConfigError;
  }

  try {
    if (*gen) return cmd_generate(common, summary);
    if (*train) return cmd_train(common, data_path, resume, stop_at);
    if (*eval) return cmd_eval(common, data_path, checkpoint);
    if (*noise) return cmd_noise_curve(common, fractions);
    if (*sw) return cmd_sweep(common, param, values);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return e.code() == ErrorCode::InvalidConfig ? kConfigError : kRuntimeError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kRuntimeError;
  }
  return kRuntimeError;
}
