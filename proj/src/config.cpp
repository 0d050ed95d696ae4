#include "rxid/config.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <functional>
#include <map>
#include <optional>
#include <sstream>

#include "rxid/error.hpp"

namespace rxid {

std::string_view to_string(TrainMode m) noexcept {
  switch (m) {
    case TrainMode::Xid: return "xid";
    case TrainMode::Weighted: return "weighted";
    case TrainMode::OracleWeighted: return "oracle_weighted";
    case TrainMode::Soft: return "soft";
    case TrainMode::Robust: return "robust";
    case TrainMode::Custom: return "custom";
  }
  return "unknown";
}

TrainMode parse_train_mode(std::string_view name) {
  for (auto m : {TrainMode::Xid, TrainMode::Weighted, TrainMode::OracleWeighted, TrainMode::Soft, TrainMode::Robust,
                 TrainMode::Custom})
    if (name == to_string(m)) return m;
  throw Error(ErrorCode::InvalidConfig,
              "train.mode: unknown mode '" + std::string(name) + "' (xid, weighted, oracle_weighted, soft, robust, custom)");
}

TrainConfig apply_mode(TrainConfig c, TrainMode mode) {
  switch (mode) {
    case TrainMode::Xid: c.enable_weighting = false; c.enable_soft_targets = false; break;
    case TrainMode::Weighted:
      c.enable_weighting = true;
      c.weight_source = WeightSource::Estimated;
      c.enable_soft_targets = false;
      break;
    case TrainMode::OracleWeighted:
      c.enable_weighting = true;
      c.weight_source = WeightSource::Oracle;
      c.enable_soft_targets = false;
      break;
    case TrainMode::Soft: c.enable_weighting = false; c.enable_soft_targets = true; break;
    case TrainMode::Robust:
      c.enable_weighting = true;
      c.weight_source = WeightSource::Estimated;
      c.enable_soft_targets = true;
      break;
    case TrainMode::Custom: break;
  }
  return c;
}

void ExperimentConfig::override_seed(std::uint64_t seed) {
  data.seed = seed;
  train.seed = seed;
  eval.seeds = {seed};
}

namespace {

[[noreturn]] void bad(const std::string& key, const std::string& what) {
  throw Error(ErrorCode::InvalidConfig, key + ": " + what);
}

template <typename T>
T parse_number(const std::string& key, const std::string& text) {
  T value{};
  const char* end = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(text.data(), end, value);
  if (ec != std::errc() || ptr != end) bad(key, "cannot parse '" + text + "'");
  return value;
}

bool parse_bool(const std::string& key, const std::string& text) {
  if (text == "true" || text == "1") return true;
  if (text == "false" || text == "0") return false;
  bad(key, "expected true or false, got '" + text + "'");
}

template <typename T>
std::vector<T> parse_list(const std::string& key, const std::string& text) {
  std::vector<T> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const auto first = item.find_first_not_of(" \t");
    const auto last = item.find_last_not_of(" \t");
    if (first == std::string::npos) bad(key, "empty list element");
    out.push_back(parse_number<T>(key, item.substr(first, last - first + 1)));
  }
  if (out.empty()) bad(key, "list must not be empty");
  return out;
}

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

template <typename T>
std::string join(const std::vector<T>& xs) {
  std::string out;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    if (i) out += ", ";
    if constexpr (std::is_floating_point_v<T>)
      out += fmt(xs[i]);
    else
      out += std::to_string(xs[i]);
  }
  return out;
}

using Setter = std::function<void(ExperimentConfig&, const std::string& key, const std::string& value)>;

template <typename T, typename Member>
Setter number(Member member) {
  return [member](ExperimentConfig& c, const std::string& key, const std::string& v) {
    std::invoke(member, c) = parse_number<T>(key, v);
  };
}

const std::map<std::string, std::map<std::string, Setter>>& setters() {
  static const std::map<std::string, std::map<std::string, Setter>> table{
      {"data",
       {
           {"num_classes", number<std::uint32_t>([](ExperimentConfig& c) -> auto& { return c.data.num_classes; })},
           {"instances_per_class",
            number<std::uint32_t>([](ExperimentConfig& c) -> auto& { return c.data.instances_per_class; })},
           {"test_per_class", number<std::uint32_t>([](ExperimentConfig& c) -> auto& { return c.data.test_per_class; })},
           {"latent_dim", number<std::uint32_t>([](ExperimentConfig& c) -> auto& { return c.data.latent_dim; })},
           {"raw_dim", number<std::uint32_t>([](ExperimentConfig& c) -> auto& { return c.data.raw_dim; })},
           {"distractor_classes",
            number<std::uint32_t>([](ExperimentConfig& c) -> auto& { return c.data.distractor_classes; })},
           {"within_class_noise", number<double>([](ExperimentConfig& c) -> auto& { return c.data.within_class_noise; })},
           {"faulty_fraction", number<double>([](ExperimentConfig& c) -> auto& { return c.data.faulty_fraction; })},
           {"seed", number<std::uint64_t>([](ExperimentConfig& c) -> auto& { return c.data.seed; })},
       }},
      {"train",
       {
           {"mode", [](ExperimentConfig& c, const std::string&, const std::string& v) { c.mode = parse_train_mode(v); }},
           {"warmup_epochs", number<std::size_t>([](ExperimentConfig& c) -> auto& { return c.train.warmup_epochs; })},
           {"robust_epochs", number<std::size_t>([](ExperimentConfig& c) -> auto& { return c.train.robust_epochs; })},
           {"batch_size", number<std::size_t>([](ExperimentConfig& c) -> auto& { return c.train.batch_size; })},
           {"num_negatives", number<std::size_t>([](ExperimentConfig& c) -> auto& { return c.train.num_negatives; })},
           {"tau", number<double>([](ExperimentConfig& c) -> auto& { return c.train.tau; })},
           {"tau_s", number<double>([](ExperimentConfig& c) -> auto& { return c.train.tau_s; })},
           {"tau_t", number<double>([](ExperimentConfig& c) -> auto& { return c.train.tau_t; })},
           {"lambda", number<double>([](ExperimentConfig& c) -> auto& { return c.train.lambda; })},
           {"delta", number<double>([](ExperimentConfig& c) -> auto& { return c.train.weight_params.delta; })},
           {"kappa", number<double>([](ExperimentConfig& c) -> auto& { return c.train.weight_params.kappa; })},
           {"w_min", number<double>([](ExperimentConfig& c) -> auto& { return c.train.weight_params.w_min; })},
           {"delta_from_noise_fraction",
            [](ExperimentConfig& c, const std::string& k, const std::string& v) {
              c.train.delta_from_noise_fraction = parse_bool(k, v);
            }},
           {"enable_weighting",
            [](ExperimentConfig& c, const std::string& k, const std::string& v) {
              c.train.enable_weighting = parse_bool(k, v);
            }},
           {"weight_source",
            [](ExperimentConfig& c, const std::string& k, const std::string& v) {
              if (v == "estimated")
                c.train.weight_source = WeightSource::Estimated;
              else if (v == "oracle")
                c.train.weight_source = WeightSource::Oracle;
              else
                bad(k, "expected estimated or oracle, got '" + v + "'");
            }},
           {"enable_soft_targets",
            [](ExperimentConfig& c, const std::string& k, const std::string& v) {
              c.train.enable_soft_targets = parse_bool(k, v);
            }},
           {"strategy",
            [](ExperimentConfig& c, const std::string& k, const std::string& v) {
              try {
                c.train.strategy = parse_strategy(v);
              } catch (const Error& e) {
                bad(k, e.what());
              }
            }},
           {"include_self",
            [](ExperimentConfig& c, const std::string& k, const std::string& v) {
              c.train.include_self_in_softening = parse_bool(k, v);
            }},
           {"lr_warmup", number<double>([](ExperimentConfig& c) -> auto& { return c.train.lr_warmup; })},
           {"lr_start", number<double>([](ExperimentConfig& c) -> auto& { return c.train.lr_start; })},
           {"lr_end", number<double>([](ExperimentConfig& c) -> auto& { return c.train.lr_end; })},
           {"bank_momentum", number<double>([](ExperimentConfig& c) -> auto& { return c.train.bank_momentum; })},
           {"hidden_dim", number<std::size_t>([](ExperimentConfig& c) -> auto& { return c.train.hidden_dim; })},
           {"embedding_dim", number<std::size_t>([](ExperimentConfig& c) -> auto& { return c.train.embedding_dim; })},
           {"eval_interval", number<std::size_t>([](ExperimentConfig& c) -> auto& { return c.train.eval_interval; })},
           {"seed", number<std::uint64_t>([](ExperimentConfig& c) -> auto& { return c.train.seed; })},
       }},
      {"eval",
       {
           {"histogram_bins", number<std::size_t>([](ExperimentConfig& c) -> auto& { return c.eval.histogram_bins; })},
           {"few_shot_trials", number<std::size_t>([](ExperimentConfig& c) -> auto& { return c.eval.few_shot_trials; })},
           {"fractions",
            [](ExperimentConfig& c, const std::string& k, const std::string& v) {
              c.eval.fractions = parse_list<double>(k, v);
            }},
           {"seeds",
            [](ExperimentConfig& c, const std::string& k, const std::string& v) {
              c.eval.seeds = parse_list<std::uint64_t>(k, v);
            }},
           {"sweep_param",
            [](ExperimentConfig& c, const std::string& k, const std::string& v) {
              try {
                c.eval.sweep_param = parse_sweep_param(v);
              } catch (const Error& e) {
                bad(k, e.what());
              }
            }},
           {"sweep_values",
            [](ExperimentConfig& c, const std::string& k, const std::string& v) {
              c.eval.sweep_values = parse_list<double>(k, v);
            }},
       }},
      {"output",
       {
           {"dir", [](ExperimentConfig& c, const std::string&, const std::string& v) { c.output_dir = v; }},
       }},
  };
  return table;
}

void validate(const ExperimentConfig& c) {
  auto wrap = [](const char* section, const std::function<void()>& f) {
    try {
      f();
    } catch (const Error& e) {
      if (e.code() != ErrorCode::InvalidConfig) throw;
      throw Error(ErrorCode::InvalidConfig, std::string(section) + ": " + e.what());
    }
  };
  wrap("data", [&] { c.data.validate(); });
  const std::size_t n = static_cast<std::size_t>(c.data.num_classes) * c.data.instances_per_class;
  wrap("train", [&] { c.train.validate(n); });
  if (c.eval.histogram_bins == 0) bad("eval.histogram_bins", "must be positive");
  if (c.eval.few_shot_trials == 0) bad("eval.few_shot_trials", "must be positive");
  for (double f : c.eval.fractions)
    if (!(f >= 0.0 && f <= 0.9)) bad("eval.fractions", "values must lie in [0, 0.9]");
}

}  // namespace

ExperimentConfig parse_config(std::string_view text) {
  namespace pt = boost::property_tree;
  pt::ptree tree;
  std::istringstream in{std::string(text)};
  try {
    pt::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    throw Error(ErrorCode::InvalidConfig, "line " + std::to_string(e.line()) + ": " + e.message());
  }

  ExperimentConfig c;
  std::optional<bool> weighting, soft;
  std::optional<std::string> source;
  const auto& table = setters();
  for (const auto& [section, body] : tree) {
    const auto sec = table.find(section);
    if (body.empty() || sec == table.end()) bad(section, "unknown section or key outside a section");
    for (const auto& [key, node] : body) {
      const std::string full = section + "." + key;
      const auto it = sec->second.find(key);
      if (it == sec->second.end()) bad(full, "unknown key");
      const std::string value = node.get_value<std::string>();
      it->second(c, full, value);
      if (full == "train.enable_weighting") weighting = c.train.enable_weighting;
      if (full == "train.enable_soft_targets") soft = c.train.enable_soft_targets;
      if (full == "train.weight_source") source = value;
    }
  }

  if (c.mode != TrainMode::Custom) {
    const TrainConfig preset = apply_mode(c.train, c.mode);
    const std::string m(to_string(c.mode));
    if (weighting && *weighting != preset.enable_weighting) bad("train.enable_weighting", "conflicts with mode=" + m);
    if (soft && *soft != preset.enable_soft_targets) bad("train.enable_soft_targets", "conflicts with mode=" + m);
    if (source && preset.enable_weighting && c.train.weight_source != preset.weight_source)
      bad("train.weight_source", "conflicts with mode=" + m);
    c.train = preset;
  }
  validate(c);
  return c;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::InvalidConfig, "cannot open config file " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

std::string to_ini(const ExperimentConfig& c) {
  std::ostringstream o;
  const auto& d = c.data;
  const auto& t = c.train;
  auto b = [](bool v) { return v ? "true" : "false"; };
  o << "[data]\n"
    << "num_classes = " << d.num_classes << "\n"
    << "instances_per_class = " << d.instances_per_class << "\n"
    << "test_per_class = " << d.test_per_class << "\n"
    << "latent_dim = " << d.latent_dim << "\n"
    << "raw_dim = " << d.raw_dim << "\n"
    << "distractor_classes = " << d.distractor_classes << "\n"
    << "within_class_noise = " << fmt(d.within_class_noise) << "\n"
    << "faulty_fraction = " << fmt(d.faulty_fraction) << "\n"
    << "seed = " << d.seed << "\n\n"
    << "[train]\n"
    << "mode = " << to_string(c.mode) << "\n"
    << "warmup_epochs = " << t.warmup_epochs << "\n"
    << "robust_epochs = " << t.robust_epochs << "\n"
    << "batch_size = " << t.batch_size << "\n"
    << "num_negatives = " << t.num_negatives << "\n"
    << "tau = " << fmt(t.tau) << "\n"
    << "tau_s = " << fmt(t.tau_s) << "\n"
    << "tau_t = " << fmt(t.tau_t) << "\n"
    << "lambda = " << fmt(t.lambda) << "\n"
    << "delta = " << fmt(t.weight_params.delta) << "\n"
    << "kappa = " << fmt(t.weight_params.kappa) << "\n"
    << "w_min = " << fmt(t.weight_params.w_min) << "\n"
    << "delta_from_noise_fraction = " << b(t.delta_from_noise_fraction) << "\n"
    << "enable_weighting = " << b(t.enable_weighting) << "\n"
    << "weight_source = " << to_string(t.weight_source) << "\n"
    << "enable_soft_targets = " << b(t.enable_soft_targets) << "\n"
    << "strategy = " << to_string(t.strategy) << "\n"
    << "include_self = " << b(t.include_self_in_softening) << "\n"
    << "lr_warmup = " << fmt(t.lr_warmup) << "\n"
    << "lr_start = " << fmt(t.lr_start) << "\n"
    << "lr_end = " << fmt(t.lr_end) << "\n"
    << "bank_momentum = " << fmt(t.bank_momentum) << "\n"
    << "hidden_dim = " << t.hidden_dim << "\n"
    << "embedding_dim = " << t.embedding_dim << "\n"
    << "eval_interval = " << t.eval_interval << "\n"
    << "seed = " << t.seed << "\n\n"
    << "[eval]\n"
    << "histogram_bins = " << c.eval.histogram_bins << "\n"
    << "few_shot_trials = " << c.eval.few_shot_trials << "\n"
    << "fractions = " << join(c.eval.fractions) << "\n"
    << "seeds = " << join(c.eval.seeds) << "\n"
    << "sweep_param = " << to_string(c.eval.sweep_param) << "\n"
    << "sweep_values = " << join(c.eval.sweep_values) << "\n\n"
    << "[output]\n"
    << "dir = " << c.output_dir.string() << "\n";
  return o.str();
}

}  // namespace rxid
