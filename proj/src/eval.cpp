#include "rxid/eval.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numeric>

#include <json.hpp>

#include "rxid/error.hpp"
#include "rxid/rng.hpp"

namespace rxid {

namespace {

void check_features(const LabeledFeatures& f, const char* name) {
  if (f.features.rows() != f.labels.size())
    throw Error(ErrorCode::ShapeMismatch, std::string(name) + " has " + std::to_string(f.labels.size()) + " labels for " +
                                              std::to_string(f.features.rows()) + " rows");
}

Matrix unit_rows(const Matrix& m) {
  Matrix out(m.rows(), m.cols());
  for (std::size_t r = 0; r < m.rows(); ++r) {
    const double n = math::norm(m.row(r));
    auto dst = out.row(r);
    const auto src = m.row(r);
    for (std::size_t c = 0; c < m.cols(); ++c) dst[c] = n > 0.0 ? src[c] / n : 0.0;
  }
  return out;
}

// Rank (0-based) of the best same-class gallery item under the
// (similarity desc, index asc) order; gallery size if the class is absent.
std::vector<std::size_t> first_hit_ranks(const LabeledFeatures& query, const LabeledFeatures& gallery) {
  check_features(query, "query");
  check_features(gallery, "gallery");
  if (query.features.cols() != gallery.features.cols() && !query.labels.empty() && !gallery.labels.empty())
    throw Error(ErrorCode::ShapeMismatch, "query and gallery feature dimensions differ");
  const Matrix q = unit_rows(query.features);
  const Matrix g = unit_rows(gallery.features);
  const std::size_t n_gallery = g.rows();
  std::vector<std::size_t> ranks(q.rows(), n_gallery);
  std::vector<double> sims(n_gallery);
  for (std::size_t i = 0; i < q.rows(); ++i) {
    std::size_t best = n_gallery;
    for (std::size_t j = 0; j < n_gallery; ++j) {
      sims[j] = math::dot(q.row(i), g.row(j));
      if (gallery.labels[j] == query.labels[i] && (best == n_gallery || sims[j] > sims[best])) best = j;
    }
    if (best == n_gallery) continue;
    std::size_t ahead = 0;
    for (std::size_t j = 0; j < n_gallery; ++j)
      if (sims[j] > sims[best] || (sims[j] == sims[best] && j < best)) ++ahead;
    ranks[i] = ahead;
  }
  return ranks;
}

}  // namespace

std::map<std::size_t, double> retrieval_r_at_ks(const LabeledFeatures& query, const LabeledFeatures& gallery,
                                                std::span<const std::size_t> ks) {
  for (std::size_t k : ks)
    if (k == 0) throw Error(ErrorCode::OutOfRange, "k must be at least 1");
  const auto ranks = first_hit_ranks(query, gallery);
  std::map<std::size_t, double> out;
  for (std::size_t k : ks) {
    std::size_t hits = 0;
    for (std::size_t r : ranks)
      if (r < k && r < gallery.labels.size()) ++hits;
    out[k] = ranks.empty() ? 0.0 : static_cast<double>(hits) / static_cast<double>(ranks.size());
  }
  return out;
}

double retrieval_r_at_k(const LabeledFeatures& query, const LabeledFeatures& gallery, std::size_t k) {
  const std::size_t ks[] = {k};
  return retrieval_r_at_ks(query, gallery, ks).at(k);
}

std::map<std::uint32_t, double> per_class_r_at_1(const LabeledFeatures& query, const LabeledFeatures& gallery) {
  const auto ranks = first_hit_ranks(query, gallery);
  std::map<std::uint32_t, std::pair<std::size_t, std::size_t>> tally;
  for (std::size_t i = 0; i < ranks.size(); ++i) {
    auto& [hits, total] = tally[query.labels[i]];
    ++total;
    if (ranks[i] == 0 && !gallery.labels.empty()) ++hits;
  }
  std::map<std::uint32_t, double> out;
  for (const auto& [label, t] : tally) out[label] = static_cast<double>(t.first) / static_cast<double>(t.second);
  return out;
}

double faulty_detection_auc(std::span<const double> scores, const std::vector<bool>& faulty) {
  if (scores.size() != faulty.size()) throw Error(ErrorCode::ShapeMismatch, "scores and flags differ in length");
  const std::size_t n = scores.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });

  // Mann-Whitney U with mid-ranks for ties.
  double clean_rank_sum = 0.0;
  std::size_t n_clean = 0;
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i;
    while (j < n && scores[order[j]] == scores[order[i]]) ++j;
    const double mid_rank = 0.5 * static_cast<double>(i + j + 1);  // mean of ranks i+1..j
    for (std::size_t t = i; t < j; ++t)
      if (!faulty[order[t]]) {
        clean_rank_sum += mid_rank;
        ++n_clean;
      }
    i = j;
  }
  const std::size_t n_faulty = n - n_clean;
  if (n_clean == 0 || n_faulty == 0)
    throw Error(ErrorCode::DegenerateLabels, "AUC needs both clean and faulty instances");
  const double u = clean_rank_sum - static_cast<double>(n_clean) * static_cast<double>(n_clean + 1) / 2.0;
  return u / (static_cast<double>(n_clean) * static_cast<double>(n_faulty));
}

std::vector<HistogramBin> score_histogram(std::span<const double> scores, std::size_t num_bins, double lo, double hi,
                                          const std::vector<bool>& faulty) {
  if (num_bins < 1 || !(hi > lo) || !std::isfinite(lo) || !std::isfinite(hi))
    throw Error(ErrorCode::InvalidRange, "histogram needs at least one bin and lo < hi");
  if (!faulty.empty() && faulty.size() != scores.size())
    throw Error(ErrorCode::ShapeMismatch, "flags and scores differ in length");
  std::vector<HistogramBin> bins(num_bins);
  const double width = (hi - lo) / static_cast<double>(num_bins);
  for (std::size_t b = 0; b < num_bins; ++b) {
    bins[b].left = lo + width * static_cast<double>(b);
    bins[b].right = b + 1 == num_bins ? hi : lo + width * static_cast<double>(b + 1);
  }
  for (std::size_t i = 0; i < scores.size(); ++i) {
    const double pos = std::floor((scores[i] - lo) / width);
    const auto b = static_cast<std::size_t>(std::clamp(pos, 0.0, static_cast<double>(num_bins - 1)));
    ++bins[b].count;
    if (!faulty.empty() && faulty[i])
      ++bins[b].count_faulty;
    else
      ++bins[b].count_clean;
  }
  return bins;
}

double few_shot_probe(const LabeledFeatures& train, std::size_t n_per_class, const LabeledFeatures& test,
                      std::size_t trials, std::uint64_t seed) {
  check_features(train, "train");
  check_features(test, "test");
  if (n_per_class < 1 || trials < 1 || test.labels.empty())
    throw Error(ErrorCode::InsufficientSamples, "few-shot probe needs n >= 1, trials >= 1 and a test set");
  std::map<std::uint32_t, std::vector<std::size_t>> by_class;
  for (std::size_t i = 0; i < train.labels.size(); ++i) by_class[train.labels[i]].push_back(i);
  for (const auto& [label, rows] : by_class)
    if (rows.size() < n_per_class)
      throw Error(ErrorCode::InsufficientSamples,
                  "class " + std::to_string(label) + " has only " + std::to_string(rows.size()) + " training rows");
  for (std::uint32_t label : test.labels)
    if (!by_class.contains(label))
      throw Error(ErrorCode::InsufficientSamples, "test class " + std::to_string(label) + " absent from training rows");

  const Matrix train_unit = unit_rows(train.features);
  const Matrix test_unit = unit_rows(test.features);
  const std::size_t dim = train.features.cols();
  Rng rng(seed);
  double total_accuracy = 0.0;
  for (std::size_t t = 0; t < trials; ++t) {
    std::vector<std::uint32_t> class_ids;
    Matrix means(by_class.size(), dim);
    std::size_t c = 0;
    for (auto& [label, rows] : by_class) {
      class_ids.push_back(label);
      std::vector<std::size_t> pool = rows;
      for (std::size_t k = 0; k < n_per_class; ++k) {
        const std::size_t j = k + static_cast<std::size_t>(rng.index(pool.size() - k));
        std::swap(pool[k], pool[j]);
        const auto src = train_unit.row(pool[k]);
        auto dst = means.row(c);
        for (std::size_t d = 0; d < dim; ++d) dst[d] += src[d];
      }
      ++c;
    }
    const Matrix centroid = unit_rows(means);
    std::size_t correct = 0;
    for (std::size_t i = 0; i < test.labels.size(); ++i) {
      std::size_t best = 0;
      double best_sim = -std::numeric_limits<double>::infinity();
      for (std::size_t k = 0; k < centroid.rows(); ++k) {
        const double s = math::dot(test_unit.row(i), centroid.row(k));
        if (s > best_sim) {
          best_sim = s;
          best = k;
        }
      }
      if (class_ids[best] == test.labels[i]) ++correct;
    }
    total_accuracy += static_cast<double>(correct) / static_cast<double>(test.labels.size());
  }
  return total_accuracy / static_cast<double>(trials);
}

std::string format_number(double v) {
  if (!std::isfinite(v)) return "nan";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

std::string histogram_csv(const std::vector<HistogramBin>& bins) {
  std::string out = "bin_left,bin_right,count,count_faulty,count_clean\n";
  for (const auto& b : bins)
    out += format_number(b.left) + ',' + format_number(b.right) + ',' + std::to_string(b.count) + ',' +
           std::to_string(b.count_faulty) + ',' + std::to_string(b.count_clean) + '\n';
  return out;
}

std::string EvalReport::to_json() const {
  nlohmann::ordered_json j;
  auto number = [](double v) -> nlohmann::ordered_json {
    if (std::isfinite(v)) return v;
    return nullptr;
  };
  for (const auto& [k, v] : r_at_k) j["r_at_" + std::to_string(k)] = v;
  j["faulty_auc"] = number(faulty_auc);
  j["mean_weight_clean"] = number(mean_weight_clean);
  j["mean_weight_faulty"] = number(mean_weight_faulty);
  nlohmann::ordered_json per_class = nlohmann::ordered_json::object();
  for (const auto& [c, v] : per_class_r_at_1) per_class[std::to_string(c)] = v;
  j["per_class_r_at_1"] = per_class;
  nlohmann::ordered_json shots = nlohmann::ordered_json::object();
  for (const auto& [n, v] : few_shot) shots[std::to_string(n)] = v;
  j["few_shot_accuracy"] = shots;
  nlohmann::ordered_json hist = nlohmann::ordered_json::array();
  for (const auto& b : histogram)
    hist.push_back({{"bin_left", b.left}, {"bin_right", b.right}, {"count", b.count}, {"count_faulty", b.count_faulty},
                    {"count_clean", b.count_clean}});
  j["histogram"] = hist;
  return j.dump(2);
}

}  // namespace rxid
