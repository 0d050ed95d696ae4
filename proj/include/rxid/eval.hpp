#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "rxid/core_math.hpp"

namespace rxid {

/// Features with one class label per row.
struct LabeledFeatures {
  Matrix features;
  std::vector<std::uint32_t> labels;
};

/// Fraction of queries whose k most cosine-similar gallery items contain a
/// same-class item. Ties go to the lower gallery index. Throws ShapeMismatch
/// or OutOfRange for k == 0.
double retrieval_r_at_k(const LabeledFeatures& query, const LabeledFeatures& gallery, std::size_t k);

/// R@k for several k in one pass over the similarity matrix.
std::map<std::size_t, double> retrieval_r_at_ks(const LabeledFeatures& query, const LabeledFeatures& gallery,
                                                std::span<const std::size_t> ks);

/// Per-class R@1 over the queries.
std::map<std::uint32_t, double> per_class_r_at_1(const LabeledFeatures& query, const LabeledFeatures& gallery);

/// P(score of a random clean instance > score of a random faulty one), ties
/// counting one half. Throws DegenerateLabels unless both groups are present.
double faulty_detection_auc(std::span<const double> scores, const std::vector<bool>& faulty);

struct HistogramBin {
  double left = 0.0;
  double right = 0.0;
  std::size_t count = 0;
  std::size_t count_faulty = 0;
  std::size_t count_clean = 0;
};

/// Equal-width bins over [lo, hi); values outside are clamped into the end
/// bins so the counts always total N. Throws InvalidRange.
std::vector<HistogramBin> score_histogram(std::span<const double> scores, std::size_t num_bins, double lo, double hi,
                                          const std::vector<bool>& faulty = {});

/// Mean accuracy over trials of a nearest-class-mean (cosine) classifier
/// fit on n_per_class sampled training rows per class. Throws InsufficientSamples.
double few_shot_probe(const LabeledFeatures& train, std::size_t n_per_class, const LabeledFeatures& test,
                      std::size_t trials, std::uint64_t seed);

/// printf("%.6g"), with "nan" for non-finite values.
std::string format_number(double v);

/// bin_left,bin_right,count,count_faulty,count_clean with a header row.
std::string histogram_csv(const std::vector<HistogramBin>& bins);

struct EvalReport {
  std::map<std::size_t, double> r_at_k;
  double faulty_auc = 0.0;  // NaN when the data has no faulty (or no clean) instances
  std::map<std::uint32_t, double> per_class_r_at_1;
  std::map<std::size_t, double> few_shot;
  std::vector<HistogramBin> histogram;
  double mean_weight_clean = 0.0;
  double mean_weight_faulty = 0.0;

  std::string to_json() const;
};

}  // namespace rxid
