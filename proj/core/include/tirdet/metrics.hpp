#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "tirdet/image.hpp"

namespace tirdet::segnet {
class Network;
}

namespace tirdet::metrics {

/// Pixel counts with the target class (label 1) as positive.
struct ConfusionCounts {
  std::uint64_t tp = 0;
  std::uint64_t fp = 0;
  std::uint64_t fn = 0;
  std::uint64_t tn = 0;

  std::uint64_t total() const noexcept { return tp + fp + fn + tn; }
  ConfusionCounts& operator+=(const ConfusionCounts& o) noexcept {
    tp += o.tp;
    fp += o.fp;
    fn += o.fn;
    tn += o.tn;
    return *this;
  }
  friend bool operator==(const ConfusionCounts&, const ConfusionCounts&) = default;
};

ConfusionCounts confusion(const Mask& pred, const Mask& truth);

/// An empty optional is the undefined marker for a 0/0 ratio.
using Metric = std::optional<double>;

inline constexpr int kBackgroundClass = 0;
inline constexpr int kTargetClass = 1;

struct MetricsReport {
  Metric miou;
  Metric recall;
  Metric precision;
  Metric f1;
  std::array<Metric, 2> per_class_iou;  // [background, target]
  ConfusionCounts counts;
  std::size_t n_images = 0;

  /// Names of undefined fields in key order: miou, recall, precision, f1,
  /// per_class_iou[0], per_class_iou[1].
  std::vector<std::string> undefined_fields() const;
};

/// IoU_t = tp/(tp+fp+fn), IoU_b = tn/(tn+fp+fn), mIoU = mean of the defined
/// class IoUs, recall = tp/(tp+fn), precision = tp/(tp+fp),
/// f1 = 2pr/(p+r). Throws InvalidArgument when counts.total() == 0.
MetricsReport compute_metrics(const ConfusionCounts& counts, std::size_t n_images = 1);

std::string to_json(const MetricsReport& report);

struct Evaluation {
  MetricsReport overall;  // counts pooled over every pixel of every image
  std::vector<MetricsReport> per_image;
};

Evaluation evaluate_predictions(std::span<const Mask> predictions, std::span<const Mask> truths);
Evaluation evaluate(const segnet::Network& net, std::span<const LabeledImage> test_set);

std::string to_json(const Evaluation& evaluation);

struct Fold {
  std::vector<std::size_t> train;
  std::vector<std::size_t> test;
};

/// Seeded shuffle, then k contiguous test folds; the first n % k folds get
/// one extra item. Train indices are the complement, ascending.
std::vector<Fold> kfold_split(std::size_t n_items, int k, std::uint64_t seed);

/// Arithmetic mean across folds of each defined metric; undefined values are
/// excluded and counted per field.
struct FoldAverage {
  Metric miou;
  Metric recall;
  Metric precision;
  Metric f1;
  std::array<Metric, 2> per_class_iou;
  std::size_t folds = 0;
  std::map<std::string, std::size_t> undefined_counts;
};

FoldAverage average_folds(std::span<const MetricsReport> reports);
std::string to_json(const FoldAverage& average);

}  // namespace tirdet::metrics
