#include "tirdet/metrics.hpp"

#include <algorithm>
#include <numeric>
#include <random>

#include "json.hpp"
#include "tirdet/error.hpp"
#include "tirdet/segnet.hpp"

namespace tirdet::metrics {

using nlohmann::json;

ConfusionCounts confusion(const Mask& pred, const Mask& truth) {
  if (!same_size(pred, truth)) throw ShapeError("confusion: prediction and truth differ in size");
  ConfusionCounts c;
  const auto p = pred.labels();
  const auto t = truth.labels();
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (p[i] != 0) {
      (t[i] != 0 ? c.tp : c.fp) += 1;
    } else {
      (t[i] != 0 ? c.fn : c.tn) += 1;
    }
  }
  return c;
}

namespace {

Metric ratio(std::uint64_t num, std::uint64_t den) {
  if (den == 0) return std::nullopt;
  return static_cast<double>(num) / static_cast<double>(den);
}

json metric_json(const Metric& m) { return m ? json(*m) : json(nullptr); }

}  // namespace

std::vector<std::string> MetricsReport::undefined_fields() const {
  std::vector<std::string> out;
  if (!miou) out.emplace_back("miou");
  if (!recall) out.emplace_back("recall");
  if (!precision) out.emplace_back("precision");
  if (!f1) out.emplace_back("f1");
  if (!per_class_iou[0]) out.emplace_back("per_class_iou[0]");
  if (!per_class_iou[1]) out.emplace_back("per_class_iou[1]");
  return out;
}

MetricsReport compute_metrics(const ConfusionCounts& c, std::size_t n_images) {
  if (c.total() == 0) throw InvalidArgument("compute_metrics: no pixels counted");
  MetricsReport r;
  r.counts = c;
  r.n_images = n_images;
  r.per_class_iou[kTargetClass] = ratio(c.tp, c.tp + c.fp + c.fn);
  r.per_class_iou[kBackgroundClass] = ratio(c.tn, c.tn + c.fp + c.fn);
  double sum = 0.0;
  int defined = 0;
  for (const auto& iou : r.per_class_iou) {
    if (iou) {
      sum += *iou;
      ++defined;
    }
  }
  if (defined > 0) r.miou = sum / defined;
  r.recall = ratio(c.tp, c.tp + c.fn);
  r.precision = ratio(c.tp, c.tp + c.fp);
  if (r.recall && r.precision && *r.recall + *r.precision > 0.0) {
    r.f1 = 2.0 * *r.precision * *r.recall / (*r.precision + *r.recall);
  }
  return r;
}

namespace {

json report_json(const MetricsReport& r) {
  json j;
  j["miou"] = metric_json(r.miou);
  j["recall"] = metric_json(r.recall);
  j["precision"] = metric_json(r.precision);
  j["f1"] = metric_json(r.f1);
  j["per_class_iou"] = {metric_json(r.per_class_iou[0]), metric_json(r.per_class_iou[1])};
  j["counts"] = {{"tp", r.counts.tp}, {"fp", r.counts.fp}, {"fn", r.counts.fn}, {"tn", r.counts.tn}};
  j["n_images"] = r.n_images;
  j["undefined_fields"] = r.undefined_fields();
  return j;
}

}  // namespace

std::string to_json(const MetricsReport& report) { return report_json(report).dump(2); }

Evaluation evaluate_predictions(std::span<const Mask> predictions, std::span<const Mask> truths) {
  if (predictions.empty()) throw InvalidArgument("evaluate: empty set");
  if (predictions.size() != truths.size()) {
    throw ShapeError("evaluate: prediction and truth counts differ");
  }
  Evaluation e;
  ConfusionCounts pooled;
  for (std::size_t i = 0; i < predictions.size(); ++i) {
    const ConfusionCounts c = confusion(predictions[i], truths[i]);
    pooled += c;
    e.per_image.push_back(compute_metrics(c, 1));
  }
  e.overall = compute_metrics(pooled, predictions.size());
  return e;
}

Evaluation evaluate(const segnet::Network& net, std::span<const LabeledImage> test_set) {
  if (test_set.empty()) throw InvalidArgument("evaluate: empty set");
  std::vector<Mask> preds;
  std::vector<Mask> truths;
  for (const auto& item : test_set) {
    item.validate();
    preds.push_back(segnet::binarize(segnet::forward(net, item.image)));
    truths.push_back(item.mask);
  }
  return evaluate_predictions(preds, truths);
}

std::string to_json(const Evaluation& e) {
  json j = report_json(e.overall);
  auto& per = j["per_image"] = json::array();
  for (const auto& r : e.per_image) per.push_back(report_json(r));
  return j.dump(2);
}

std::vector<Fold> kfold_split(std::size_t n_items, int k, std::uint64_t seed) {
  if (k < 2) throw InvalidArgument("kfold_split: k must be >= 2");
  if (n_items < static_cast<std::size_t>(k)) {
    throw InvalidArgument("kfold_split: k=" + std::to_string(k) + " exceeds item count " +
                          std::to_string(n_items));
  }
  std::vector<std::size_t> order(n_items);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::mt19937_64 rng(seed);
  std::shuffle(order.begin(), order.end(), rng);

  const std::size_t base = n_items / k;
  const std::size_t extra = n_items % k;
  std::vector<Fold> folds(k);
  std::size_t pos = 0;
  for (int f = 0; f < k; ++f) {
    const std::size_t len = base + (static_cast<std::size_t>(f) < extra ? 1 : 0);
    std::vector<bool> in_test(n_items, false);
    for (std::size_t i = pos; i < pos + len; ++i) {
      folds[f].test.push_back(order[i]);
      in_test[order[i]] = true;
    }
    for (std::size_t i = 0; i < n_items; ++i) {
      if (!in_test[i]) folds[f].train.push_back(i);
    }
    pos += len;
  }
  return folds;
}

FoldAverage average_folds(std::span<const MetricsReport> reports) {
  if (reports.empty()) throw InvalidArgument("average_folds: no reports");
  FoldAverage avg;
  avg.folds = reports.size();
  auto mean_of = [&](const char* name, auto&& get) -> Metric {
    double sum = 0.0;
    std::size_t n = 0;
    for (const auto& r : reports) {
      const Metric m = get(r);
      if (m) {
        sum += *m;
        ++n;
      } else {
        ++avg.undefined_counts[name];
      }
    }
    if (n == 0) return std::nullopt;
    return sum / static_cast<double>(n);
  };
  avg.miou = mean_of("miou", [](const MetricsReport& r) { return r.miou; });
  avg.recall = mean_of("recall", [](const MetricsReport& r) { return r.recall; });
  avg.precision = mean_of("precision", [](const MetricsReport& r) { return r.precision; });
  avg.f1 = mean_of("f1", [](const MetricsReport& r) { return r.f1; });
  avg.per_class_iou[0] =
      mean_of("per_class_iou[0]", [](const MetricsReport& r) { return r.per_class_iou[0]; });
  avg.per_class_iou[1] =
      mean_of("per_class_iou[1]", [](const MetricsReport& r) { return r.per_class_iou[1]; });
  return avg;
}

std::string to_json(const FoldAverage& a) {
  json j;
  j["miou"] = metric_json(a.miou);
  j["recall"] = metric_json(a.recall);
  j["precision"] = metric_json(a.precision);
  j["f1"] = metric_json(a.f1);
  j["per_class_iou"] = {metric_json(a.per_class_iou[0]), metric_json(a.per_class_iou[1])};
  j["folds"] = a.folds;
  j["undefined_counts"] = a.undefined_counts;
  return j.dump(2);
}

}  // namespace tirdet::metrics
