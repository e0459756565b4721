#include "tirdet/train.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>
#include <random>

#include "json.hpp"
#include "tirdet/error.hpp"
#include "tirdet/nn/optim.hpp"

namespace tirdet::segnet {

using nn::Shape;
using nn::Tensor;

std::string to_string(OptimizerKind kind) { return kind == OptimizerKind::Adam ? "adam" : "sgd"; }

OptimizerKind optimizer_from_string(std::string_view name) {
  if (name == "adam") return OptimizerKind::Adam;
  if (name == "sgd") return OptimizerKind::Sgd;
  throw InvalidArgument("optimizer must be \"adam\" or \"sgd\", got \"" + std::string(name) + "\"");
}

void TrainConfig::validate() const {
  if (epochs < 1) throw InvalidArgument("epochs must be >= 1");
  if (batch_size < 1) throw InvalidArgument("batch_size must be >= 1");
  if (!(learning_rate > 0.0)) throw InvalidArgument("learning_rate must be positive");
  if (pos_weight && !(*pos_weight > 0.0)) throw InvalidArgument("pos_weight must be positive");
}

std::string to_json(const TrainReport& report) {
  nlohmann::json j;
  j["pos_weight"] = report.pos_weight;
  j["steps"] = report.steps;
  j["seconds"] = report.seconds;
  auto& epochs = j["epochs"] = nlohmann::json::array();
  for (const auto& e : report.epochs) {
    epochs.push_back({{"epoch", e.epoch}, {"loss", e.mean_loss}, {"seconds", e.seconds}});
  }
  return j.dump(2);
}

double auto_pos_weight(std::span<const LabeledImage> items) {
  std::size_t target = 0;
  std::size_t total = 0;
  for (const auto& item : items) {
    target += item.mask.count();
    total += item.mask.size();
  }
  if (target == 0) return 1.0;
  const double ratio = static_cast<double>(total - target) / static_cast<double>(target);
  return std::clamp(ratio, 1.0, 100.0);
}

namespace {

struct PreparedSet {
  std::vector<Tensor> inputs;  // 1 x C x H x W each
  std::vector<Mask> masks;
};

PreparedSet prepare(const Network& net, std::span<const LabeledImage> items) {
  if (items.empty()) throw InvalidArgument("training set is empty");
  const int w = items.front().image.width();
  const int h = items.front().image.height();
  check_input_size(net.config(), w, h);
  PreparedSet set;
  for (const auto& item : items) {
    item.validate();
    if (item.image.width() != w || item.image.height() != h) {
      throw ShapeError("all training images must share one size");
    }
    set.inputs.push_back(net.head_input(item.image));
    set.masks.push_back(item.mask);
  }
  return set;
}

Tensor stack_batch(const std::vector<Tensor>& inputs, std::span<const std::size_t> idx) {
  Shape s = inputs[idx.front()].shape();
  s.n = static_cast<int>(idx.size());
  Tensor batch(s);
  const std::size_t per = inputs[idx.front()].size();
  for (std::size_t k = 0; k < idx.size(); ++k) {
    std::copy_n(inputs[idx[k]].data(), per, batch.data() + k * per);
  }
  return batch;
}

Tensor batch_labels(const std::vector<Mask>& masks, std::span<const std::size_t> idx) {
  std::vector<Mask> picked;
  picked.reserve(idx.size());
  for (std::size_t i : idx) picked.push_back(masks[i]);
  return nn::labels_tensor(picked);
}

}  // namespace

TrainReport train(Network& net, std::span<const LabeledImage> train_set, const TrainConfig& cfg,
                  const EpochCallback& on_epoch) {
  cfg.validate();
  const PreparedSet data = prepare(net, train_set);
  TrainReport report;
  report.pos_weight = cfg.pos_weight.value_or(auto_pos_weight(train_set));

  std::unique_ptr<nn::Optimizer> opt;
  if (cfg.optimizer == OptimizerKind::Adam) {
    opt = std::make_unique<nn::Adam>(nn::AdamHyper{cfg.learning_rate});
  } else {
    opt = std::make_unique<nn::Sgd>(cfg.learning_rate);
  }

  std::mt19937_64 rng(cfg.seed);
  std::vector<std::size_t> order(data.inputs.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  const auto start = std::chrono::steady_clock::now();

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    const auto epoch_start = std::chrono::steady_clock::now();
    std::shuffle(order.begin(), order.end(), rng);
    double loss_sum = 0.0;
    std::size_t batches = 0;
    for (std::size_t b = 0; b < order.size(); b += static_cast<std::size_t>(cfg.batch_size)) {
      const std::size_t end = std::min(order.size(), b + static_cast<std::size_t>(cfg.batch_size));
      const std::span<const std::size_t> idx(order.data() + b, end - b);

      for (auto& p : net.parameters()) p.zero_grad();
      nn::Graph g;
      const nn::Node in = g.constant(stack_batch(data.inputs, idx));
      const nn::Node logits = net.record(g, in, true);
      const nn::Node loss = g.softmax_bce(logits, batch_labels(data.masks, idx), report.pos_weight);
      const double value = g.value(loss).values()[0];
      if (!std::isfinite(value)) {
        throw NumericError("training loss became non-finite at epoch " + std::to_string(epoch));
      }
      g.backward(loss);
      opt->step(net.parameters());
      loss_sum += value;
      ++batches;
      ++report.steps;
    }
    EpochStats stats;
    stats.epoch = epoch;
    stats.mean_loss = loss_sum / static_cast<double>(batches);
    stats.seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - epoch_start).count();
    report.epochs.push_back(stats);
    if (on_epoch) on_epoch(stats);
  }
  for (const auto& p : net.parameters()) nn::require_finite(p.value, p.name.c_str());
  report.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return report;
}

double evaluate_loss(const Network& net, std::span<const LabeledImage> items, double pos_weight) {
  const PreparedSet data = prepare(net, items);
  double sum = 0.0;
  for (std::size_t i = 0; i < data.inputs.size(); ++i) {
    const Mask masks[] = {data.masks[i]};
    sum += nn::softmax_bce(net.logits(data.inputs[i]), nn::labels_tensor(masks), pos_weight,
                           nullptr);
  }
  return sum / static_cast<double>(data.inputs.size());
}

}  // namespace tirdet::segnet
