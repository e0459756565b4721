#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "tirdet/image.hpp"
#include "tirdet/segnet.hpp"

namespace tirdet::segnet {

enum class OptimizerKind { Adam, Sgd };

std::string to_string(OptimizerKind kind);
OptimizerKind optimizer_from_string(std::string_view name);

struct TrainConfig {
  int epochs = 30;
  int batch_size = 4;
  double learning_rate = 2e-3;
  OptimizerKind optimizer = OptimizerKind::Adam;
  std::optional<double> pos_weight;  // nullopt = auto
  std::uint64_t seed = 1;

  void validate() const;
};

struct EpochStats {
  int epoch = 0;
  double mean_loss = 0.0;
  double seconds = 0.0;
};

struct TrainReport {
  std::vector<EpochStats> epochs;
  double pos_weight = 1.0;
  std::size_t steps = 0;
  double seconds = 0.0;
};

std::string to_json(const TrainReport& report);

/// background/target pixel ratio over the set, clamped to [1, 100]; 1 when
/// the set has no target pixels.
double auto_pos_weight(std::span<const LabeledImage> items);

using EpochCallback = std::function<void(const EpochStats&)>;

/// Mini-batch training on the pixel-mean weighted BCE. Batches are drawn
/// from a seeded shuffle; same seed and data give a bit-identical trace.
TrainReport train(Network& net, std::span<const LabeledImage> train_set, const TrainConfig& cfg,
                  const EpochCallback& on_epoch = {});

/// Mean loss of the current parameters over a set (no update).
double evaluate_loss(const Network& net, std::span<const LabeledImage> items, double pos_weight);

}  // namespace tirdet::segnet
