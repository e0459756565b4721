#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "tirdet/nn/graph.hpp"

namespace tirdet::nn {

/// params -= lr * grads
void sgd_step(std::span<double> params, std::span<const double> grads, double lr);

struct AdamHyper {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

struct AdamState {
  std::vector<double> m;
  std::vector<double> v;
  std::int64_t t = 0;
};

/// Adam with bias correction. State is sized lazily on the first call.
void adam_step(std::span<double> params, std::span<const double> grads, AdamState& state,
               const AdamHyper& hyper);

class Optimizer {
 public:
  virtual ~Optimizer() = default;
  /// Updates every trainable parameter from its .grad.
  virtual void step(std::span<Parameter> params) = 0;
};

class Sgd final : public Optimizer {
 public:
  explicit Sgd(double lr) : lr_(lr) {}
  void step(std::span<Parameter> params) override;

 private:
  double lr_;
};

class Adam final : public Optimizer {
 public:
  explicit Adam(AdamHyper hyper) : hyper_(hyper) {}
  void step(std::span<Parameter> params) override;

 private:
  AdamHyper hyper_;
  std::vector<AdamState> states_;
};

}  // namespace tirdet::nn
