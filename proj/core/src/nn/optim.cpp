#include "tirdet/nn/optim.hpp"

#include <cmath>

#include "tirdet/error.hpp"

namespace tirdet::nn {

namespace {

void check_lengths(std::size_t params, std::size_t grads) {
  if (params != grads) {
    throw ShapeError("optimizer: " + std::to_string(params) + " parameters but " +
                     std::to_string(grads) + " gradients");
  }
}

}  // namespace

void sgd_step(std::span<double> params, std::span<const double> grads, double lr) {
  check_lengths(params.size(), grads.size());
  for (std::size_t i = 0; i < params.size(); ++i) params[i] -= lr * grads[i];
}

void adam_step(std::span<double> params, std::span<const double> grads, AdamState& state,
               const AdamHyper& h) {
  check_lengths(params.size(), grads.size());
  if (state.m.empty() && state.t == 0) {
    state.m.assign(params.size(), 0.0);
    state.v.assign(params.size(), 0.0);
  }
  check_lengths(params.size(), state.m.size());
  ++state.t;
  const double c1 = 1.0 - std::pow(h.beta1, static_cast<double>(state.t));
  const double c2 = 1.0 - std::pow(h.beta2, static_cast<double>(state.t));
  for (std::size_t i = 0; i < params.size(); ++i) {
    const double g = grads[i];
    state.m[i] = h.beta1 * state.m[i] + (1.0 - h.beta1) * g;
    state.v[i] = h.beta2 * state.v[i] + (1.0 - h.beta2) * g * g;
    const double m_hat = state.m[i] / c1;
    const double v_hat = state.v[i] / c2;
    params[i] -= h.lr * m_hat / (std::sqrt(v_hat) + h.eps);
  }
}

void Sgd::step(std::span<Parameter> params) {
  for (auto& p : params) {
    if (!p.trainable || p.grad.empty()) continue;
    sgd_step(p.value.values(), p.grad.values(), lr_);
  }
}

void Adam::step(std::span<Parameter> params) {
  if (states_.size() != params.size()) states_.assign(params.size(), AdamState{});
  for (std::size_t k = 0; k < params.size(); ++k) {
    auto& p = params[k];
    if (!p.trainable || p.grad.empty()) continue;
    adam_step(p.value.values(), p.grad.values(), states_[k], hyper_);
  }
}

}  // namespace tirdet::nn
