#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "tirdet/segnet.hpp"

// Finite-difference verification of every hand-derived backward pass.

namespace tirdet::verify {

inline constexpr double kLayerTolerance = 1e-4;
inline constexpr double kNetworkTolerance = 1e-3;

struct CheckOutcome {
  std::string name;
  std::string shape;
  double max_rel_error = 0.0;
  double tolerance = 0.0;
  std::size_t checked = 0;
  /// Coordinates rejected because a probe crossed a ReLU kink.
  std::size_t skipped = 0;

  bool passed() const noexcept { return max_rel_error < tolerance; }
};

/// Every layer and every differentiable input of it, on `shapes_per_layer`
/// random shapes each.
std::vector<CheckOutcome> layer_suite(std::uint64_t seed, int shapes_per_layer = 5);

/// Gradient of the softmax+BCE loss of a freshly built network with respect
/// to `n_params` randomly sampled parameter coordinates, on a size x size
/// input with random labels. Coordinates whose probe flips any activation
/// sign are skipped and counted; the check fails (infinite error) if fewer
/// than `n_params` coordinates remain.
CheckOutcome network_check(const segnet::NetConfig& config, int size, std::size_t n_params,
                           std::uint64_t seed);

}  // namespace tirdet::verify
