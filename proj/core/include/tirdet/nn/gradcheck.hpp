#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>

#include "tirdet/nn/tensor.hpp"

namespace tirdet::nn {

struct GradCheckOptions {
  double step = 1e-3;
  /// 0 checks every coordinate; otherwise a seeded random subset of this size.
  std::size_t max_coords = 0;
  std::uint64_t seed = 0;
};

struct GradCheckResult {
  double max_rel_error = 0.0;
  std::size_t worst_index = 0;
  std::size_t checked = 0;
};

/// |analytic - numeric| / max(1e-8, |analytic| + |numeric|)
double relative_error(double analytic, double numeric) noexcept;

/// Scalar function of a tensor. When `grad` is non-null it must be filled
/// with the analytic gradient (same shape as x).
using DifferentiableFn = std::function<double(const Tensor& x, Tensor* grad)>;

/// Central differences at `step` against the analytic gradient of fn at x.
GradCheckResult grad_check(const DifferentiableFn& fn, const Tensor& x,
                           const GradCheckOptions& options = {});

/// Lower-level form: perturbs each coordinate in place through its pointer,
/// evaluating `loss` after each perturbation, and compares with `analytic`.
GradCheckResult grad_check_coordinates(const std::function<double()>& loss,
                                       std::span<double* const> coords,
                                       std::span<const double> analytic, double step);

}  // namespace tirdet::nn
