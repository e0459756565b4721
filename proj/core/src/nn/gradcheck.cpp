#include "tirdet/nn/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <vector>

#include "tirdet/error.hpp"

namespace tirdet::nn {

double relative_error(double analytic, double numeric) noexcept {
  return std::abs(analytic - numeric) / std::max(1e-8, std::abs(analytic) + std::abs(numeric));
}

GradCheckResult grad_check_coordinates(const std::function<double()>& loss,
                                       std::span<double* const> coords,
                                       std::span<const double> analytic, double step) {
  if (coords.size() != analytic.size()) {
    throw ShapeError("grad_check: coordinate and gradient counts differ");
  }
  GradCheckResult result;
  for (std::size_t k = 0; k < coords.size(); ++k) {
    double& v = *coords[k];
    const double original = v;
    v = original + step;
    const double up = loss();
    v = original - step;
    const double down = loss();
    v = original;
    const double numeric = (up - down) / (2.0 * step);
    const double err = relative_error(analytic[k], numeric);
    if (!std::isfinite(err)) throw NumericError("grad_check: non-finite difference");
    if (k == 0 || err > result.max_rel_error) {
      result.max_rel_error = err;
      result.worst_index = k;
    }
    ++result.checked;
  }
  return result;
}

GradCheckResult grad_check(const DifferentiableFn& fn, const Tensor& x,
                           const GradCheckOptions& options) {
  Tensor grad;
  fn(x, &grad);
  require_same_shape(grad.shape(), x.shape(), "grad_check analytic gradient");

  std::vector<std::size_t> indices(x.size());
  std::iota(indices.begin(), indices.end(), std::size_t{0});
  if (options.max_coords != 0 && options.max_coords < indices.size()) {
    std::mt19937_64 rng(options.seed);
    std::shuffle(indices.begin(), indices.end(), rng);
    indices.resize(options.max_coords);
    std::sort(indices.begin(), indices.end());
  }

  Tensor probe = x;
  std::vector<double*> coords;
  std::vector<double> analytic;
  for (std::size_t i : indices) {
    coords.push_back(probe.data() + i);
    analytic.push_back(grad.values()[i]);
  }
  GradCheckResult r =
      grad_check_coordinates([&] { return fn(probe, nullptr); }, coords, analytic, options.step);
  r.worst_index = indices.empty() ? 0 : indices[r.worst_index];
  return r;
}

}  // namespace tirdet::nn
