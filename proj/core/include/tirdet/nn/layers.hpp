#pragma once

#include <span>
#include <vector>

#include "tirdet/image.hpp"
#include "tirdet/nn/tensor.hpp"

// Forward and hand-derived backward passes for every layer the segmentation
// network uses. Backward functions take the upstream gradient dL/dy and
// return dL/d(inputs).

namespace tirdet::nn {

enum class PadMode { Zero, Replicate };

struct ConvGeometry {
  int stride = 1;
  int dilation = 1;
  int padding = 0;
  PadMode pad_mode = PadMode::Zero;
};

/// Weights are (out_ch, in_ch, kh, kw); bias is (1, out_ch, 1, 1) or empty.
struct ConvParams {
  Tensor weight;
  Tensor bias;
  ConvGeometry geometry;
};

int conv_output_extent(int in, int kernel, const ConvGeometry& g);
Shape conv2d_output_shape(const Shape& input, const Shape& weight, const ConvGeometry& g);

/// Cross-correlation (no kernel flip).
Tensor conv2d(const Tensor& x, const Tensor& weight, const Tensor* bias, const ConvGeometry& g);
inline Tensor conv2d(const Tensor& x, const ConvParams& p) {
  return conv2d(x, p.weight, p.bias.empty() ? nullptr : &p.bias, p.geometry);
}

struct ConvGrads {
  Tensor input;   // empty when not requested
  Tensor weight;
  Tensor bias;    // (1, out_ch, 1, 1)
};

ConvGrads conv2d_backward(const Tensor& x, const Tensor& weight, const ConvGeometry& g,
                          const Tensor& grad_out, bool need_input_grad = true);

Tensor relu(const Tensor& x);
Tensor relu_backward(const Tensor& x, const Tensor& grad_out);

Tensor add(const Tensor& a, const Tensor& b);

Tensor concat_channels(std::span<const Tensor> parts);
/// Splits a gradient of the concatenation back into per-part gradients.
std::vector<Tensor> split_channels(const Tensor& grad, std::span<const int> channels);

/// Per-channel spatial mean, broadcast back over H x W.
Tensor avg_pool_global(const Tensor& x);
Tensor avg_pool_global_backward(const Tensor& grad_out);

Tensor upsample_nearest(const Tensor& x, int factor);
Tensor upsample_nearest_backward(const Tensor& grad_out, int factor);

// Two-channel likelihood head. Channel 0 of the logits is background and
// channel 1 is target.
inline constexpr int kBackgroundChannel = 0;
inline constexpr int kTargetChannel = 1;
inline constexpr double kBceEpsilon = 1e-7;

struct Likelihoods {
  Tensor target;      // (N, 1, H, W)
  Tensor background;  // (N, 1, H, W)
};

Likelihoods softmax2(const Tensor& logits);
Tensor softmax2_backward(const Likelihoods& probs, const Tensor& grad_target,
                         const Tensor& grad_background);

/// Labels as an (N, 1, H, W) tensor of {0, 1}.
Tensor labels_tensor(std::span<const Mask> masks);

/// -(1/|pixels|) * sum[pos_weight*y*log(Pt+eps) + (1-y)*log(Pb+eps)]
double bce_loss(const Likelihoods& probs, const Tensor& labels, double pos_weight);
double bce_loss(const Tensor& p_target, const Tensor& p_background, const Mask& mask,
                double pos_weight);

struct BceGrads {
  Tensor target;
  Tensor background;
};
BceGrads bce_loss_backward(const Likelihoods& probs, const Tensor& labels, double pos_weight);

/// Fused softmax2 + bce on logits. log P is taken as z - logsumexp(z) rather
/// than log(P + eps), so the loss is finite for any logits and its exact
/// gradient is dL/dz_t = (-w*y*(1-Pt) + (1-y)*Pt) / |pixels|, dL/dz_b = -dL/dz_t.
/// Agrees with bce_loss(softmax2(z)) to within ~eps/P per pixel.
double softmax_bce(const Tensor& logits, const Tensor& labels, double pos_weight,
                   Tensor* grad_logits);

}  // namespace tirdet::nn
