#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>

#include "tirdet/image.hpp"

namespace tirdet::dataprep {

/// Image-to-image style translation; output has the input's dimensions.
using TranslationFn = std::function<Image(const Image&)>;

/// Scores an image as belonging to a domain; result in [0,1].
using DiscriminatorFn = std::function<double(const Image&)>;

/// Replace every target pixel by the mean of the background pixels in its
/// row. Rows that are entirely target take the global background mean.
/// Throws InvalidArgument when the mask has no background pixel at all.
Image separate_background(const LabeledImage& item);

/// Target pixels from `original.image`, background from `translated_bg`.
Image compose(const Image& translated_bg, const LabeledImage& original);

/// compose(translate(separate_background(item)), item)
Image adaptation_pipeline(const LabeledImage& item, const TranslationFn& translate);

struct SurrogateConfig {
  std::optional<Image> reference;
  double sigma_row = 0.0;
  double sigma_px = 0.0;
  std::uint64_t seed = 0;
};

/// Rank-based histogram matching; ties share their mean rank so equal input
/// values map to equal outputs.
Image histogram_match(const Image& image, const Image& reference);

/// Stand-in for a trained generator: histogram match to `reference` (if any),
/// then a N(0, sigma_row^2) offset per row, N(0, sigma_px^2) noise per pixel,
/// and a clamp to [0,1]. Deterministic for a given seed.
Image translate_surrogate(const Image& image, const SurrogateConfig& config);

/// Wraps translate_surrogate as a TranslationFn. Every call reuses the same
/// seed, so the function is pure.
TranslationFn surrogate_translation(SurrogateConfig config);

struct LossBreakdown {
  double adv_s_to_t = 0.0;
  double adv_t_to_s = 0.0;
  double recon_s = 0.0;
  double recon_t = 0.0;
  double total = 0.0;
};

/// Translation objective over finite batches. Adversarial terms follow the
/// printed form
///   adv_s_to_t = E_T[d_s(x_t)] + E_S[1 - d_t(p(x_s))]
///   adv_t_to_s = E_S[d_t(x_s)] + E_T[1 - d_s(q(x_t))]
/// and reconstruction terms are mean absolute error over pixels and batch.
LossBreakdown translation_losses(std::span<const Image> source, std::span<const Image> target,
                                 const TranslationFn& p, const TranslationFn& q,
                                 const DiscriminatorFn& d_s, const DiscriminatorFn& d_t);

/// Mean |a - b| over pixels.
double mean_abs_error(const Image& a, const Image& b);

}  // namespace tirdet::dataprep
