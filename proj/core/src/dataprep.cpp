#include "tirdet/dataprep.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <vector>

#include "tirdet/error.hpp"

namespace tirdet::dataprep {

Image separate_background(const LabeledImage& item) {
  item.validate();
  const Image& img = item.image;
  const Mask& mask = item.mask;

  double global_sum = 0.0;
  std::size_t global_count = 0;
  std::vector<double> row_mean(img.height(), 0.0);
  std::vector<bool> row_has_bg(img.height(), false);
  for (int r = 0; r < img.height(); ++r) {
    double sum = 0.0;
    std::size_t count = 0;
    for (int c = 0; c < img.width(); ++c) {
      if (mask(r, c) == 0) {
        sum += img(r, c);
        ++count;
      }
    }
    if (count > 0) {
      row_mean[r] = sum / static_cast<double>(count);
      row_has_bg[r] = true;
    }
    global_sum += sum;
    global_count += count;
  }
  if (global_count == 0) {
    throw InvalidArgument("separate_background: mask has no background pixels");
  }
  const double global_mean = global_sum / static_cast<double>(global_count);

  Image out = img;
  for (int r = 0; r < img.height(); ++r) {
    const double fill = row_has_bg[r] ? row_mean[r] : global_mean;
    for (int c = 0; c < img.width(); ++c) {
      if (mask(r, c) != 0) out(r, c) = fill;
    }
  }
  return out;
}

Image compose(const Image& translated_bg, const LabeledImage& original) {
  original.validate();
  if (!same_size(translated_bg, original.image)) {
    throw ShapeError("compose: translated background size differs from original");
  }
  Image out = translated_bg;
  const auto labels = original.mask.labels();
  const auto src = original.image.pixels();
  auto dst = out.pixels();
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] != 0) dst[i] = src[i];
  }
  return out;
}

Image adaptation_pipeline(const LabeledImage& item, const TranslationFn& translate) {
  const Image background = separate_background(item);
  const Image translated = translate(background);
  if (!same_size(translated, background)) {
    throw ShapeError("translation function changed image dimensions");
  }
  return compose(translated, item);
}

namespace {

// Quantile of sorted reference at fractional position q in [0, 1].
double quantile(const std::vector<double>& sorted, double q) {
  if (sorted.size() == 1) return sorted.front();
  const double pos = q * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  const double t = pos - static_cast<double>(lo);
  return sorted[lo] + t * (sorted[hi] - sorted[lo]);
}

}  // namespace

Image histogram_match(const Image& image, const Image& reference) {
  std::vector<double> ref(reference.pixels().begin(), reference.pixels().end());
  std::sort(ref.begin(), ref.end());

  const auto px = image.pixels();
  const std::size_t n = px.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return px[a] < px[b]; });

  Image out(image.width(), image.height());
  auto dst = out.pixels();
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j + 1 < n && px[order[j + 1]] == px[order[i]]) ++j;
    const double mean_rank = 0.5 * static_cast<double>(i + j);
    const double q = n > 1 ? mean_rank / static_cast<double>(n - 1) : 0.5;
    const double v = quantile(ref, q);
    for (std::size_t k = i; k <= j; ++k) dst[order[k]] = v;
    i = j + 1;
  }
  return out;
}

Image translate_surrogate(const Image& image, const SurrogateConfig& config) {
  if (config.sigma_row < 0.0 || config.sigma_px < 0.0) {
    throw InvalidArgument("surrogate noise amplitudes must be non-negative");
  }
  Image out = config.reference ? histogram_match(image, *config.reference) : image;
  std::mt19937_64 rng(config.seed);
  std::normal_distribution<double> unit(0.0, 1.0);
  if (config.sigma_row > 0.0) {
    for (int r = 0; r < out.height(); ++r) {
      const double offset = config.sigma_row * unit(rng);
      for (int c = 0; c < out.width(); ++c) out(r, c) += offset;
    }
  }
  if (config.sigma_px > 0.0) {
    for (double& v : out.pixels()) v += config.sigma_px * unit(rng);
  }
  for (double& v : out.pixels()) v = std::clamp(v, 0.0, 1.0);
  return out;
}

TranslationFn surrogate_translation(SurrogateConfig config) {
  return [config = std::move(config)](const Image& image) {
    return translate_surrogate(image, config);
  };
}

double mean_abs_error(const Image& a, const Image& b) {
  if (!same_size(a, b)) throw ShapeError("mean_abs_error: size mismatch");
  double sum = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) sum += std::abs(a.pixels()[i] - b.pixels()[i]);
  return sum / static_cast<double>(a.size());
}

namespace {

double checked_score(const DiscriminatorFn& d, const Image& x) {
  const double s = d(x);
  if (!std::isfinite(s) || s < 0.0 || s > 1.0) {
    throw NumericError("discriminator score outside [0,1]");
  }
  return s;
}

}  // namespace

LossBreakdown translation_losses(std::span<const Image> source, std::span<const Image> target,
                                 const TranslationFn& p, const TranslationFn& q,
                                 const DiscriminatorFn& d_s, const DiscriminatorFn& d_t) {
  if (source.empty() || target.empty()) {
    throw InvalidArgument("translation_losses: batches must be non-empty");
  }
  const double ns = static_cast<double>(source.size());
  const double nt = static_cast<double>(target.size());

  double ds_real_t = 0.0;     // E_T[d_s(x_t)]
  double dt_fake_s = 0.0;     // E_S[1 - d_t(p(x_s))]
  double dt_real_s = 0.0;     // E_S[d_t(x_s)]
  double ds_fake_t = 0.0;     // E_T[1 - d_s(q(x_t))]
  double recon_s = 0.0;
  double recon_t = 0.0;

  for (const Image& xs : source) {
    const Image ps = p(xs);
    dt_fake_s += 1.0 - checked_score(d_t, ps);
    dt_real_s += checked_score(d_t, xs);
    recon_s += mean_abs_error(q(ps), xs);
  }
  for (const Image& xt : target) {
    const Image qt = q(xt);
    ds_real_t += checked_score(d_s, xt);
    ds_fake_t += 1.0 - checked_score(d_s, qt);
    recon_t += mean_abs_error(p(qt), xt);
  }

  LossBreakdown out;
  out.adv_s_to_t = ds_real_t / nt + dt_fake_s / ns;
  out.adv_t_to_s = dt_real_s / ns + ds_fake_t / nt;
  out.recon_s = recon_s / ns;
  out.recon_t = recon_t / nt;
  out.total = out.adv_s_to_t + out.adv_t_to_s + out.recon_s + out.recon_t;
  return out;
}

}  // namespace tirdet::dataprep
