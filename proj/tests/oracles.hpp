#pragma once

// Brute-force reference implementations used by the unit and acceptance
// tests. They are deliberately written without sharing code with the
// library: plain loops, explicit index clamping, no im2col, no dense kernels.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <random>

#include "tirdet/enhance.hpp"
#include "tirdet/image.hpp"
#include "tirdet/metrics.hpp"
#include "tirdet/nn/layers.hpp"

namespace oracle {

using tirdet::Image;
using tirdet::Mask;
using tirdet::nn::ConvGeometry;
using tirdet::nn::PadMode;
using tirdet::nn::Shape;
using tirdet::nn::Tensor;

inline Tensor conv2d(const Tensor& x, const Tensor& w, const Tensor* bias, const ConvGeometry& g) {
  const Shape xs = x.shape();
  const Shape ws = w.shape();
  const int oh = (xs.h + 2 * g.padding - g.dilation * (ws.h - 1) - 1) / g.stride + 1;
  const int ow = (xs.w + 2 * g.padding - g.dilation * (ws.w - 1) - 1) / g.stride + 1;
  Tensor y({xs.n, ws.n, oh, ow});
  for (int n = 0; n < xs.n; ++n)
    for (int oc = 0; oc < ws.n; ++oc)
      for (int oy = 0; oy < oh; ++oy)
        for (int ox = 0; ox < ow; ++ox) {
          double acc = bias ? bias->at(0, oc, 0, 0) : 0.0;
          for (int ic = 0; ic < ws.c; ++ic)
            for (int ky = 0; ky < ws.h; ++ky)
              for (int kx = 0; kx < ws.w; ++kx) {
                int iy = oy * g.stride - g.padding + ky * g.dilation;
                int ix = ox * g.stride - g.padding + kx * g.dilation;
                if (g.pad_mode == PadMode::Replicate) {
                  iy = std::clamp(iy, 0, xs.h - 1);
                  ix = std::clamp(ix, 0, xs.w - 1);
                } else if (iy < 0 || iy >= xs.h || ix < 0 || ix >= xs.w) {
                  continue;
                }
                acc += x.at(n, ic, iy, ix) * w.at(oc, ic, ky, kx);
              }
          y.at(n, oc, oy, ox) = acc;
        }
  return y;
}

// mean(red cells) - mean(blue cells), visiting the kernel's explicit cell lists
// and clamping coordinates at the border.
inline Image kernel_response(const Image& img, const tirdet::enhance::KernelSpec& spec) {
  Image out(img.width(), img.height());
  auto sample = [&](int r, int c) {
    return img(std::clamp(r, 0, img.height() - 1), std::clamp(c, 0, img.width() - 1));
  };
  for (int r = 0; r < img.height(); ++r) {
    for (int c = 0; c < img.width(); ++c) {
      double red = 0.0;
      double blue = 0.0;
      for (const auto& cell : spec.red) red += sample(r + cell.row, c + cell.col);
      for (const auto& cell : spec.blue) blue += sample(r + cell.row, c + cell.col);
      out(r, c) = red / static_cast<double>(spec.red.size()) -
                  blue / static_cast<double>(spec.blue.size());
    }
  }
  return out;
}

inline tirdet::metrics::ConfusionCounts confusion(const Mask& pred, const Mask& truth) {
  tirdet::metrics::ConfusionCounts c;
  for (int r = 0; r < truth.height(); ++r) {
    for (int col = 0; col < truth.width(); ++col) {
      const bool p = pred(r, col) == 1;
      const bool t = truth(r, col) == 1;
      if (p && t) ++c.tp;
      if (p && !t) ++c.fp;
      if (!p && t) ++c.fn;
      if (!p && !t) ++c.tn;
    }
  }
  return c;
}

struct Scores {
  std::optional<double> iou_t, iou_b, miou, recall, precision, f1;
};

inline std::optional<double> ratio(std::uint64_t num, std::uint64_t den) {
  if (den == 0) return std::nullopt;
  return static_cast<double>(num) / static_cast<double>(den);
}

inline Scores scores(const tirdet::metrics::ConfusionCounts& c) {
  Scores s;
  s.iou_t = ratio(c.tp, c.tp + c.fp + c.fn);
  s.iou_b = ratio(c.tn, c.tn + c.fp + c.fn);
  if (s.iou_t && s.iou_b) {
    s.miou = (*s.iou_t + *s.iou_b) / 2.0;
  } else if (s.iou_t) {
    s.miou = s.iou_t;
  } else if (s.iou_b) {
    s.miou = s.iou_b;
  }
  s.recall = ratio(c.tp, c.tp + c.fn);
  s.precision = ratio(c.tp, c.tp + c.fp);
  if (s.recall && s.precision && *s.recall + *s.precision > 0.0) {
    s.f1 = 2.0 * *s.recall * *s.precision / (*s.recall + *s.precision);
  }
  return s;
}

// ---- random inputs --------------------------------------------------------

inline Image random_image(std::mt19937_64& rng, int w, int h, double lo = 0.0, double hi = 1.0) {
  std::uniform_real_distribution<double> u(lo, hi);
  Image img(w, h);
  for (double& v : img.pixels()) v = u(rng);
  return img;
}

inline Mask random_mask(std::mt19937_64& rng, int w, int h, double p_one) {
  std::bernoulli_distribution b(p_one);
  Mask m(w, h);
  for (auto& v : m.labels()) v = b(rng) ? 1 : 0;
  return m;
}

inline Tensor random_tensor(std::mt19937_64& rng, Shape s, double lo = -1.0, double hi = 1.0) {
  std::uniform_real_distribution<double> u(lo, hi);
  Tensor t(s);
  for (double& v : t.values()) v = u(rng);
  return t;
}

inline double max_abs_diff(const Image& a, const Image& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a.pixels()[i] - b.pixels()[i]));
  return m;
}

}  // namespace oracle
