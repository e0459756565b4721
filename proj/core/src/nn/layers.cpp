#include "tirdet/nn/layers.hpp"

#include <Eigen/Core>
#include <algorithm>
#include <cmath>
#include <numeric>

#include "tirdet/error.hpp"

namespace tirdet::nn {

namespace {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MatMap = Eigen::Map<RowMatrix>;
using ConstMatMap = Eigen::Map<const RowMatrix>;

struct ConvLayout {
  int in_c, in_h, in_w;
  int out_c, out_h, out_w;
  int kh, kw;
  ConvGeometry g;

  Eigen::Index rows() const { return static_cast<Eigen::Index>(in_c) * kh * kw; }
  Eigen::Index cols() const { return static_cast<Eigen::Index>(out_h) * out_w; }
  bool direct() const {
    return kh == 1 && kw == 1 && g.stride == 1 && g.padding == 0;
  }
};

ConvLayout make_layout(const Shape& x, const Shape& w, const ConvGeometry& g) {
  if (g.stride < 1 || g.dilation < 1 || g.padding < 0) {
    throw InvalidArgument("conv2d: stride and dilation must be >= 1, padding >= 0");
  }
  if (w.c != x.c) {
    throw ShapeError("conv2d: input has " + std::to_string(x.c) + " channels, weight expects " +
                     std::to_string(w.c));
  }
  if (w.h % 2 == 0 || w.w % 2 == 0) throw ShapeError("conv2d: kernel extents must be odd");
  const Shape out = conv2d_output_shape(x, w, g);
  return {x.c, x.h, x.w, w.n, out.h, out.w, w.h, w.w, g};
}

int source_index(int pos, int extent, PadMode mode, bool& inside) {
  if (pos >= 0 && pos < extent) {
    inside = true;
    return pos;
  }
  if (mode == PadMode::Replicate) {
    inside = true;
    return std::clamp(pos, 0, extent - 1);
  }
  inside = false;
  return 0;
}

// col has rows() x cols() entries, row-major.
void im2col(const double* x, const ConvLayout& L, double* col) {
  const auto& g = L.g;
  for (int c = 0; c < L.in_c; ++c) {
    const double* plane = x + static_cast<std::size_t>(c) * L.in_h * L.in_w;
    for (int i = 0; i < L.kh; ++i) {
      for (int j = 0; j < L.kw; ++j) {
        double* dst = col + ((static_cast<std::size_t>(c) * L.kh + i) * L.kw + j) * L.cols();
        for (int oy = 0; oy < L.out_h; ++oy) {
          bool row_in = false;
          const int iy = source_index(oy * g.stride - g.padding + i * g.dilation, L.in_h,
                                      g.pad_mode, row_in);
          double* out_row = dst + static_cast<std::size_t>(oy) * L.out_w;
          if (!row_in) {
            std::fill(out_row, out_row + L.out_w, 0.0);
            continue;
          }
          const double* src_row = plane + static_cast<std::size_t>(iy) * L.in_w;
          for (int ox = 0; ox < L.out_w; ++ox) {
            bool col_in = false;
            const int ix = source_index(ox * g.stride - g.padding + j * g.dilation, L.in_w,
                                        g.pad_mode, col_in);
            out_row[ox] = col_in ? src_row[ix] : 0.0;
          }
        }
      }
    }
  }
}

// Scatter-add of im2col's adjoint.
void col2im(const double* col, const ConvLayout& L, double* dx) {
  const auto& g = L.g;
  for (int c = 0; c < L.in_c; ++c) {
    double* plane = dx + static_cast<std::size_t>(c) * L.in_h * L.in_w;
    for (int i = 0; i < L.kh; ++i) {
      for (int j = 0; j < L.kw; ++j) {
        const double* src =
            col + ((static_cast<std::size_t>(c) * L.kh + i) * L.kw + j) * L.cols();
        for (int oy = 0; oy < L.out_h; ++oy) {
          bool row_in = false;
          const int iy = source_index(oy * g.stride - g.padding + i * g.dilation, L.in_h,
                                      g.pad_mode, row_in);
          if (!row_in) continue;
          double* dst_row = plane + static_cast<std::size_t>(iy) * L.in_w;
          const double* in_row = src + static_cast<std::size_t>(oy) * L.out_w;
          for (int ox = 0; ox < L.out_w; ++ox) {
            bool col_in = false;
            const int ix = source_index(ox * g.stride - g.padding + j * g.dilation, L.in_w,
                                        g.pad_mode, col_in);
            if (col_in) dst_row[ix] += in_row[ox];
          }
        }
      }
    }
  }
}

void check_labels(const Shape& probs, const Shape& labels) {
  if (labels.n != probs.n || labels.c != 1 || labels.h != probs.h || labels.w != probs.w) {
    throw ShapeError("labels " + labels.str() + " do not match likelihood map " + probs.str());
  }
}

}  // namespace

int conv_output_extent(int in, int kernel, const ConvGeometry& g) {
  const int span = g.dilation * (kernel - 1) + 1;
  const int padded = in + 2 * g.padding;
  if (padded < span) return 0;
  return (padded - span) / g.stride + 1;
}

Shape conv2d_output_shape(const Shape& input, const Shape& weight, const ConvGeometry& g) {
  if (input.c != weight.c) {
    throw ShapeError("conv2d: input " + input.str() + " does not match weight " + weight.str());
  }
  const int oh = conv_output_extent(input.h, weight.h, g);
  const int ow = conv_output_extent(input.w, weight.w, g);
  if (oh < 1 || ow < 1) {
    throw ShapeError("conv2d: input " + input.str() + " admits no output position for kernel " +
                     weight.str());
  }
  return {input.n, weight.n, oh, ow};
}

Tensor conv2d(const Tensor& x, const Tensor& weight, const Tensor* bias, const ConvGeometry& g) {
  const ConvLayout L = make_layout(x.shape(), weight.shape(), g);
  if (bias != nullptr && bias->size() != static_cast<std::size_t>(L.out_c)) {
    throw ShapeError("conv2d: bias length does not match output channels");
  }
  Tensor y({x.shape().n, L.out_c, L.out_h, L.out_w});
  ConstMatMap w(weight.data(), L.out_c, L.rows());
  std::vector<double> col;
  if (!L.direct()) col.resize(static_cast<std::size_t>(L.rows() * L.cols()));
  for (int n = 0; n < x.shape().n; ++n) {
    const double* xn = x.data() + x.offset(n, 0, 0, 0);
    if (!L.direct()) im2col(xn, L, col.data());
    ConstMatMap cm(L.direct() ? xn : col.data(), L.rows(), L.cols());
    MatMap out(y.data() + y.offset(n, 0, 0, 0), L.out_c, L.cols());
    out.noalias() = w * cm;
    if (bias != nullptr) {
      for (int o = 0; o < L.out_c; ++o) out.row(o).array() += bias->values()[o];
    }
  }
  return y;
}

ConvGrads conv2d_backward(const Tensor& x, const Tensor& weight, const ConvGeometry& g,
                          const Tensor& grad_out, bool need_input_grad) {
  const ConvLayout L = make_layout(x.shape(), weight.shape(), g);
  require_same_shape(grad_out.shape(), Shape{x.shape().n, L.out_c, L.out_h, L.out_w},
                     "conv2d_backward grad_out");
  ConvGrads grads;
  grads.weight = Tensor(weight.shape());
  grads.bias = Tensor({1, L.out_c, 1, 1});
  if (need_input_grad) grads.input = Tensor(x.shape());

  ConstMatMap w(weight.data(), L.out_c, L.rows());
  MatMap dw(grads.weight.data(), L.out_c, L.rows());
  std::vector<double> col;
  std::vector<double> dcol;
  if (!L.direct()) col.resize(static_cast<std::size_t>(L.rows() * L.cols()));
  if (need_input_grad && !L.direct()) dcol.resize(col.size());

  for (int n = 0; n < x.shape().n; ++n) {
    const double* xn = x.data() + x.offset(n, 0, 0, 0);
    if (!L.direct()) im2col(xn, L, col.data());
    ConstMatMap cm(L.direct() ? xn : col.data(), L.rows(), L.cols());
    ConstMatMap dy(grad_out.data() + grad_out.offset(n, 0, 0, 0), L.out_c, L.cols());
    dw.noalias() += dy * cm.transpose();
    // Plain loop: Eigen's vectorized sum peels by runtime alignment, which
    // would make the result depend on where the buffer happens to live.
    for (int o = 0; o < L.out_c; ++o) {
      const double* row = dy.data() + static_cast<std::ptrdiff_t>(o) * L.cols();
      double acc = 0.0;
      for (Eigen::Index i = 0; i < L.cols(); ++i) acc += row[i];
      grads.bias.values()[o] += acc;
    }
    if (need_input_grad) {
      double* dxn = grads.input.data() + grads.input.offset(n, 0, 0, 0);
      if (L.direct()) {
        MatMap dx(dxn, L.rows(), L.cols());
        dx.noalias() = w.transpose() * dy;
      } else {
        MatMap dc(dcol.data(), L.rows(), L.cols());
        dc.noalias() = w.transpose() * dy;
        col2im(dcol.data(), L, dxn);
      }
    }
  }
  return grads;
}

Tensor relu(const Tensor& x) {
  Tensor y(x.shape());
  auto src = x.values();
  auto dst = y.values();
  for (std::size_t i = 0; i < src.size(); ++i) dst[i] = src[i] > 0.0 ? src[i] : 0.0;
  return y;
}

Tensor relu_backward(const Tensor& x, const Tensor& grad_out) {
  require_same_shape(x.shape(), grad_out.shape(), "relu_backward");
  Tensor dx(x.shape());
  auto src = x.values();
  auto dy = grad_out.values();
  auto dst = dx.values();
  for (std::size_t i = 0; i < src.size(); ++i) dst[i] = src[i] > 0.0 ? dy[i] : 0.0;
  return dx;
}

Tensor add(const Tensor& a, const Tensor& b) {
  require_same_shape(a.shape(), b.shape(), "add");
  Tensor y = a;
  y += b;
  return y;
}

Tensor concat_channels(std::span<const Tensor> parts) {
  if (parts.empty()) throw ShapeError("concat_channels: no inputs");
  Shape out = parts.front().shape();
  out.c = 0;
  for (const auto& p : parts) {
    const Shape& s = p.shape();
    if (s.n != out.n || s.h != out.h || s.w != out.w) {
      throw ShapeError("concat_channels: mismatched shape " + s.str());
    }
    out.c += s.c;
  }
  Tensor y(out);
  for (int n = 0; n < out.n; ++n) {
    int c0 = 0;
    for (const auto& p : parts) {
      const auto count = static_cast<std::size_t>(p.shape().c) * out.plane();
      std::copy_n(p.data() + p.offset(n, 0, 0, 0), count, y.data() + y.offset(n, c0, 0, 0));
      c0 += p.shape().c;
    }
  }
  return y;
}

std::vector<Tensor> split_channels(const Tensor& grad, std::span<const int> channels) {
  const Shape& s = grad.shape();
  if (std::accumulate(channels.begin(), channels.end(), 0) != s.c) {
    throw ShapeError("split_channels: channel counts do not sum to " + std::to_string(s.c));
  }
  std::vector<Tensor> out;
  out.reserve(channels.size());
  for (int c : channels) out.emplace_back(Shape{s.n, c, s.h, s.w});
  for (int n = 0; n < s.n; ++n) {
    int c0 = 0;
    for (std::size_t k = 0; k < channels.size(); ++k) {
      const auto count = static_cast<std::size_t>(channels[k]) * s.plane();
      std::copy_n(grad.data() + grad.offset(n, c0, 0, 0), count,
                  out[k].data() + out[k].offset(n, 0, 0, 0));
      c0 += channels[k];
    }
  }
  return out;
}

Tensor avg_pool_global(const Tensor& x) {
  Tensor y(x.shape());
  const double inv = 1.0 / static_cast<double>(x.shape().plane());
  for (int n = 0; n < x.shape().n; ++n) {
    for (int c = 0; c < x.shape().c; ++c) {
      const auto src = x.plane(n, c);
      const double mean = std::accumulate(src.begin(), src.end(), 0.0) * inv;
      auto dst = y.plane(n, c);
      std::fill(dst.begin(), dst.end(), mean);
    }
  }
  return y;
}

Tensor avg_pool_global_backward(const Tensor& grad_out) {
  // Each input pixel contributes 1/HW to every output pixel of its channel.
  return avg_pool_global(grad_out);
}

Tensor upsample_nearest(const Tensor& x, int factor) {
  if (factor < 1) throw InvalidArgument("upsample_nearest: factor must be >= 1");
  const Shape& s = x.shape();
  Tensor y({s.n, s.c, s.h * factor, s.w * factor});
  for (int n = 0; n < s.n; ++n) {
    for (int c = 0; c < s.c; ++c) {
      for (int oy = 0; oy < s.h * factor; ++oy) {
        for (int ox = 0; ox < s.w * factor; ++ox) {
          y.at(n, c, oy, ox) = x.at(n, c, oy / factor, ox / factor);
        }
      }
    }
  }
  return y;
}

Tensor upsample_nearest_backward(const Tensor& grad_out, int factor) {
  if (factor < 1) throw InvalidArgument("upsample_nearest: factor must be >= 1");
  const Shape& s = grad_out.shape();
  if (s.h % factor != 0 || s.w % factor != 0) {
    throw ShapeError("upsample_nearest_backward: extent not divisible by factor");
  }
  Tensor dx({s.n, s.c, s.h / factor, s.w / factor});
  for (int n = 0; n < s.n; ++n) {
    for (int c = 0; c < s.c; ++c) {
      for (int oy = 0; oy < s.h; ++oy) {
        for (int ox = 0; ox < s.w; ++ox) {
          dx.at(n, c, oy / factor, ox / factor) += grad_out.at(n, c, oy, ox);
        }
      }
    }
  }
  return dx;
}

Likelihoods softmax2(const Tensor& logits) {
  const Shape& s = logits.shape();
  if (s.c != 2) {
    throw ShapeError("softmax2: expected 2 channels, got " + std::to_string(s.c));
  }
  Likelihoods out{Tensor({s.n, 1, s.h, s.w}), Tensor({s.n, 1, s.h, s.w})};
  for (int n = 0; n < s.n; ++n) {
    const auto zb = logits.plane(n, kBackgroundChannel);
    const auto zt = logits.plane(n, kTargetChannel);
    auto pt = out.target.plane(n, 0);
    auto pb = out.background.plane(n, 0);
    for (std::size_t i = 0; i < zt.size(); ++i) {
      const double m = std::max(zt[i], zb[i]);
      const double et = std::exp(zt[i] - m);
      const double eb = std::exp(zb[i] - m);
      const double z = et + eb;
      pt[i] = et / z;
      pb[i] = eb / z;
    }
  }
  return out;
}

Tensor softmax2_backward(const Likelihoods& probs, const Tensor& grad_target,
                         const Tensor& grad_background) {
  const Shape& s = probs.target.shape();
  require_same_shape(grad_target.shape(), s, "softmax2_backward target");
  require_same_shape(grad_background.shape(), s, "softmax2_backward background");
  Tensor dz({s.n, 2, s.h, s.w});
  for (int n = 0; n < s.n; ++n) {
    const auto pt = probs.target.plane(n, 0);
    const auto pb = probs.background.plane(n, 0);
    const auto gt = grad_target.plane(n, 0);
    const auto gb = grad_background.plane(n, 0);
    auto dzt = dz.plane(n, kTargetChannel);
    auto dzb = dz.plane(n, kBackgroundChannel);
    for (std::size_t i = 0; i < pt.size(); ++i) {
      const double dot = pt[i] * gt[i] + pb[i] * gb[i];
      dzt[i] = pt[i] * (gt[i] - dot);
      dzb[i] = pb[i] * (gb[i] - dot);
    }
  }
  return dz;
}

Tensor labels_tensor(std::span<const Mask> masks) {
  if (masks.empty()) throw ShapeError("labels_tensor: no masks");
  const int h = masks.front().height();
  const int w = masks.front().width();
  Tensor t({static_cast<int>(masks.size()), 1, h, w});
  for (std::size_t n = 0; n < masks.size(); ++n) {
    if (masks[n].height() != h || masks[n].width() != w) {
      throw ShapeError("labels_tensor: masks differ in size");
    }
    auto dst = t.plane(static_cast<int>(n), 0);
    const auto src = masks[n].labels();
    for (std::size_t i = 0; i < src.size(); ++i) dst[i] = src[i];
  }
  return t;
}

double bce_loss(const Likelihoods& probs, const Tensor& labels, double pos_weight) {
  check_labels(probs.target.shape(), labels.shape());
  require_same_shape(probs.background.shape(), probs.target.shape(), "bce_loss");
  if (!(pos_weight > 0.0)) throw InvalidArgument("bce_loss: pos_weight must be positive");
  const auto pt = probs.target.values();
  const auto pb = probs.background.values();
  const auto y = labels.values();
  double sum = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    sum += pos_weight * y[i] * std::log(pt[i] + kBceEpsilon) +
           (1.0 - y[i]) * std::log(pb[i] + kBceEpsilon);
  }
  return -sum / static_cast<double>(y.size());
}

double bce_loss(const Tensor& p_target, const Tensor& p_background, const Mask& mask,
                double pos_weight) {
  const Mask masks[] = {mask};
  return bce_loss(Likelihoods{p_target, p_background}, labels_tensor(masks), pos_weight);
}

BceGrads bce_loss_backward(const Likelihoods& probs, const Tensor& labels, double pos_weight) {
  check_labels(probs.target.shape(), labels.shape());
  const auto pt = probs.target.values();
  const auto pb = probs.background.values();
  const auto y = labels.values();
  BceGrads g{Tensor(probs.target.shape()), Tensor(probs.background.shape())};
  const double inv = 1.0 / static_cast<double>(y.size());
  auto gt = g.target.values();
  auto gb = g.background.values();
  for (std::size_t i = 0; i < y.size(); ++i) {
    gt[i] = -inv * pos_weight * y[i] / (pt[i] + kBceEpsilon);
    gb[i] = -inv * (1.0 - y[i]) / (pb[i] + kBceEpsilon);
  }
  return g;
}

double softmax_bce(const Tensor& logits, const Tensor& labels, double pos_weight,
                   Tensor* grad_logits) {
  const Shape& s = logits.shape();
  if (s.c != 2) {
    throw ShapeError("softmax_bce: expected 2 channels, got " + std::to_string(s.c));
  }
  check_labels({s.n, 1, s.h, s.w}, labels.shape());
  if (!(pos_weight > 0.0)) throw InvalidArgument("softmax_bce: pos_weight must be positive");
  if (grad_logits != nullptr) *grad_logits = Tensor(s);
  const double inv = 1.0 / static_cast<double>(labels.size());
  double sum = 0.0;
  for (int n = 0; n < s.n; ++n) {
    const auto zb = logits.plane(n, kBackgroundChannel);
    const auto zt = logits.plane(n, kTargetChannel);
    const auto y = labels.plane(n, 0);
    for (std::size_t i = 0; i < zt.size(); ++i) {
      // log-sum-exp form: log P = z - lse, exact and finite for any logits.
      const double lse = std::max(zt[i], zb[i]) + std::log1p(std::exp(-std::abs(zt[i] - zb[i])));
      sum += pos_weight * y[i] * (zt[i] - lse) + (1.0 - y[i]) * (zb[i] - lse);
      if (grad_logits != nullptr) {
        const double pt = std::exp(zt[i] - lse);
        const double d = (-pos_weight * y[i] * (1.0 - pt) + (1.0 - y[i]) * pt) * inv;
        grad_logits->plane(n, kTargetChannel)[i] = d;
        grad_logits->plane(n, kBackgroundChannel)[i] = -d;
      }
    }
  }
  return -sum * inv;
}

}  // namespace tirdet::nn
