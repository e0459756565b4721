#include "tirdet/image.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "tirdet/error.hpp"

namespace tirdet {

namespace {

void check_dims(int width, int height) {
  if (width < 1 || height < 1) {
    throw ShapeError("image dimensions must be positive, got " + std::to_string(width) + "x" +
                     std::to_string(height));
  }
}

}  // namespace

Image::Image(int width, int height, double fill) : width_(width), height_(height) {
  check_dims(width, height);
  data_.assign(static_cast<std::size_t>(width) * height, fill);
}

Image::Image(int width, int height, std::vector<double> data)
    : width_(width), height_(height), data_(std::move(data)) {
  check_dims(width, height);
  if (data_.size() != static_cast<std::size_t>(width) * height) {
    throw ShapeError("image data length " + std::to_string(data_.size()) + " does not match " +
                     std::to_string(width) + "x" + std::to_string(height));
  }
}

bool Image::all_finite() const noexcept {
  return std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); });
}

Mask::Mask(int width, int height, std::uint8_t fill) : width_(width), height_(height) {
  check_dims(width, height);
  if (fill > 1) throw InvalidArgument("mask labels must be 0 or 1");
  data_.assign(static_cast<std::size_t>(width) * height, fill);
}

Mask::Mask(int width, int height, std::vector<std::uint8_t> data)
    : width_(width), height_(height), data_(std::move(data)) {
  check_dims(width, height);
  if (data_.size() != static_cast<std::size_t>(width) * height) {
    throw ShapeError("mask data length does not match dimensions");
  }
  if (std::any_of(data_.begin(), data_.end(), [](std::uint8_t v) { return v > 1; })) {
    throw InvalidArgument("mask labels must be 0 or 1");
  }
}

std::size_t Mask::count() const noexcept {
  return static_cast<std::size_t>(std::count(data_.begin(), data_.end(), std::uint8_t{1}));
}

void LabeledImage::validate() const {
  if (!same_size(image, mask)) {
    throw ShapeError("image is " + std::to_string(image.width()) + "x" +
                     std::to_string(image.height()) + " but mask is " +
                     std::to_string(mask.width()) + "x" + std::to_string(mask.height()));
  }
}

Image normalize(const Image& image) {
  const auto px = image.pixels();
  const auto [lo_it, hi_it] = std::minmax_element(px.begin(), px.end());
  const double lo = *lo_it;
  const double range = *hi_it - lo;
  Image out(image.width(), image.height(), 0.0);
  if (range <= 0.0) return out;
  auto dst = out.pixels();
  for (std::size_t i = 0; i < px.size(); ++i) dst[i] = (px[i] - lo) / range;
  return out;
}

Image replicate_pad(const Image& image, Margins m) {
  if (m.top < 0 || m.bottom < 0 || m.left < 0 || m.right < 0) {
    throw InvalidArgument("padding margins must be non-negative");
  }
  const int w = image.width() + m.left + m.right;
  const int h = image.height() + m.top + m.bottom;
  Image out(w, h);
  for (int r = 0; r < h; ++r) {
    const int src_r = std::clamp(r - m.top, 0, image.height() - 1);
    for (int c = 0; c < w; ++c) {
      const int src_c = std::clamp(c - m.left, 0, image.width() - 1);
      out(r, c) = image(src_r, src_c);
    }
  }
  return out;
}

Image crop(const Image& image, int left, int top, int width, int height) {
  if (left < 0 || top < 0 || left + width > image.width() || top + height > image.height()) {
    throw ShapeError("crop window exceeds image bounds");
  }
  Image out(width, height);
  for (int r = 0; r < height; ++r) {
    const auto src = image.row(top + r).subspan(left, width);
    std::copy(src.begin(), src.end(), out.pixels().begin() + static_cast<std::ptrdiff_t>(r) * width);
  }
  return out;
}

}  // namespace tirdet
