#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace tirdet {

/// Single-channel intensity grid, row-major.
class Image {
 public:
  Image() = default;
  Image(int width, int height, double fill = 0.0);
  Image(int width, int height, std::vector<double> data);

  int width() const noexcept { return width_; }
  int height() const noexcept { return height_; }
  std::size_t size() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }

  double operator()(int row, int col) const noexcept {
    return data_[static_cast<std::size_t>(row) * width_ + col];
  }
  double& operator()(int row, int col) noexcept {
    return data_[static_cast<std::size_t>(row) * width_ + col];
  }

  std::span<const double> pixels() const noexcept { return data_; }
  std::span<double> pixels() noexcept { return data_; }
  std::span<const double> row(int r) const noexcept {
    return std::span<const double>(data_).subspan(static_cast<std::size_t>(r) * width_, width_);
  }

  bool all_finite() const noexcept;

  friend bool operator==(const Image&, const Image&) = default;

 private:
  int width_ = 0;
  int height_ = 0;
  std::vector<double> data_;
};

/// Per-pixel binary target label; 1 marks a target pixel.
class Mask {
 public:
  Mask() = default;
  Mask(int width, int height, std::uint8_t fill = 0);
  Mask(int width, int height, std::vector<std::uint8_t> data);

  int width() const noexcept { return width_; }
  int height() const noexcept { return height_; }
  std::size_t size() const noexcept { return data_.size(); }

  std::uint8_t operator()(int row, int col) const noexcept {
    return data_[static_cast<std::size_t>(row) * width_ + col];
  }
  std::uint8_t& operator()(int row, int col) noexcept {
    return data_[static_cast<std::size_t>(row) * width_ + col];
  }

  std::span<const std::uint8_t> labels() const noexcept { return data_; }
  std::span<std::uint8_t> labels() noexcept { return data_; }

  std::size_t count() const noexcept;

  friend bool operator==(const Mask&, const Mask&) = default;

 private:
  int width_ = 0;
  int height_ = 0;
  std::vector<std::uint8_t> data_;
};

/// An image together with its ground-truth target mask.
struct LabeledImage {
  Image image;
  Mask mask;

  /// Throws ShapeError when image and mask dimensions differ.
  void validate() const;
};

struct Margins {
  int top = 0;
  int bottom = 0;
  int left = 0;
  int right = 0;
};

template <typename A, typename B>
bool same_size(const A& a, const B& b) noexcept {
  return a.width() == b.width() && a.height() == b.height();
}

/// Min-max scale into [0,1]. A constant image maps to all zeros.
Image normalize(const Image& image);

/// Pad by copying the nearest edge pixel outward.
Image replicate_pad(const Image& image, Margins margins);

Image crop(const Image& image, int left, int top, int width, int height);

}  // namespace tirdet
