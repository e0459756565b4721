#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace tirdet::nn {

/// (batch, channels, height, width)
struct Shape {
  int n = 0;
  int c = 0;
  int h = 0;
  int w = 0;

  std::size_t count() const noexcept {
    return static_cast<std::size_t>(n) * c * h * w;
  }
  std::size_t plane() const noexcept { return static_cast<std::size_t>(h) * w; }
  std::string str() const;

  friend bool operator==(const Shape&, const Shape&) = default;
};

/// Dense rank-4 tensor of doubles in NCHW order.
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(Shape shape, double fill = 0.0);
  Tensor(Shape shape, std::vector<double> values);

  const Shape& shape() const noexcept { return shape_; }
  std::size_t size() const noexcept { return values_.size(); }
  bool empty() const noexcept { return values_.empty(); }

  double* data() noexcept { return values_.data(); }
  const double* data() const noexcept { return values_.data(); }
  std::span<double> values() noexcept { return values_; }
  std::span<const double> values() const noexcept { return values_; }

  std::size_t offset(int n, int c, int y, int x) const noexcept {
    return ((static_cast<std::size_t>(n) * shape_.c + c) * shape_.h + y) * shape_.w + x;
  }
  double& at(int n, int c, int y, int x) noexcept { return values_[offset(n, c, y, x)]; }
  double at(int n, int c, int y, int x) const noexcept { return values_[offset(n, c, y, x)]; }

  /// One H*W channel plane.
  std::span<double> plane(int n, int c) noexcept {
    return std::span<double>(values_).subspan(offset(n, c, 0, 0), shape_.plane());
  }
  std::span<const double> plane(int n, int c) const noexcept {
    return std::span<const double>(values_).subspan(offset(n, c, 0, 0), shape_.plane());
  }

  void fill(double v) noexcept;
  bool all_finite() const noexcept;

  /// Elementwise this += other. Shapes must match.
  Tensor& operator+=(const Tensor& other);

  friend bool operator==(const Tensor&, const Tensor&) = default;

 private:
  Shape shape_;
  std::vector<double> values_;
};

/// Throws ShapeError with `what` when a != b.
void require_same_shape(const Shape& a, const Shape& b, const char* what);

/// Throws NumericError naming `where` if the tensor holds NaN/Inf.
void require_finite(const Tensor& t, const char* where);

double max_abs_diff(const Tensor& a, const Tensor& b);

}  // namespace tirdet::nn
