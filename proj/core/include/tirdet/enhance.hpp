#pragma once

#include <string>
#include <vector>

#include "tirdet/image.hpp"
#include "tirdet/nn/tensor.hpp"

namespace tirdet::enhance {

enum class Aspect { Square, Horizontal, Vertical };

std::string to_string(Aspect aspect);

/// Offset from the kernel center, in (row, col).
struct Cell {
  int row = 0;
  int col = 0;
  friend bool operator==(const Cell&, const Cell&) = default;
};

/// A fixed center-surround kernel: red cells form a centered rectangle and
/// carry weight 1/n_red; blue cells are the rest of the s x s window and
/// carry weight -1/n_blue. The response is mean(red) - mean(blue).
struct KernelSpec {
  int size = 0;
  Aspect aspect = Aspect::Square;
  int red_rows = 0;
  int red_cols = 0;
  std::vector<Cell> red;
  std::vector<Cell> blue;

  int radius() const noexcept { return size / 2; }
  int n_red() const noexcept { return static_cast<int>(red.size()); }
  int n_blue() const noexcept { return static_cast<int>(blue.size()); }
  bool is_red(int row, int col) const noexcept;

  /// Dense size x size weights, row-major, cell (0,0) at index radius*size+radius.
  std::vector<double> dense_weights() const;

  /// Throws InvalidArgument unless the layout satisfies every kernel invariant.
  void validate() const;
};

/// Centered red rectangle of red_rows x red_cols inside a size x size window.
KernelSpec make_kernel(int size, int red_rows, int red_cols, Aspect aspect);

/// Red extent for the square variant of each default size:
/// 3->1, 5->3, 7->3, 9->5, 11->5.
int base_center_extent(int size);

using KernelBank = std::vector<KernelSpec>;

/// 15 kernels: sizes 3,5,7,9,11, each as square m x m, horizontal 1 x m and
/// vertical m x 1 (in that order).
KernelBank build_default_bank();

/// Same-size response with replicate-padded borders.
Image kernel_response(const Image& image, const KernelSpec& spec);

/// 1 x (1 + bank.size()) x H x W: channel 0 is the raw image, channel k is the
/// response of bank[k-1].
nn::Tensor enhance_stack(const Image& image, const KernelBank& bank);

}  // namespace tirdet::enhance
