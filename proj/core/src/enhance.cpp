#include "tirdet/enhance.hpp"

#include <algorithm>
#include <set>
#include <utility>

#include "tirdet/error.hpp"

namespace tirdet::enhance {

std::string to_string(Aspect aspect) {
  switch (aspect) {
    case Aspect::Square: return "square";
    case Aspect::Horizontal: return "horizontal";
    case Aspect::Vertical: return "vertical";
  }
  return "unknown";
}

bool KernelSpec::is_red(int row, int col) const noexcept {
  return std::abs(row) <= red_rows / 2 && std::abs(col) <= red_cols / 2;
}

std::vector<double> KernelSpec::dense_weights() const {
  std::vector<double> w(static_cast<std::size_t>(size) * size, 0.0);
  const double wr = 1.0 / n_red();
  const double wb = -1.0 / n_blue();
  for (const Cell& c : red) w[(c.row + radius()) * size + c.col + radius()] = wr;
  for (const Cell& c : blue) w[(c.row + radius()) * size + c.col + radius()] = wb;
  return w;
}

void KernelSpec::validate() const {
  if (size < 3 || size % 2 == 0) throw InvalidArgument("kernel size must be odd and >= 3");
  if (red.empty() || blue.empty()) throw InvalidArgument("kernel needs red and blue cells");
  if (red_rows % 2 == 0 || red_cols % 2 == 0 || red_rows > size || red_cols > size) {
    throw InvalidArgument("red rectangle extents must be odd and fit the window");
  }
  std::set<std::pair<int, int>> seen;
  const int r = radius();
  auto claim = [&](const Cell& c, bool expect_red) {
    if (std::abs(c.row) > r || std::abs(c.col) > r) {
      throw InvalidArgument("kernel cell outside window");
    }
    if (!seen.emplace(c.row, c.col).second) {
      throw InvalidArgument("kernel cell assigned twice");
    }
    if (is_red(c.row, c.col) != expect_red) {
      throw InvalidArgument("red cells must form the centered rectangle");
    }
  };
  for (const Cell& c : red) claim(c, true);
  for (const Cell& c : blue) claim(c, false);
  if (seen.size() != static_cast<std::size_t>(size) * size) {
    throw InvalidArgument("red and blue cells must cover the window");
  }
}

KernelSpec make_kernel(int size, int red_rows, int red_cols, Aspect aspect) {
  KernelSpec k;
  k.size = size;
  k.aspect = aspect;
  k.red_rows = red_rows;
  k.red_cols = red_cols;
  const int r = size / 2;
  for (int dr = -r; dr <= r; ++dr) {
    for (int dc = -r; dc <= r; ++dc) {
      (k.is_red(dr, dc) ? k.red : k.blue).push_back({dr, dc});
    }
  }
  k.validate();
  return k;
}

int base_center_extent(int size) {
  switch (size) {
    case 3: return 1;
    case 5: return 3;
    case 7: return 3;
    case 9: return 5;
    case 11: return 5;
    default: throw InvalidArgument("no default center extent for size " + std::to_string(size));
  }
}

KernelBank build_default_bank() {
  KernelBank bank;
  for (int s : {3, 5, 7, 9, 11}) {
    const int m = base_center_extent(s);
    bank.push_back(make_kernel(s, m, m, Aspect::Square));
    bank.push_back(make_kernel(s, 1, m, Aspect::Horizontal));
    bank.push_back(make_kernel(s, m, 1, Aspect::Vertical));
  }
  return bank;
}

Image kernel_response(const Image& image, const KernelSpec& spec) {
  if (image.width() < spec.size || image.height() < spec.size) {
    throw ShapeError("image " + std::to_string(image.width()) + "x" +
                     std::to_string(image.height()) + " is smaller than kernel " +
                     std::to_string(spec.size));
  }
  const int r = spec.radius();
  const Image padded = replicate_pad(image, {r, r, r, r});
  const double inv_red = 1.0 / spec.n_red();
  const double inv_blue = 1.0 / spec.n_blue();
  const int hr = spec.red_rows / 2;
  const int hc = spec.red_cols / 2;
  Image out(image.width(), image.height());
  for (int y = 0; y < image.height(); ++y) {
    for (int x = 0; x < image.width(); ++x) {
      // Padded coordinates of the window center are (y + r, x + r).
      double window = 0.0;
      for (int dr = 0; dr < spec.size; ++dr) {
        const auto row = padded.row(y + dr);
        for (int dc = 0; dc < spec.size; ++dc) window += row[x + dc];
      }
      double red = 0.0;
      for (int dr = -hr; dr <= hr; ++dr) {
        const auto row = padded.row(y + r + dr);
        for (int dc = -hc; dc <= hc; ++dc) red += row[x + r + dc];
      }
      out(y, x) = red * inv_red - (window - red) * inv_blue;
    }
  }
  return out;
}

nn::Tensor enhance_stack(const Image& image, const KernelBank& bank) {
  const int channels = 1 + static_cast<int>(bank.size());
  nn::Tensor stack({1, channels, image.height(), image.width()});
  std::copy(image.pixels().begin(), image.pixels().end(), stack.plane(0, 0).begin());
  for (std::size_t k = 0; k < bank.size(); ++k) {
    const Image response = kernel_response(image, bank[k]);
    std::copy(response.pixels().begin(), response.pixels().end(),
              stack.plane(0, static_cast<int>(k) + 1).begin());
  }
  return stack;
}

}  // namespace tirdet::enhance
