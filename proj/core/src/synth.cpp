#include "tirdet/synth.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <numbers>
#include <optional>
#include <random>
#include <sstream>

#include "json.hpp"
#include "tirdet/error.hpp"
#include "tirdet/pgm.hpp"

namespace tirdet::synth {

using nlohmann::json;

void SceneParams::validate() const {
  if (width < 8 || height < 8) throw InvalidArgument("scene must be at least 8x8");
  if (n_targets < 0) throw InvalidArgument("n_targets must be >= 0");
  if (target_extent < 1 || target_extent > 7) throw InvalidArgument("target_extent must be in [1,7]");
  if (!(target_snr > 0.0)) throw InvalidArgument("target_snr must be positive");
  if (clutter_amplitude < 0.0 || row_noise_sigma < 0.0 || pixel_noise_sigma < 0.0) {
    throw InvalidArgument("clutter and noise amplitudes must be non-negative");
  }
  if (!(clutter_wavelength > 0.0)) throw InvalidArgument("clutter_wavelength must be positive");
  for (double v : {target_snr, clutter_amplitude, clutter_wavelength, row_noise_sigma,
                   pixel_noise_sigma, horizon_gradient, background_level}) {
    if (!std::isfinite(v)) throw InvalidArgument("scene parameters must be finite");
  }
}

double snr(const LabeledImage& item) {
  item.validate();
  double st = 0.0;
  double sb = 0.0;
  std::size_t nt = 0;
  std::size_t nb = 0;
  const auto px = item.image.pixels();
  const auto lb = item.mask.labels();
  for (std::size_t i = 0; i < px.size(); ++i) {
    if (lb[i] != 0) {
      st += px[i];
      ++nt;
    } else {
      sb += px[i];
      ++nb;
    }
  }
  if (nt == 0 || nb == 0) throw InvalidArgument("snr: need target and background pixels");
  const double mt = st / static_cast<double>(nt);
  const double mb = sb / static_cast<double>(nb);
  double var = 0.0;
  for (std::size_t i = 0; i < px.size(); ++i) {
    if (lb[i] == 0) var += (px[i] - mb) * (px[i] - mb);
  }
  const double sd = std::sqrt(var / static_cast<double>(nb));
  if (!(sd > 0.0)) throw InvalidArgument("snr: background is constant");
  return (mt - mb) / sd;
}

namespace {

struct Blob {
  int cy = 0;
  int cx = 0;
  double sigma_y = 1.0;
  double sigma_x = 1.0;
};

// Half-peak radius for an extent e: odd e covers exactly e pixels per axis,
// even e covers e + 1.
double half_peak_radius(int extent) { return 0.5 * extent + 0.25; }

const double kSqrt2Ln2 = std::sqrt(2.0 * std::numbers::ln2);

Image make_background(const SceneParams& p, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::normal_distribution<double> gauss(0.0, 1.0);
  const double phase = 2.0 * std::numbers::pi * unit(rng);
  const double theta = (unit(rng) - 0.5) * std::numbers::pi / 3.0;
  const double k = 2.0 * std::numbers::pi / p.clutter_wavelength;

  Image bg(p.width, p.height);
  constexpr double rho = 0.8;
  double row_offset = 0.0;
  for (int r = 0; r < p.height; ++r) {
    const double innovation = gauss(rng);
    row_offset = r == 0 ? p.row_noise_sigma * innovation
                        : rho * row_offset + std::sqrt(1.0 - rho * rho) * p.row_noise_sigma * innovation;
    const double horizon = p.height > 1 ? p.horizon_gradient * r / (p.height - 1) : 0.0;
    for (int c = 0; c < p.width; ++c) {
      const double wave =
          p.clutter_amplitude * std::sin(k * (r * std::cos(theta) + c * std::sin(theta)) + phase);
      bg(r, c) = p.background_level + horizon + wave + row_offset;
    }
  }
  if (p.pixel_noise_sigma > 0.0) {
    for (double& v : bg.pixels()) v += p.pixel_noise_sigma * gauss(rng);
  }
  for (double& v : bg.pixels()) v = std::clamp(v, 0.0, 1.0);
  return bg;
}

// One attempt at a full layout; empty when some blob found no free spot.
std::optional<std::vector<Blob>> try_layout(const SceneParams& p, std::mt19937_64& rng) {
  std::vector<Blob> blobs;
  const int lo_extent = (p.target_extent + 1) / 2;
  std::uniform_int_distribution<int> extent_dist(lo_extent, p.target_extent);
  for (int t = 0; t < p.n_targets; ++t) {
    const int ey = extent_dist(rng);
    const int ex = extent_dist(rng);
    Blob b;
    b.sigma_y = half_peak_radius(ey) / kSqrt2Ln2;
    b.sigma_x = half_peak_radius(ex) / kSqrt2Ln2;
    const int my = static_cast<int>(std::ceil(half_peak_radius(ey))) + 1;
    const int mx = static_cast<int>(std::ceil(half_peak_radius(ex))) + 1;
    if (2 * my >= p.height || 2 * mx >= p.width) {
      throw InvalidArgument("scene too small for target extent");
    }
    std::uniform_int_distribution<int> ydist(my, p.height - 1 - my);
    std::uniform_int_distribution<int> xdist(mx, p.width - 1 - mx);
    bool placed = false;
    for (int attempt = 0; attempt < 100 && !placed; ++attempt) {
      b.cy = ydist(rng);
      b.cx = xdist(rng);
      placed = std::none_of(blobs.begin(), blobs.end(), [&](const Blob& o) {
        // Keep 2-sigma footprints apart so blobs and their masks never touch.
        const double gy = 2.0 * (b.sigma_y + o.sigma_y) + 2.0;
        const double gx = 2.0 * (b.sigma_x + o.sigma_x) + 2.0;
        return std::abs(b.cy - o.cy) < gy && std::abs(b.cx - o.cx) < gx;
      });
    }
    if (!placed) return std::nullopt;
    blobs.push_back(b);
  }
  return blobs;
}

// Early blobs can block every spot for later ones, so a failed layout is
// redrawn from scratch.
std::vector<Blob> place_blobs(const SceneParams& p, std::mt19937_64& rng) {
  for (int layout = 0; layout < 100; ++layout) {
    if (auto blobs = try_layout(p, rng)) return *blobs;
  }
  throw InvalidArgument("gen_scene: cannot place " + std::to_string(p.n_targets) +
                        " targets without overlap");
}

}  // namespace

LabeledImage gen_scene(const SceneParams& p) {
  p.validate();
  std::mt19937_64 rng(p.seed);
  const Image background = make_background(p, rng);
  const std::vector<Blob> blobs = place_blobs(p, rng);

  Image profile(p.width, p.height, 0.0);
  Mask mask(p.width, p.height, 0);
  for (const Blob& b : blobs) {
    const int ry = static_cast<int>(std::ceil(4.0 * b.sigma_y));
    const int rx = static_cast<int>(std::ceil(4.0 * b.sigma_x));
    for (int r = std::max(0, b.cy - ry); r <= std::min(p.height - 1, b.cy + ry); ++r) {
      for (int c = std::max(0, b.cx - rx); c <= std::min(p.width - 1, b.cx + rx); ++c) {
        const double dy = (r - b.cy) / b.sigma_y;
        const double dx = (c - b.cx) / b.sigma_x;
        const double g = std::exp(-0.5 * (dy * dy + dx * dx));
        profile(r, c) += g;
        if (g > 0.5) mask(r, c) = 1;
      }
    }
  }

  if (blobs.empty()) return {background, mask};

  auto compose_at = [&](double amplitude) {
    Image img = background;
    auto dst = img.pixels();
    const auto prof = profile.pixels();
    for (std::size_t i = 0; i < dst.size(); ++i) {
      dst[i] = std::clamp(dst[i] + amplitude * prof[i], 0.0, 1.0);
    }
    return LabeledImage{std::move(img), mask};
  };

  // snr() is continuous in the amplitude and starts near zero, so bisection
  // on [0, hi] converges whenever the target is reachable before clipping.
  double lo = 0.0;
  double hi = 1.0;
  if (snr(compose_at(hi)) < p.target_snr) {
    throw InvalidArgument("gen_scene: target_snr " + std::to_string(p.target_snr) +
                          " unreachable within the [0,1] intensity range");
  }
  for (int it = 0; it < 60; ++it) {
    const double mid = 0.5 * (lo + hi);
    (snr(compose_at(mid)) < p.target_snr ? lo : hi) = mid;
  }
  return compose_at(hi);
}

std::uint64_t derive_seed(std::uint64_t master_seed, std::uint64_t index) noexcept {
  std::uint64_t z = master_seed + (index + 1) * 0x9E3779B97F4A7C15ULL;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

Dataset gen_dataset(const SceneParams& base, int n, std::uint64_t seed) {
  if (n < 1) throw InvalidArgument("gen_dataset: n must be >= 1");
  base.validate();
  Dataset ds;
  ds.master_seed = seed;
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> jitter(0.7, 1.3);
  for (int i = 0; i < n; ++i) {
    SceneParams p = base;
    p.seed = derive_seed(seed, static_cast<std::uint64_t>(i));
    p.target_snr = base.target_snr * jitter(rng);
    LabeledImage item = gen_scene(p);
    DatasetEntry entry;
    entry.params = p;
    entry.measured_snr = item.mask.count() > 0 ? snr(item) : 0.0;
    ds.items.push_back(std::move(item));
    ds.manifest.push_back(entry);
  }
  return ds;
}

namespace {

json params_json(const SceneParams& p) {
  return {{"width", p.width},
          {"height", p.height},
          {"n_targets", p.n_targets},
          {"target_extent", p.target_extent},
          {"target_snr", p.target_snr},
          {"clutter_amplitude", p.clutter_amplitude},
          {"clutter_wavelength", p.clutter_wavelength},
          {"row_noise_sigma", p.row_noise_sigma},
          {"pixel_noise_sigma", p.pixel_noise_sigma},
          {"horizon_gradient", p.horizon_gradient},
          {"background_level", p.background_level},
          {"seed", p.seed}};
}

std::string item_name(std::size_t i) {
  std::ostringstream ss;
  ss << std::setw(4) << std::setfill('0') << i;
  return ss.str();
}

}  // namespace

void write_dataset(Dataset& ds, const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir / "images", ec);
  std::filesystem::create_directories(dir / "masks", ec);
  if (ec) throw IoError("cannot create dataset directory " + dir.string());
  json items = json::array();
  for (std::size_t i = 0; i < ds.items.size(); ++i) {
    auto& entry = ds.manifest[i];
    entry.image_path = "images/" + item_name(i) + ".pgm";
    entry.mask_path = "masks/" + item_name(i) + ".pgm";
    write_pgm(ds.items[i].image, dir / entry.image_path, 65535);
    write_mask(ds.items[i].mask, dir / entry.mask_path);
    items.push_back({{"image", entry.image_path},
                     {"mask", entry.mask_path},
                     {"seed", entry.params.seed},
                     {"target_snr", entry.params.target_snr},
                     {"measured_snr", entry.measured_snr},
                     {"params", params_json(entry.params)}});
  }
  json manifest{{"version", 1}, {"master_seed", ds.master_seed}, {"items", std::move(items)}};
  std::ofstream out(dir / "manifest.json", std::ios::trunc);
  if (!out) throw IoError("cannot write " + (dir / "manifest.json").string());
  out << manifest.dump(2) << "\n";
  if (!out) throw IoError("write failed: " + (dir / "manifest.json").string());
}

LoadedDataset load_dataset(const std::filesystem::path& manifest_path) {
  std::ifstream in(manifest_path);
  if (!in) throw IoError("cannot open dataset manifest " + manifest_path.string());
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::exception& e) {
    throw ConfigError("dataset manifest is not valid JSON: " + std::string(e.what()));
  }
  const json* items = &doc;
  if (doc.is_object()) {
    if (!doc.contains("items")) throw ConfigError("dataset manifest has no \"items\" array");
    items = &doc["items"];
  }
  if (!items->is_array()) throw ConfigError("dataset manifest items must be an array");
  const auto base = manifest_path.parent_path();
  LoadedDataset out;
  for (const auto& entry : *items) {
    if (!entry.is_object() || !entry.contains("image") || !entry.contains("mask")) {
      throw ConfigError("dataset entries need \"image\" and \"mask\" paths");
    }
    const std::filesystem::path image = base / entry["image"].get<std::string>();
    const std::filesystem::path mask = base / entry["mask"].get<std::string>();
    LabeledImage item{read_pgm(image), read_mask(mask)};
    item.validate();
    out.items.push_back(std::move(item));
    out.names.push_back(image.stem().string());
  }
  return out;
}

}  // namespace tirdet::synth
