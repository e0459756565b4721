#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "tirdet/image.hpp"

namespace tirdet::synth {

/// Parameters of one synthetic maritime TIR scene. Intensities are in [0,1].
struct SceneParams {
  int width = 64;
  int height = 64;
  int n_targets = 3;
  /// Upper bound on the half-peak extent of a target along each axis, [1,7].
  int target_extent = 3;
  double target_snr = 4.0;
  double clutter_amplitude = 0.04;
  double clutter_wavelength = 12.0;
  double row_noise_sigma = 0.01;
  double pixel_noise_sigma = 0.03;
  double horizon_gradient = 0.15;
  double background_level = 0.3;
  std::uint64_t seed = 0;

  void validate() const;
};

/// (mean target - mean background) / stddev(background), population stddev.
/// Throws InvalidArgument if either class is empty or the background is
/// constant.
double snr(const LabeledImage& item);

/// Background = horizon gradient + sinusoidal swell + AR(1) row noise + pixel
/// noise, clamped to [0,1]. Targets are non-overlapping axis-aligned Gaussian
/// blobs whose common amplitude is solved so that snr() matches target_snr.
/// The mask marks pixels where a blob exceeds half its peak.
LabeledImage gen_scene(const SceneParams& params);

struct DatasetEntry {
  SceneParams params;  // per-item seed and jittered target_snr
  double measured_snr = 0.0;
  std::string image_path;  // relative to the manifest directory
  std::string mask_path;
};

struct Dataset {
  std::vector<LabeledImage> items;
  std::vector<DatasetEntry> manifest;
  std::uint64_t master_seed = 0;
};

/// Per-item seed: splitmix64 of (master + index * golden ratio); distinct for
/// distinct indices.
std::uint64_t derive_seed(std::uint64_t master_seed, std::uint64_t index) noexcept;

/// n scenes with seeds from derive_seed and target_snr jittered uniformly
/// within +-30% of base.target_snr.
Dataset gen_dataset(const SceneParams& base, int n, std::uint64_t seed);

/// Writes <dir>/images/NNNN.pgm (16-bit), <dir>/masks/NNNN.pgm and
/// <dir>/manifest.json.
void write_dataset(Dataset& dataset, const std::filesystem::path& dir);

struct LoadedDataset {
  std::vector<LabeledImage> items;
  std::vector<std::string> names;  // image file stem per item
};

/// Reads a dataset manifest: either a JSON array of {"image","mask"} objects
/// or an object with such an "items" array. Relative paths resolve against
/// the manifest's directory.
LoadedDataset load_dataset(const std::filesystem::path& manifest);

}  // namespace tirdet::synth
