#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "tirdet/enhance.hpp"
#include "tirdet/image.hpp"
#include "tirdet/nn/graph.hpp"

namespace tirdet::segnet {

enum class HeadKind {
  Fixed,  // enhancement bank with frozen center-surround weights
  Free,   // trainable convolutions with the same kernel sizes and count
};

std::string to_string(HeadKind kind);
HeadKind head_kind_from_string(std::string_view name);

struct NetConfig {
  int input_channels = 16;
  std::vector<int> widths{16, 32, 64};
  int res_blocks = 1;
  std::vector<int> aspp_rates{1, 2, 4, 8};
  bool aspp_global_pool = true;
  HeadKind head = HeadKind::Fixed;
  std::uint64_t seed = 7;

  int stages() const noexcept { return static_cast<int>(widths.size()); }
  /// Input extents must be a multiple of this (one stride-2 conv per stage).
  int size_multiple() const noexcept { return 1 << stages(); }
  void validate() const;
};

std::string to_json(const NetConfig& config);
NetConfig net_config_from_json(std::string_view json);

/// Per-pixel target and background likelihoods; p_t + p_b = 1.
struct LikelihoodMap {
  Image p_t;
  Image p_b;
};

/// Encoder-decoder segmentation network:
///   head (fixed bank or free convs)
///   -> per stage: residual blocks -> stride-2 conv      (encoder)
///   -> ASPP: dilated 3x3 per rate + global pool branch, concat, 1x1 fuse
///   -> per stage: upsample x2 -> concat skip -> residual blocks (decoder)
///   -> 1x1 conv to 2 logits (channel 0 background, channel 1 target)
class Network {
 public:
  explicit Network(NetConfig config);

  const NetConfig& config() const noexcept { return config_; }
  const enhance::KernelBank& bank() const noexcept { return bank_; }

  std::span<nn::Parameter> parameters() noexcept { return params_; }
  std::span<const nn::Parameter> parameters() const noexcept { return params_; }
  nn::Parameter& parameter(const std::string& name);
  const nn::Parameter& parameter(const std::string& name) const;
  bool has_parameter(const std::string& name) const;

  std::size_t trainable_parameter_count() const noexcept;

  /// Network input for one image: the enhancement stack (fixed head) or the
  /// raw image (free head), as a 1 x C x H x W tensor.
  nn::Tensor head_input(const Image& image) const;

  /// Records the full forward pass on `g`. With `trainable` set, parameters
  /// enter the graph as gradient-tracked leaves; otherwise as constants.
  nn::Node record(nn::Graph& g, nn::Node input, bool trainable);

  /// Logits for a batch of head inputs, without gradient tracking.
  nn::Tensor logits(const nn::Tensor& head_inputs) const;

  /// Replaces parameter values from a checkpoint; names and shapes must match.
  void load_parameters(std::span<const nn::Parameter> params);

 private:
  void add_conv(const std::string& name, int out_c, int in_c, int k, bool bias);
  void init_parameters();
  nn::Node build(nn::Graph& g, nn::Node input,
                 const std::function<nn::Node(std::size_t)>& resolve) const;

  NetConfig config_;
  enhance::KernelBank bank_;
  std::vector<nn::Parameter> params_;
  std::map<std::string, std::size_t> index_;
};

Network build_network(const NetConfig& config);

/// Throws ShapeError unless both extents are multiples of size_multiple().
void check_input_size(const NetConfig& config, int width, int height);

LikelihoodMap forward(const Network& net, const Image& image);

/// 1 where p_b < p_t, else 0 (ties go to background).
Mask binarize(const LikelihoodMap& map);

struct Inference {
  LikelihoodMap map;
  Mask mask;
  Image overlay;  // input with predicted target pixels set to 1
};

Inference infer(const Network& net, const Image& image);

void save_network(const Network& net, const std::filesystem::path& dir);
Network load_network(const std::filesystem::path& dir);

}  // namespace tirdet::segnet
