#include "tirdet/segnet.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <set>

#include "json.hpp"
#include "tirdet/error.hpp"
#include "tirdet/nn/checkpoint.hpp"

namespace tirdet::segnet {

using nn::ConvGeometry;
using nn::Graph;
using nn::Node;
using nn::Shape;
using nn::PadMode;
using nn::Tensor;

namespace {

constexpr int kHeadSizes[] = {3, 5, 7, 9, 11};
constexpr int kAspectsPerSize = 3;

std::string stage_name(const char* part, int stage, int block) {
  return std::string(part) + std::to_string(stage) + ".res" + std::to_string(block);
}

}  // namespace

std::string to_string(HeadKind kind) { return kind == HeadKind::Fixed ? "fixed" : "free"; }

HeadKind head_kind_from_string(std::string_view name) {
  if (name == "fixed") return HeadKind::Fixed;
  if (name == "free") return HeadKind::Free;
  throw InvalidArgument("head must be \"fixed\" or \"free\", got \"" + std::string(name) + "\"");
}

void NetConfig::validate() const {
  if (widths.size() < 2) throw InvalidArgument("NetConfig: need at least 2 encoder stages");
  if (std::any_of(widths.begin(), widths.end(), [](int w) { return w < 1; })) {
    throw InvalidArgument("NetConfig: widths must be positive");
  }
  if (res_blocks < 1) throw InvalidArgument("NetConfig: res_blocks must be >= 1");
  if (std::any_of(aspp_rates.begin(), aspp_rates.end(), [](int r) { return r < 1; })) {
    throw InvalidArgument("NetConfig: ASPP rates must be >= 1");
  }
  if (std::set<int>(aspp_rates.begin(), aspp_rates.end()).size() < 2 ||
      std::set<int>(aspp_rates.begin(), aspp_rates.end()).size() != aspp_rates.size()) {
    throw InvalidArgument("NetConfig: need at least 2 distinct, non-repeated ASPP rates");
  }
  const int expected = 1 + static_cast<int>(std::size(kHeadSizes)) * kAspectsPerSize;
  if (input_channels != expected) {
    throw InvalidArgument("NetConfig: input_channels must be " + std::to_string(expected) +
                          " (raw image + enhancement bank)");
  }
}

std::string to_json(const NetConfig& c) {
  nlohmann::json j;
  j["input_channels"] = c.input_channels;
  j["widths"] = c.widths;
  j["res_blocks"] = c.res_blocks;
  j["aspp_rates"] = c.aspp_rates;
  j["aspp_global_pool"] = c.aspp_global_pool;
  j["head"] = to_string(c.head);
  j["seed"] = c.seed;
  return j.dump();
}

NetConfig net_config_from_json(std::string_view text) {
  try {
    const auto j = nlohmann::json::parse(text);
    NetConfig c;
    c.input_channels = j.value("input_channels", c.input_channels);
    c.widths = j.value("widths", c.widths);
    c.res_blocks = j.value("res_blocks", c.res_blocks);
    c.aspp_rates = j.value("aspp_rates", c.aspp_rates);
    c.aspp_global_pool = j.value("aspp_global_pool", c.aspp_global_pool);
    c.head = head_kind_from_string(j.value("head", std::string("fixed")));
    c.seed = j.value("seed", c.seed);
    c.validate();
    return c;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("invalid network config: ") + e.what());
  }
}

Network::Network(NetConfig config) : config_(std::move(config)) {
  config_.validate();
  bank_ = enhance::build_default_bank();
  init_parameters();
}

void Network::add_conv(const std::string& name, int out_c, int in_c, int k, bool bias) {
  nn::Parameter w;
  w.name = name + ".weight";
  w.value = Tensor({out_c, in_c, k, k});
  index_[w.name] = params_.size();
  params_.push_back(std::move(w));
  if (bias) {
    nn::Parameter b;
    b.name = name + ".bias";
    b.value = Tensor({1, out_c, 1, 1});
    index_[b.name] = params_.size();
    params_.push_back(std::move(b));
  }
}

void Network::init_parameters() {
  const auto& w = config_.widths;
  if (config_.head == HeadKind::Free) {
    for (int s : kHeadSizes) add_conv("head.k" + std::to_string(s), kAspectsPerSize, 1, s, false);
  }
  auto add_res = [&](const std::string& prefix, int in_c, int out_c) {
    add_conv(prefix + ".conv1", out_c, in_c, 3, true);
    add_conv(prefix + ".conv2", out_c, out_c, 3, true);
    if (in_c != out_c) add_conv(prefix + ".proj", out_c, in_c, 1, true);
  };
  int channels = config_.input_channels;
  for (int i = 0; i < config_.stages(); ++i) {
    for (int j = 0; j < config_.res_blocks; ++j) {
      add_res(stage_name("enc", i, j), channels, w[i]);
      channels = w[i];
    }
    add_conv("enc" + std::to_string(i) + ".down", w[i], w[i], 3, true);
  }
  const int bottleneck = w.back();
  for (int r : config_.aspp_rates) add_conv("aspp.rate" + std::to_string(r), bottleneck, bottleneck, 3, true);
  int branches = static_cast<int>(config_.aspp_rates.size());
  if (config_.aspp_global_pool) {
    add_conv("aspp.pool", bottleneck, bottleneck, 1, true);
    ++branches;
  }
  add_conv("aspp.fuse", bottleneck, bottleneck * branches, 1, true);
  channels = bottleneck;
  for (int i = config_.stages() - 1; i >= 0; --i) {
    channels += w[i];
    for (int j = 0; j < config_.res_blocks; ++j) {
      add_res(stage_name("dec", i, j), channels, w[i]);
      channels = w[i];
    }
  }
  add_conv("head.out", 2, w.front(), 1, true);

  // He-uniform weights, zero biases, drawn in declaration order.
  std::mt19937_64 rng(config_.seed);
  for (auto& p : params_) {
    const Shape& s = p.value.shape();
    if (p.name.ends_with(".bias")) continue;
    const double fan_in = static_cast<double>(s.c) * s.h * s.w;
    std::uniform_real_distribution<double> dist(-std::sqrt(6.0 / fan_in), std::sqrt(6.0 / fan_in));
    for (double& v : p.value.values()) v = dist(rng);
  }
}

nn::Parameter& Network::parameter(const std::string& name) {
  const auto it = index_.find(name);
  if (it == index_.end()) throw InvalidArgument("no parameter named " + name);
  return params_[it->second];
}

const nn::Parameter& Network::parameter(const std::string& name) const {
  const auto it = index_.find(name);
  if (it == index_.end()) throw InvalidArgument("no parameter named " + name);
  return params_[it->second];
}

bool Network::has_parameter(const std::string& name) const { return index_.contains(name); }

std::size_t Network::trainable_parameter_count() const noexcept {
  std::size_t n = 0;
  for (const auto& p : params_) {
    if (p.trainable) n += p.value.size();
  }
  return n;
}

Tensor Network::head_input(const Image& image) const {
  if (config_.head == HeadKind::Fixed) return enhance::enhance_stack(image, bank_);
  Tensor t({1, 1, image.height(), image.width()});
  std::copy(image.pixels().begin(), image.pixels().end(), t.values().begin());
  return t;
}

Node Network::build(Graph& g, Node input, const std::function<Node(std::size_t)>& resolve) const {
  auto conv = [&](Node x, const std::string& name, ConvGeometry geo) {
    const Node w = resolve(index_.at(name + ".weight"));
    const auto bias_it = index_.find(name + ".bias");
    std::optional<Node> b;
    if (bias_it != index_.end()) b = resolve(bias_it->second);
    return g.conv2d(x, w, b, geo);
  };
  const ConvGeometry same3{1, 1, 1, PadMode::Zero};
  auto res_block = [&](Node x, const std::string& prefix) {
    Node h = g.relu(conv(x, prefix + ".conv1", same3));
    h = conv(h, prefix + ".conv2", same3);
    const Node skip = index_.contains(prefix + ".proj.weight") ? conv(x, prefix + ".proj", {}) : x;
    return g.relu(g.add(h, skip));
  };

  Node x = input;
  if (config_.head == HeadKind::Free) {
    std::vector<Node> parts{input};
    for (int s : kHeadSizes) {
      parts.push_back(conv(input, "head.k" + std::to_string(s), {1, 1, s / 2, PadMode::Replicate}));
    }
    x = g.concat_channels(parts);
  }

  std::vector<Node> skips;
  for (int i = 0; i < config_.stages(); ++i) {
    for (int j = 0; j < config_.res_blocks; ++j) x = res_block(x, stage_name("enc", i, j));
    skips.push_back(x);
    x = g.relu(conv(x, "enc" + std::to_string(i) + ".down", {2, 1, 1, PadMode::Zero}));
  }

  std::vector<Node> branches;
  for (int r : config_.aspp_rates) {
    branches.push_back(g.relu(conv(x, "aspp.rate" + std::to_string(r), {1, r, r, PadMode::Zero})));
  }
  if (config_.aspp_global_pool) {
    branches.push_back(g.relu(conv(g.avg_pool_global(x), "aspp.pool", {})));
  }
  x = g.relu(conv(g.concat_channels(branches), "aspp.fuse", {}));

  for (int i = config_.stages() - 1; i >= 0; --i) {
    x = g.concat_channels({g.upsample_nearest(x, 2), skips[i]});
    for (int j = 0; j < config_.res_blocks; ++j) x = res_block(x, stage_name("dec", i, j));
  }
  return conv(x, "head.out", {});
}

Node Network::record(Graph& g, Node input, bool trainable) {
  return build(g, input, [&](std::size_t idx) {
    return trainable ? g.parameter(params_[idx]) : g.constant(params_[idx].value);
  });
}

Tensor Network::logits(const Tensor& head_inputs) const {
  const Shape& s = head_inputs.shape();
  check_input_size(config_, s.w, s.h);
  Graph g;
  const Node in = g.constant(head_inputs);
  const Node out = build(g, in, [&](std::size_t idx) { return g.constant(params_[idx].value); });
  return g.value(out);
}

void Network::load_parameters(std::span<const nn::Parameter> params) {
  if (params.size() != params_.size()) {
    throw InvalidArgument("checkpoint has " + std::to_string(params.size()) +
                          " parameters, network expects " + std::to_string(params_.size()));
  }
  for (const auto& p : params) {
    auto& dst = parameter(p.name);
    nn::require_same_shape(p.value.shape(), dst.value.shape(), p.name.c_str());
    dst.value = p.value;
  }
}

Network build_network(const NetConfig& config) { return Network(config); }

void check_input_size(const NetConfig& config, int width, int height) {
  const int m = config.size_multiple();
  if (width < m || height < m || width % m != 0 || height % m != 0) {
    throw ShapeError("input " + std::to_string(width) + "x" + std::to_string(height) +
                     " must have extents that are positive multiples of " + std::to_string(m));
  }
}

LikelihoodMap forward(const Network& net, const Image& image) {
  check_input_size(net.config(), image.width(), image.height());
  const Tensor logits = net.logits(net.head_input(image));
  nn::require_finite(logits, "network logits");
  const nn::Likelihoods probs = nn::softmax2(logits);
  const auto pt = probs.target.values();
  const auto pb = probs.background.values();
  return {Image(image.width(), image.height(), std::vector<double>(pt.begin(), pt.end())),
          Image(image.width(), image.height(), std::vector<double>(pb.begin(), pb.end()))};
}

Mask binarize(const LikelihoodMap& map) {
  if (!same_size(map.p_t, map.p_b)) throw ShapeError("binarize: likelihood maps differ in size");
  std::vector<std::uint8_t> labels(map.p_t.size());
  const auto pt = map.p_t.pixels();
  const auto pb = map.p_b.pixels();
  for (std::size_t i = 0; i < labels.size(); ++i) labels[i] = pb[i] < pt[i] ? 1 : 0;
  return Mask(map.p_t.width(), map.p_t.height(), std::move(labels));
}

Inference infer(const Network& net, const Image& image) {
  Inference out;
  out.map = forward(net, image);
  out.mask = binarize(out.map);
  out.overlay = image;
  const auto labels = out.mask.labels();
  auto px = out.overlay.pixels();
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] != 0) px[i] = 1.0;
  }
  return out;
}

void save_network(const Network& net, const std::filesystem::path& dir) {
  nn::write_checkpoint(dir, net.parameters(), to_json(net.config()));
}

Network load_network(const std::filesystem::path& dir) {
  const nn::CheckpointData data = nn::read_checkpoint(dir);
  Network net(net_config_from_json(data.hyperparameters_json));
  net.load_parameters(data.parameters);
  return net;
}

}  // namespace tirdet::segnet
