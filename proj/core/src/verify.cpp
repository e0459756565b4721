#include "tirdet/verify.hpp"

#include <cmath>
#include <algorithm>
#include <functional>
#include <limits>
#include <numeric>
#include <random>

#include "tirdet/nn/gradcheck.hpp"
#include "tirdet/nn/layers.hpp"

namespace tirdet::verify {

using nn::ConvGeometry;
using nn::Shape;
using nn::Tensor;

namespace {

class Sampler {
 public:
  explicit Sampler(std::uint64_t seed) : rng_(seed) {}

  int integer(int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng_); }
  double uniform(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng_); }

  Tensor tensor(Shape s, double lo = -1.0, double hi = 1.0) {
    Tensor t(s);
    for (double& v : t.values()) v = uniform(lo, hi);
    return t;
  }

  // Values bounded away from zero so a +-1e-3 probe never crosses a ReLU kink.
  Tensor off_zero(Shape s) {
    Tensor t(s);
    for (double& v : t.values()) {
      const double mag = uniform(0.05, 1.0);
      v = uniform(0.0, 1.0) < 0.5 ? -mag : mag;
    }
    return t;
  }

  Tensor labels(Shape s) {
    Tensor t(s);
    for (double& v : t.values()) v = uniform(0.0, 1.0) < 0.3 ? 1.0 : 0.0;
    return t;
  }

  std::mt19937_64& rng() { return rng_; }

 private:
  std::mt19937_64 rng_;
};

double dot(const Tensor& a, const Tensor& b) {
  return std::inner_product(a.values().begin(), a.values().end(), b.values().begin(), 0.0);
}

CheckOutcome run(const std::string& name, const Shape& s, const nn::DifferentiableFn& fn,
                 const Tensor& x) {
  const auto r = nn::grad_check(fn, x);
  return {name, s.str(), r.max_rel_error, kLayerTolerance, r.checked};
}

ConvGeometry random_geometry(Sampler& rnd) {
  static constexpr int strides[] = {1, 2};
  static constexpr int dilations[] = {1, 2, 4};
  static constexpr int pads[] = {0, 1, 2};
  ConvGeometry g;
  g.stride = strides[rnd.integer(0, 1)];
  g.dilation = dilations[rnd.integer(0, 2)];
  g.padding = pads[rnd.integer(0, 2)];
  g.pad_mode = rnd.integer(0, 3) == 0 ? nn::PadMode::Replicate : nn::PadMode::Zero;
  return g;
}

}  // namespace

std::vector<CheckOutcome> layer_suite(std::uint64_t seed, int shapes_per_layer) {
  Sampler rnd(seed);
  std::vector<CheckOutcome> out;

  for (int k = 0; k < shapes_per_layer; ++k) {
    const ConvGeometry g = random_geometry(rnd);
    const int kh = 2 * rnd.integer(0, 1) + 1;
    const Shape ws{rnd.integer(1, 3), rnd.integer(1, 3), kh, kh};
    const int min_extent = g.dilation * (kh - 1) + 1;
    const Shape xs{rnd.integer(1, 2), ws.c, rnd.integer(min_extent, min_extent + 5),
                   rnd.integer(min_extent, min_extent + 5)};
    const Tensor x = rnd.tensor(xs);
    const Tensor w = rnd.tensor(ws);
    const Tensor b = rnd.tensor({1, ws.n, 1, 1});
    const Tensor r = rnd.tensor(nn::conv2d_output_shape(xs, ws, g));
    const std::string tag = " s" + std::to_string(g.stride) + "d" + std::to_string(g.dilation) +
                            "p" + std::to_string(g.padding) +
                            (g.pad_mode == nn::PadMode::Replicate ? "r" : "z");

    out.push_back(run("conv2d/input" + tag, xs, [&](const Tensor& v, Tensor* grad) {
      if (grad) *grad = nn::conv2d_backward(v, w, g, r).input;
      return dot(nn::conv2d(v, w, &b, g), r);
    }, x));
    out.push_back(run("conv2d/weight" + tag, ws, [&](const Tensor& v, Tensor* grad) {
      if (grad) *grad = nn::conv2d_backward(x, v, g, r).weight;
      return dot(nn::conv2d(x, v, &b, g), r);
    }, w));
    out.push_back(run("conv2d/bias" + tag, b.shape(), [&](const Tensor& v, Tensor* grad) {
      if (grad) *grad = nn::conv2d_backward(x, w, g, r).bias;
      return dot(nn::conv2d(x, w, &v, g), r);
    }, b));
  }

  for (int k = 0; k < shapes_per_layer; ++k) {
    const Shape s{rnd.integer(1, 2), rnd.integer(1, 4), rnd.integer(2, 6), rnd.integer(2, 6)};
    const Tensor x = rnd.off_zero(s);
    const Tensor r = rnd.tensor(s);
    out.push_back(run("relu", s, [&](const Tensor& v, Tensor* grad) {
      if (grad) *grad = nn::relu_backward(v, r);
      return dot(nn::relu(v), r);
    }, x));

    const Tensor other = rnd.tensor(s);
    out.push_back(run("add", s, [&](const Tensor& v, Tensor* grad) {
      if (grad) *grad = r;
      return dot(nn::add(v, other), r);
    }, x));

    const Shape s2{s.n, rnd.integer(1, 3), s.h, s.w};
    const Tensor tail = rnd.tensor(s2);
    const Tensor rc = rnd.tensor({s.n, s.c + s2.c, s.h, s.w});
    out.push_back(run("concat_channels", s, [&](const Tensor& v, Tensor* grad) {
      const Tensor parts[] = {v, tail};
      if (grad) {
        const int chans[] = {s.c, s2.c};
        *grad = nn::split_channels(rc, chans)[0];
      }
      return dot(nn::concat_channels(parts), rc);
    }, x));

    out.push_back(run("avg_pool_global", s, [&](const Tensor& v, Tensor* grad) {
      if (grad) *grad = nn::avg_pool_global_backward(r);
      return dot(nn::avg_pool_global(v), r);
    }, x));

    const int f = rnd.integer(1, 3);
    const Tensor ru = rnd.tensor({s.n, s.c, s.h * f, s.w * f});
    out.push_back(run("upsample_nearest x" + std::to_string(f), s,
                      [&](const Tensor& v, Tensor* grad) {
                        if (grad) *grad = nn::upsample_nearest_backward(ru, f);
                        return dot(nn::upsample_nearest(v, f), ru);
                      },
                      x));
  }

  for (int k = 0; k < shapes_per_layer; ++k) {
    const Shape ls{rnd.integer(1, 2), 2, rnd.integer(2, 6), rnd.integer(2, 6)};
    const Shape ps{ls.n, 1, ls.h, ls.w};
    const Tensor z = rnd.tensor(ls, -3.0, 3.0);
    const Tensor rt = rnd.tensor(ps);
    const Tensor rb = rnd.tensor(ps);
    out.push_back(run("softmax2", ls, [&](const Tensor& v, Tensor* grad) {
      const auto p = nn::softmax2(v);
      if (grad) *grad = nn::softmax2_backward(p, rt, rb);
      return dot(p.target, rt) + dot(p.background, rb);
    }, z));

    const Tensor y = rnd.labels(ps);
    const double w = rnd.uniform(0.5, 5.0);
    const Tensor pt = rnd.tensor(ps, 0.1, 0.9);
    Tensor pb(ps);
    for (std::size_t i = 0; i < pb.size(); ++i) pb.values()[i] = 1.0 - pt.values()[i];
    out.push_back(run("bce_loss/target", ps, [&](const Tensor& v, Tensor* grad) {
      const nn::Likelihoods p{v, pb};
      if (grad) *grad = nn::bce_loss_backward(p, y, w).target;
      return nn::bce_loss(p, y, w);
    }, pt));
    out.push_back(run("bce_loss/background", ps, [&](const Tensor& v, Tensor* grad) {
      const nn::Likelihoods p{pt, v};
      if (grad) *grad = nn::bce_loss_backward(p, y, w).background;
      return nn::bce_loss(p, y, w);
    }, pb));

    out.push_back(run("softmax_bce", ls, [&](const Tensor& v, Tensor* grad) {
      return nn::softmax_bce(v, y, w, grad);
    }, z));
  }

  // conv2d -> relu -> softmax+bce through the tape.
  for (int k = 0; k < shapes_per_layer; ++k) {
    const Shape xs{1, 4, 8, 8};
    const Tensor w = rnd.tensor({2, 4, 3, 3}, -0.5, 0.5);
    const Tensor b = rnd.tensor({1, 2, 1, 1}, -0.1, 0.1);
    const Tensor y = rnd.labels({1, 1, 8, 8});
    const ConvGeometry g{1, 1, 1, nn::PadMode::Zero};
    Tensor x;
    // Resample until no pre-activation sits within reach of the probe step.
    for (;;) {
      x = rnd.tensor(xs);
      const Tensor pre = nn::conv2d(x, w, &b, g);
      bool clear = true;
      for (double v : pre.values()) clear = clear && std::abs(v) > 0.02;
      if (clear) break;
    }
    out.push_back(run("composite conv2d>relu>bce", xs, [&](const Tensor& v, Tensor* grad) {
      nn::Graph graph;
      // constant() does not track gradients, so the input goes in as a
      // trainable parameter.
      nn::Parameter p{"x", v, {}, true};
      const nn::Node px = graph.parameter(p);
      const nn::Node h = graph.relu(graph.conv2d(px, graph.constant(w), graph.constant(b), g));
      const nn::Node loss = graph.softmax_bce(h, y, 1.0);
      if (grad) {
        graph.backward(loss);
        *grad = graph.grad(px);
      }
      return graph.value(loss).values()[0];
    }, x));
  }
  return out;
}

CheckOutcome network_check(const segnet::NetConfig& config, int size, std::size_t n_params,
                           std::uint64_t seed) {
  Sampler rnd(seed);
  segnet::Network net(config);
  // Non-zero biases so no unit starts exactly at a ReLU kink.
  for (auto& p : net.parameters()) {
    if (p.name.ends_with(".bias")) {
      for (double& v : p.value.values()) v = rnd.uniform(-0.05, 0.05);
    }
  }
  // The fixed bank has no parameters and needs images at least as large as
  // its widest kernel, so its 16-channel output is stood in for by noise.
  Tensor input;
  if (config.head == segnet::HeadKind::Fixed) {
    input = rnd.tensor({1, config.input_channels, size, size});
  } else {
    Image image(size, size);
    for (double& v : image.pixels()) v = rnd.uniform(0.0, 1.0);
    input = net.head_input(image);
  }
  const Tensor labels = rnd.labels({1, 1, size, size});

  for (auto& p : net.parameters()) p.zero_grad();
  nn::Graph g;
  const nn::Node in = g.constant(input);
  const nn::Node loss = g.softmax_bce(net.record(g, in, true), labels, 1.0);
  g.backward(loss);

  std::vector<std::pair<std::size_t, std::size_t>> all;
  auto params = net.parameters();
  for (std::size_t i = 0; i < params.size(); ++i) {
    for (std::size_t j = 0; j < params[i].value.size(); ++j) all.emplace_back(i, j);
  }
  std::shuffle(all.begin(), all.end(), rnd.rng());

  // Loss plus the sign pattern of every intermediate value. A probe whose
  // pattern differs from the unperturbed one has crossed a ReLU kink, where
  // central differences are meaningless; such coordinates are skipped.
  auto probe = [&](std::vector<bool>& pattern) {
    nn::Graph pg;
    const nn::Node out = net.record(pg, pg.constant(input), false);
    pattern.clear();
    for (int i = 0; i < static_cast<int>(pg.size()); ++i) {
      for (double v : pg.value(nn::Node{i}).values()) pattern.push_back(v > 0.0);
    }
    return nn::softmax_bce(pg.value(out), labels, 1.0, nullptr);
  };
  std::vector<bool> base;
  std::vector<bool> plus;
  std::vector<bool> minus;
  probe(base);

  constexpr double step = 1e-3;
  CheckOutcome outcome{"network", Shape{1, input.shape().c, size, size}.str(), 0.0,
                       kNetworkTolerance, 0};
  for (auto [i, j] : all) {
    if (outcome.checked >= n_params) break;
    double& w = params[i].value.values()[j];
    const double w0 = w;
    w = w0 + step;
    const double lp = probe(plus);
    w = w0 - step;
    const double lm = probe(minus);
    w = w0;
    if (plus != base || minus != base) {
      ++outcome.skipped;
      continue;
    }
    const double err = nn::relative_error(params[i].grad.values()[j], (lp - lm) / (2.0 * step));
    outcome.max_rel_error = std::max(outcome.max_rel_error, err);
    ++outcome.checked;
  }
  if (outcome.checked < n_params) outcome.max_rel_error = std::numeric_limits<double>::infinity();
  return outcome;
}

}  // namespace tirdet::verify
