#include <random>

#include <benchmark/benchmark.h>

#include "tirdet/enhance.hpp"
#include "tirdet/nn/graph.hpp"
#include "tirdet/nn/layers.hpp"
#include "tirdet/segnet.hpp"
#include "tirdet/synth.hpp"

using namespace tirdet;

namespace {

nn::Tensor random_tensor(nn::Shape s, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  nn::Tensor t(s);
  for (double& v : t.values()) v = u(rng);
  return t;
}

void BM_Conv2d(benchmark::State& state) {
  const int c = static_cast<int>(state.range(0));
  const int size = static_cast<int>(state.range(1));
  const nn::Tensor x = random_tensor({1, c, size, size}, 1);
  const nn::Tensor w = random_tensor({c, c, 3, 3}, 2);
  nn::ConvGeometry g;
  g.padding = 1;
  for (auto _ : state) benchmark::DoNotOptimize(nn::conv2d(x, w, nullptr, g));
  state.SetItemsProcessed(state.iterations() * 9LL * c * c * size * size);
}
BENCHMARK(BM_Conv2d)->Args({16, 64})->Args({32, 32})->Args({64, 16});

void BM_KernelResponse(benchmark::State& state) {
  const auto bank = enhance::build_default_bank();
  synth::SceneParams p;
  const Image img = synth::gen_scene(p).image;
  const auto& spec = bank[static_cast<std::size_t>(state.range(0))];
  for (auto _ : state) benchmark::DoNotOptimize(enhance::kernel_response(img, spec));
}
BENCHMARK(BM_KernelResponse)->Arg(0)->Arg(12)->Arg(14);

void BM_EnhanceStack(benchmark::State& state) {
  const auto bank = enhance::build_default_bank();
  const Image img = synth::gen_scene(synth::SceneParams{}).image;
  for (auto _ : state) benchmark::DoNotOptimize(enhance::enhance_stack(img, bank));
}
BENCHMARK(BM_EnhanceStack);

void BM_NetworkForward(benchmark::State& state) {
  const segnet::Network net{segnet::NetConfig{}};
  const Image img = synth::gen_scene(synth::SceneParams{}).image;
  for (auto _ : state) benchmark::DoNotOptimize(segnet::forward(net, img));
}
BENCHMARK(BM_NetworkForward)->Unit(benchmark::kMillisecond);

void BM_NetworkForwardBackward(benchmark::State& state) {
  segnet::Network net{segnet::NetConfig{}};
  const auto item = synth::gen_scene(synth::SceneParams{});
  const nn::Tensor input = net.head_input(item.image);
  const nn::Tensor labels = nn::labels_tensor(std::span(&item.mask, 1));
  for (auto _ : state) {
    nn::Graph g;
    const nn::Node logits = net.record(g, g.constant(input), true);
    const nn::Node loss = g.softmax_bce(logits, labels, 10.0);
    g.backward(loss);
    benchmark::DoNotOptimize(g.value(loss));
  }
}
BENCHMARK(BM_NetworkForwardBackward)->Unit(benchmark::kMillisecond);

}  // namespace
BENCHMARK_MAIN();
