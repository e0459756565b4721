#include <cmath>
#include <filesystem>
#include <random>

#include "doctest.h"
#include "oracles.hpp"
#include "tirdet/error.hpp"
#include "tirdet/metrics.hpp"
#include "tirdet/segnet.hpp"
#include "tirdet/synth.hpp"
#include "tirdet/train.hpp"
#include "tirdet/verify.hpp"

using namespace tirdet;
using namespace tirdet::segnet;

namespace {

NetConfig small_config(HeadKind head = HeadKind::Fixed) {
  NetConfig c;
  c.head = head;
  c.widths = {8, 16, 32};
  return c;
}

std::vector<LabeledImage> scenes(int n, int size, double snr, std::uint64_t seed) {
  synth::SceneParams p;
  p.width = size;
  p.height = size;
  p.target_snr = snr;
  p.n_targets = size >= 32 ? 3 : 1;
  return synth::gen_dataset(p, n, seed).items;
}

}  // namespace

TEST_SUITE("segnet") {

TEST_CASE("default network layout") {
  const Network net{NetConfig{}};
  CHECK(net.trainable_parameter_count() == 466594);
  CHECK(net.bank().size() == 15);
  for (const char* name : {"enc0.res0.conv1.weight", "enc1.res0.proj.weight", "enc2.down.weight",
                           "aspp.rate1.weight", "aspp.rate8.weight", "aspp.pool.weight",
                           "aspp.fuse.weight", "dec0.res0.conv2.bias", "head.out.weight"}) {
    CAPTURE(name);
    CHECK(net.has_parameter(name));
  }
  CHECK_FALSE(net.has_parameter("head.k3.weight"));
  CHECK(net.parameter("head.out.weight").value.shape() == nn::Shape{2, 16, 1, 1});

  const Network free{NetConfig{.head = HeadKind::Free}};
  for (int s : {3, 5, 7, 9, 11}) {
    const auto& k = free.parameter("head.k" + std::to_string(s) + ".weight");
    CHECK(k.value.shape() == nn::Shape{3, 1, s, s});
    CHECK(k.trainable);
  }
  CHECK(free.trainable_parameter_count() ==
        net.trainable_parameter_count() + 3 * (9 + 25 + 49 + 81 + 121));
}

TEST_CASE("config validation and serialization") {
  NetConfig c;
  c.widths = {16};
  CHECK_THROWS_AS(c.validate(), InvalidArgument);
  c = {};
  c.aspp_rates = {2, 2};
  CHECK_THROWS_AS(c.validate(), InvalidArgument);
  c = {};
  c.input_channels = 3;
  CHECK_THROWS_AS(c.validate(), InvalidArgument);
  c = small_config(HeadKind::Free);
  c.aspp_global_pool = false;
  const NetConfig back = net_config_from_json(to_json(c));
  CHECK(back.widths == c.widths);
  CHECK(back.head == HeadKind::Free);
  CHECK(back.aspp_global_pool == false);
  CHECK(back.aspp_rates == c.aspp_rates);
  CHECK(back.seed == c.seed);
  CHECK_THROWS_AS(head_kind_from_string("learned"), InvalidArgument);
}

TEST_CASE("same seed gives identical initialisation") {
  const Network a{small_config()};
  const Network b{small_config()};
  NetConfig other = small_config();
  other.seed = 8;
  const Network c{other};
  bool all_equal = true;
  bool any_diff = false;
  for (std::size_t i = 0; i < a.parameters().size(); ++i) {
    all_equal = all_equal && a.parameters()[i].value == b.parameters()[i].value;
    any_diff = any_diff || a.parameters()[i].value != c.parameters()[i].value;
  }
  CHECK(all_equal);
  CHECK(any_diff);
}

TEST_CASE("output size equals input size") {
  std::mt19937_64 rng(61);
  for (HeadKind head : {HeadKind::Fixed, HeadKind::Free}) {
    const Network net{small_config(head)};
    for (auto [w, h] : {std::pair{16, 16}, {24, 16}, {16, 32}, {40, 24}}) {
      const Image img = oracle::random_image(rng, w, h);
      const LikelihoodMap m = forward(net, img);
      CHECK(m.p_t.width() == w);
      CHECK(m.p_t.height() == h);
      for (std::size_t i = 0; i < m.p_t.size(); ++i) {
        CHECK(std::abs(m.p_t.pixels()[i] + m.p_b.pixels()[i] - 1.0) < 1e-6);
      }
    }
  }
}

TEST_CASE("input size must be a multiple of 2^stages") {
  const Network net{small_config()};
  CHECK_THROWS_AS(forward(net, Image(20, 16)), ShapeError);
  CHECK_THROWS_AS(check_input_size(net.config(), 16, 12), ShapeError);
  CHECK_NOTHROW(check_input_size(net.config(), 16, 8));
}

TEST_CASE("non-finite input is a numeric-contract violation") {
  const Network net{small_config()};
  Image img(16, 16, 0.2);
  img(3, 3) = std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS_AS(forward(net, img), NumericError);
}

TEST_CASE("binarize, infer and overlay") {
  LikelihoodMap m{Image(3, 1, {0.2, 0.5, 0.9}), Image(3, 1, {0.8, 0.5, 0.1})};
  CHECK(binarize(m) == Mask(3, 1, {0, 0, 1}));

  std::mt19937_64 rng(62);
  const Network net{small_config()};
  const Image img = oracle::random_image(rng, 16, 16, 0.0, 0.9);
  const Inference inf = infer(net, img);
  CHECK(inf.mask == binarize(forward(net, img)));
  REQUIRE(same_size(inf.overlay, img));
  for (std::size_t i = 0; i < img.size(); ++i) {
    CHECK(inf.overlay.pixels()[i] == (inf.mask.labels()[i] ? 1.0 : img.pixels()[i]));
  }
}

TEST_CASE("end-to-end gradient matches finite differences") {
  for (HeadKind head : {HeadKind::Fixed, HeadKind::Free}) {
    NetConfig c;
    c.head = head;
    const auto o = verify::network_check(c, 8, 120, 3);
    CAPTURE(to_string(head));
    CHECK(o.checked >= 100);
    CHECK(o.max_rel_error < 1e-3);
  }
}

TEST_CASE("save and load reproduce the network bit-exactly") {
  std::mt19937_64 rng(63);
  Network net{small_config(HeadKind::Free)};
  for (auto& p : net.parameters()) {
    for (double& v : p.value.values()) v += 1e-3;
  }
  const auto dir = std::filesystem::temp_directory_path() / "tirdet_segnet_ckpt";
  std::filesystem::remove_all(dir);
  save_network(net, dir);
  const Network back = load_network(dir);
  CHECK(back.config().head == HeadKind::Free);
  const Image img = oracle::random_image(rng, 16, 16);
  const auto a = forward(net, img);
  const auto b = forward(back, img);
  CHECK(a.p_t == b.p_t);
}

TEST_CASE("auto pos_weight") {
  const LabeledImage a{Image(4, 4), Mask(4, 4, {1, 1, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0})};
  CHECK(auto_pos_weight(std::span(&a, 1)) == 7.0);
  const LabeledImage none{Image(4, 4), Mask(4, 4)};
  CHECK(auto_pos_weight(std::span(&none, 1)) == 1.0);
  Mask one(32, 32);
  one(0, 0) = 1;
  const LabeledImage sparse{Image(32, 32), one};
  CHECK(auto_pos_weight(std::span(&sparse, 1)) == 100.0);
  const LabeledImage dense{Image(2, 1), Mask(2, 1, {1, 1})};
  CHECK(auto_pos_weight(std::span(&dense, 1)) == 1.0);
}

TEST_CASE("train config validation") {
  TrainConfig t;
  t.epochs = 0;
  CHECK_THROWS_AS(t.validate(), InvalidArgument);
  t = {};
  t.learning_rate = -1.0;
  CHECK_THROWS_AS(t.validate(), InvalidArgument);
  t = {};
  t.pos_weight = 0.0;
  CHECK_THROWS_AS(t.validate(), InvalidArgument);
  CHECK(optimizer_from_string("sgd") == OptimizerKind::Sgd);
  CHECK_THROWS_AS(optimizer_from_string("rmsprop"), InvalidArgument);
}

TEST_CASE("a single image can be overfit") {
  const auto data = scenes(1, 16, 4.0, 71);
  Network net{NetConfig{}};
  TrainConfig t;
  t.epochs = 500;
  t.batch_size = 1;
  t.pos_weight = 1.0;
  double best = 1e9;
  int steps = 0;
  // Stop as soon as the threshold is reached by raising from the callback.
  struct Done {};
  try {
    train(net, data, t, [&](const EpochStats& s) {
      best = std::min(best, s.mean_loss);
      steps = s.epoch + 1;
      if (best < 0.01) throw Done{};
    });
  } catch (const Done&) {
  }
  CHECK(best < 0.01);
  CHECK(steps <= 500);
}

TEST_CASE("training is deterministic and leaves the fixed bank untouched") {
  const auto data = scenes(6, 16, 4.0, 72);
  const auto bank_before = Network{small_config()}.bank();
  TrainConfig t;
  t.epochs = 2;
  t.batch_size = 2;
  Network a{small_config()};
  Network b{small_config()};
  const auto ra = train(a, data, t);
  const auto rb = train(b, data, t);
  REQUIRE(ra.epochs.size() == 2);
  CHECK(ra.steps == 6);
  for (std::size_t i = 0; i < 2; ++i) CHECK(ra.epochs[i].mean_loss == rb.epochs[i].mean_loss);
  for (std::size_t i = 0; i < a.parameters().size(); ++i) {
    CHECK(a.parameters()[i].value == b.parameters()[i].value);
  }
  const auto& bank_after = a.bank();
  REQUIRE(bank_after.size() == bank_before.size());
  for (std::size_t k = 0; k < bank_after.size(); ++k) {
    CHECK(bank_after[k].dense_weights() == bank_before[k].dense_weights());
  }
  const Image img = data[0].image;
  CHECK(a.head_input(img) == enhance::enhance_stack(img, enhance::build_default_bank()));
}

TEST_CASE("free head kernels are trained") {
  const auto data = scenes(4, 16, 4.0, 73);
  Network net{small_config(HeadKind::Free)};
  const nn::Tensor before = net.parameter("head.k5.weight").value;
  TrainConfig t;
  t.epochs = 1;
  train(net, data, t);
  CHECK(net.parameter("head.k5.weight").value != before);
}

TEST_CASE("training rejects mixed image sizes") {
  auto data = scenes(2, 16, 4.0, 74);
  data.push_back(scenes(1, 24, 4.0, 75)[0]);
  Network net{small_config()};
  CHECK_THROWS_AS(train(net, data, TrainConfig{}), ShapeError);
}

TEST_CASE("a briefly trained model finds high-SNR targets") {
  synth::SceneParams p;
  p.target_snr = 6.0;
  const auto train_set = synth::gen_dataset(p, 40, 11).items;
  const auto test_set = synth::gen_dataset(p, 10, 12).items;
  Network net{small_config()};
  TrainConfig t;
  t.epochs = 6;
  train(net, train_set, t);
  const auto eval = metrics::evaluate(net, test_set);
  REQUIRE(eval.overall.per_class_iou[1].has_value());
  CHECK(*eval.overall.per_class_iou[1] > 0.5);
  CHECK(evaluate_loss(net, test_set, 1.0) < evaluate_loss(Network{small_config()}, test_set, 1.0));
}

}  // TEST_SUITE
