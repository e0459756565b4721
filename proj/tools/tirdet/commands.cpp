#include "tirdet/commands.hpp"

#include <chrono>
#include <cstdio>
#include <fstream>
#include <iostream>

#include "tirdet/dataprep.hpp"
#include "tirdet/enhance.hpp"
#include "tirdet/error.hpp"
#include "tirdet/metrics.hpp"
#include "tirdet/pgm.hpp"
#include "tirdet/segnet.hpp"
#include "tirdet/synth.hpp"
#include "tirdet/train.hpp"
#include "tirdet/verify.hpp"

namespace tirdet::cli {

namespace fs = std::filesystem;

namespace {

constexpr int kImageMaxval = 65535;

// ---- config access -------------------------------------------------------

std::string text(const json& c, const char* key) { return c.at(key).get<std::string>(); }

std::string required(const json& c, const char* key) {
  const json& v = c.at(key);
  if (!v.is_string() || v.get<std::string>().empty()) {
    throw ConfigError(std::string("missing required key \"") + key + "\"");
  }
  return v.get<std::string>();
}

std::optional<std::string> optional_text(const json& c, const char* key) {
  const json& v = c.at(key);
  if (v.is_null() || v.get<std::string>().empty()) return std::nullopt;
  return v.get<std::string>();
}

int integer(const json& c, const char* key) { return c.at(key).get<int>(); }
double real(const json& c, const char* key) { return c.at(key).get<double>(); }

std::uint64_t seed(const json& c, const char* key) {
  const json& v = c.at(key);
  if (v.is_number_unsigned()) return v.get<std::uint64_t>();
  if (v.is_number_integer() && v.get<std::int64_t>() >= 0) {
    return static_cast<std::uint64_t>(v.get<std::int64_t>());
  }
  throw ConfigError(std::string("config key \"") + key + "\" must be a non-negative integer");
}

// ---- shared key groups ---------------------------------------------------

void append(Schema& to, const Schema& from) { to.insert(to.end(), from.begin(), from.end()); }

Schema scene_keys() {
  const synth::SceneParams d;
  return {
      {"width", KeyKind::Int, d.width, "image width in pixels"},
      {"height", KeyKind::Int, d.height, "image height in pixels"},
      {"n_targets", KeyKind::Int, d.n_targets, "targets per scene"},
      {"target_extent", KeyKind::Int, d.target_extent, "maximum target extent per axis (pixels)"},
      {"target_snr", KeyKind::Real, d.target_snr, "base SNR, jittered +-30% per item"},
      {"clutter_amplitude", KeyKind::Real, d.clutter_amplitude, "wave clutter amplitude"},
      {"clutter_wavelength", KeyKind::Real, d.clutter_wavelength, "wave clutter wavelength (pixels)"},
      {"row_noise_sigma", KeyKind::Real, d.row_noise_sigma, "correlated row noise sigma"},
      {"pixel_noise_sigma", KeyKind::Real, d.pixel_noise_sigma, "pixel noise sigma"},
      {"horizon_gradient", KeyKind::Real, d.horizon_gradient, "top-to-bottom intensity ramp"},
      {"background_level", KeyKind::Real, d.background_level, "mean background intensity"},
  };
}

synth::SceneParams scene_from(const json& c) {
  synth::SceneParams p;
  p.width = integer(c, "width");
  p.height = integer(c, "height");
  p.n_targets = integer(c, "n_targets");
  p.target_extent = integer(c, "target_extent");
  p.target_snr = real(c, "target_snr");
  p.clutter_amplitude = real(c, "clutter_amplitude");
  p.clutter_wavelength = real(c, "clutter_wavelength");
  p.row_noise_sigma = real(c, "row_noise_sigma");
  p.pixel_noise_sigma = real(c, "pixel_noise_sigma");
  p.horizon_gradient = real(c, "horizon_gradient");
  p.background_level = real(c, "background_level");
  p.validate();
  return p;
}

Schema net_keys() {
  const segnet::NetConfig d;
  return {
      {"head", KeyKind::String, segnet::to_string(d.head), "head kind: fixed | free"},
      {"widths", KeyKind::IntList, d.widths, "encoder stage widths"},
      {"res_blocks", KeyKind::Int, d.res_blocks, "residual blocks per stage"},
      {"aspp_rates", KeyKind::IntList, d.aspp_rates, "ASPP dilation rates"},
      {"aspp_global_pool", KeyKind::Bool, d.aspp_global_pool, "ASPP global pooling branch"},
      {"init_seed", KeyKind::Int, d.seed, "parameter initialisation seed"},
  };
}

segnet::NetConfig net_from(const json& c) {
  segnet::NetConfig n;
  n.head = segnet::head_kind_from_string(text(c, "head"));
  n.widths = c.at("widths").get<std::vector<int>>();
  n.res_blocks = integer(c, "res_blocks");
  n.aspp_rates = c.at("aspp_rates").get<std::vector<int>>();
  n.aspp_global_pool = c.at("aspp_global_pool").get<bool>();
  n.seed = seed(c, "init_seed");
  n.validate();
  return n;
}

Schema train_keys() {
  const segnet::TrainConfig d;
  return {
      {"epochs", KeyKind::Int, d.epochs, "training epochs"},
      {"batch_size", KeyKind::Int, d.batch_size, "images per optimiser step"},
      {"learning_rate", KeyKind::Real, d.learning_rate, "optimiser step size"},
      {"optimizer", KeyKind::String, segnet::to_string(d.optimizer), "adam | sgd"},
      {"pos_weight", KeyKind::RealOrAuto, "auto",
       "target-pixel loss weight, or auto (background/target ratio, clamped to [1,100])"},
      {"seed", KeyKind::Int, d.seed, "batch shuffling seed"},
  };
}

segnet::TrainConfig train_from(const json& c) {
  segnet::TrainConfig t;
  t.epochs = integer(c, "epochs");
  t.batch_size = integer(c, "batch_size");
  t.learning_rate = real(c, "learning_rate");
  t.optimizer = segnet::optimizer_from_string(text(c, "optimizer"));
  if (c.at("pos_weight").is_number()) t.pos_weight = real(c, "pos_weight");
  t.seed = seed(c, "seed");
  t.validate();
  return t;
}

// ---- I/O helpers ---------------------------------------------------------

void make_dirs(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create directory " + dir.string() + ": " + ec.message());
}

void make_parent(const fs::path& file) {
  if (file.has_parent_path()) make_dirs(file.parent_path());
}

fs::path file_manifest(const fs::path& out) { return fs::path(out.string() + ".manifest.json"); }

void write_image(const Image& image, const fs::path& path) {
  make_parent(path);
  write_pgm(image, path, kImageMaxval);
}

Image plane_image(const nn::Tensor& t, int channel) {
  const auto p = t.plane(0, channel);
  return Image(t.shape().w, t.shape().h, std::vector<double>(p.begin(), p.end()));
}

void log_epoch(const segnet::EpochStats& s, const std::string& prefix) {
  std::fprintf(stderr, "%sepoch %d  loss %.6f  %.1fs\n", prefix.c_str(), s.epoch, s.mean_loss,
               s.seconds);
}

// ---- gen -----------------------------------------------------------------

Command gen_command() {
  Schema s = {
      {"out", KeyKind::String, "", "output dataset directory"},
      {"n", KeyKind::Int, 100, "number of scenes"},
      {"seed", KeyKind::Int, 0, "master seed; per-item seeds derive from it"},
  };
  append(s, scene_keys());
  return {"gen", "generate a synthetic labeled TIR dataset", s, [](const json& c) {
            const fs::path out = required(c, "out");
            const int n = integer(c, "n");
            if (n < 1) throw ConfigError("n must be at least 1");
            auto ds = synth::gen_dataset(scene_from(c), n, seed(c, "seed"));
            synth::write_dataset(ds, out);
            RunRecord r;
            r.seeds = {{"seed", seed(c, "seed")}};
            r.outputs = {out.string()};
            r.manifest_path = out / "run_manifest.json";
            return r;
          }};
}

// ---- enhance -------------------------------------------------------------

Command enhance_command() {
  Schema s = {
      {"input", KeyKind::String, "", "input PGM image"},
      {"out", KeyKind::String, "", "output directory for response channels"},
  };
  return {"enhance", "compute the fixed-kernel response stack of an image", s,
          [](const json& c) {
            const fs::path input = required(c, "input");
            const fs::path out = required(c, "out");
            const Image image = read_pgm(input);
            const auto bank = enhance::build_default_bank();
            const nn::Tensor stack = enhance::enhance_stack(image, bank);
            make_dirs(out);
            json channels = json::array();
            for (int ch = 0; ch < stack.shape().c; ++ch) {
              char name[32];
              std::snprintf(name, sizeof name, "channel_%02d.pgm", ch);
              write_image(normalize(plane_image(stack, ch)), out / name);
              json entry = {{"channel", ch}, {"file", name}};
              if (ch == 0) {
                entry["kind"] = "raw";
              } else {
                const auto& k = bank[static_cast<std::size_t>(ch - 1)];
                entry["kind"] = "response";
                entry["size"] = k.size;
                entry["aspect"] = enhance::to_string(k.aspect);
                entry["red_rows"] = k.red_rows;
                entry["red_cols"] = k.red_cols;
                entry["n_red"] = k.n_red();
                entry["n_blue"] = k.n_blue();
              }
              channels.push_back(entry);
            }
            write_file_atomic(out / "kernels.json",
                              json{{"normalization", "per-channel min-max"},
                                   {"channels", channels}}.dump(2) + "\n");
            RunRecord r;
            r.inputs = {input.string()};
            r.outputs = {out.string()};
            r.manifest_path = out / "run_manifest.json";
            return r;
          }};
}

// ---- separate / translate / compose ---------------------------------------

LabeledImage read_labeled(const fs::path& image, const fs::path& mask) {
  LabeledImage item{read_pgm(image), read_mask(mask)};
  item.validate();
  return item;
}

Command separate_command() {
  Schema s = {
      {"input", KeyKind::String, "", "input PGM image"},
      {"mask", KeyKind::String, "", "target mask PGM"},
      {"out", KeyKind::String, "", "output PGM: targets replaced by row background means"},
  };
  return {"separate", "remove labeled targets by row-mean background fill", s,
          [](const json& c) {
            const fs::path input = required(c, "input");
            const fs::path mask = required(c, "mask");
            const fs::path out = required(c, "out");
            write_image(dataprep::separate_background(read_labeled(input, mask)), out);
            RunRecord r;
            r.inputs = {input.string(), mask.string()};
            r.outputs = {out.string()};
            r.manifest_path = file_manifest(out);
            return r;
          }};
}

dataprep::SurrogateConfig surrogate_from(const json& c) {
  dataprep::SurrogateConfig s;
  if (auto ref = optional_text(c, "reference")) s.reference = read_pgm(*ref);
  s.sigma_row = real(c, "sigma_row");
  s.sigma_px = real(c, "sigma_px");
  s.seed = seed(c, "seed");
  if (s.sigma_row < 0.0 || s.sigma_px < 0.0) throw ConfigError("noise sigmas must be >= 0");
  return s;
}

Command translate_command() {
  Schema s = {
      {"input", KeyKind::OptionalString, nullptr, "input PGM image (single-image mode)"},
      {"dataset", KeyKind::OptionalString, nullptr,
       "dataset manifest (dataset mode: separate, translate, re-compose every item)"},
      {"out", KeyKind::String, "", "output PGM (image mode) or dataset directory"},
      {"reference", KeyKind::OptionalString, nullptr, "reference PGM for histogram matching"},
      {"sigma_row", KeyKind::Real, 0.0, "per-row offset sigma"},
      {"sigma_px", KeyKind::Real, 0.0, "per-pixel noise sigma"},
      {"seed", KeyKind::Int, 0, "noise seed (dataset mode derives one per item)"},
  };
  return {"translate", "apply the surrogate style translation", s, [](const json& c) {
            const auto input = optional_text(c, "input");
            const auto dataset = optional_text(c, "dataset");
            if (input.has_value() == dataset.has_value()) {
              throw ConfigError("exactly one of input or dataset must be set");
            }
            const fs::path out = required(c, "out");
            const auto cfg = surrogate_from(c);
            RunRecord r;
            r.seeds = {{"seed", cfg.seed}};
            if (auto ref = optional_text(c, "reference")) r.inputs.push_back(*ref);
            r.outputs = {out.string()};
            if (input) {
              write_image(dataprep::translate_surrogate(read_pgm(*input), cfg), out);
              r.inputs.push_back(*input);
              r.manifest_path = file_manifest(out);
              return r;
            }
            const auto data = synth::load_dataset(*dataset);
            json manifest = json::array();
            for (std::size_t i = 0; i < data.items.size(); ++i) {
              auto item_cfg = cfg;
              item_cfg.seed = synth::derive_seed(cfg.seed, i);
              const Image translated = dataprep::adaptation_pipeline(
                  data.items[i], dataprep::surrogate_translation(item_cfg));
              const std::string image_rel = "images/" + data.names[i] + ".pgm";
              const std::string mask_rel = "masks/" + data.names[i] + ".pgm";
              write_image(translated, out / image_rel);
              make_parent(out / mask_rel);
              write_mask(data.items[i].mask, out / mask_rel);
              manifest.push_back({{"image", image_rel}, {"mask", mask_rel}});
            }
            write_file_atomic(out / "manifest.json", json{{"items", manifest}}.dump(2) + "\n");
            r.inputs.push_back(*dataset);
            r.manifest_path = out / "run_manifest.json";
            return r;
          }};
}

Command compose_command() {
  Schema s = {
      {"background", KeyKind::String, "", "translated background PGM"},
      {"input", KeyKind::String, "", "original PGM image"},
      {"mask", KeyKind::String, "", "target mask PGM"},
      {"out", KeyKind::String, "", "output PGM"},
  };
  return {"compose", "paste original targets onto a translated background", s,
          [](const json& c) {
            const fs::path bg = required(c, "background");
            const fs::path input = required(c, "input");
            const fs::path mask = required(c, "mask");
            const fs::path out = required(c, "out");
            write_image(dataprep::compose(read_pgm(bg), read_labeled(input, mask)), out);
            RunRecord r;
            r.inputs = {bg.string(), input.string(), mask.string()};
            r.outputs = {out.string()};
            r.manifest_path = file_manifest(out);
            return r;
          }};
}

// ---- train / infer -------------------------------------------------------

Command train_command() {
  Schema s = {
      {"dataset", KeyKind::String, "", "training dataset manifest"},
      {"out", KeyKind::String, "", "checkpoint directory"},
  };
  append(s, net_keys());
  append(s, train_keys());
  return {"train", "train the segmentation network", s, [](const json& c) {
            const fs::path dataset = required(c, "dataset");
            const fs::path out = required(c, "out");
            const auto data = synth::load_dataset(dataset);
            segnet::Network net(net_from(c));
            const auto report = segnet::train(net, data.items, train_from(c),
                                              [](const auto& s) { log_epoch(s, ""); });
            segnet::save_network(net, out);
            write_file_atomic(out / "train_report.json", segnet::to_json(report) + "\n");
            RunRecord r;
            r.seeds = {{"seed", seed(c, "seed")}, {"init_seed", seed(c, "init_seed")}};
            r.inputs = {dataset.string()};
            r.outputs = {out.string()};
            r.manifest_path = out / "run_manifest.json";
            return r;
          }};
}

void write_inference(const segnet::Inference& inf, const fs::path& mask_path,
                     const fs::path& likelihood_path, const fs::path& overlay_path) {
  make_parent(mask_path);
  write_mask(inf.mask, mask_path);
  write_image(inf.map.p_t, likelihood_path);
  write_image(inf.overlay, overlay_path);
}

Command infer_command() {
  Schema s = {
      {"checkpoint", KeyKind::String, "", "checkpoint directory written by train"},
      {"input", KeyKind::OptionalString, nullptr, "input PGM image"},
      {"dataset", KeyKind::OptionalString, nullptr, "dataset manifest"},
      {"out", KeyKind::String, "", "output directory"},
  };
  return {"infer", "predict target masks, likelihood maps and overlays", s, [](const json& c) {
            const fs::path checkpoint = required(c, "checkpoint");
            const fs::path out = required(c, "out");
            const auto input = optional_text(c, "input");
            const auto dataset = optional_text(c, "dataset");
            if (input.has_value() == dataset.has_value()) {
              throw ConfigError("exactly one of input or dataset must be set");
            }
            const segnet::Network net = segnet::load_network(checkpoint);
            RunRecord r;
            r.outputs = {out.string()};
            r.manifest_path = out / "run_manifest.json";
            make_dirs(out);
            if (input) {
              write_inference(segnet::infer(net, read_pgm(*input)), out / "mask.pgm",
                              out / "likelihood.pgm", out / "overlay.pgm");
              r.inputs = {checkpoint.string(), *input};
              return r;
            }
            const auto data = synth::load_dataset(*dataset);
            for (std::size_t i = 0; i < data.items.size(); ++i) {
              const std::string file = data.names[i] + ".pgm";
              write_inference(segnet::infer(net, data.items[i].image), out / "masks" / file,
                              out / "likelihood" / file, out / "overlay" / file);
            }
            r.inputs = {checkpoint.string(), *dataset};
            return r;
          }};
}

// ---- eval / kfold --------------------------------------------------------

Command eval_command() {
  Schema s = {
      {"dataset", KeyKind::String, "", "dataset manifest with ground-truth masks"},
      {"checkpoint", KeyKind::OptionalString, nullptr, "checkpoint to run inference with"},
      {"predictions", KeyKind::OptionalString, nullptr,
       "directory written by infer (reads masks/<name>.pgm)"},
      {"out", KeyKind::String, "", "output metrics JSON file"},
  };
  return {"eval", "score predictions against ground truth", s, [](const json& c) {
            const fs::path dataset = required(c, "dataset");
            const fs::path out = required(c, "out");
            const auto checkpoint = optional_text(c, "checkpoint");
            const auto predictions = optional_text(c, "predictions");
            if (checkpoint.has_value() == predictions.has_value()) {
              throw ConfigError("exactly one of checkpoint or predictions must be set");
            }
            const auto data = synth::load_dataset(dataset);
            metrics::Evaluation result;
            if (checkpoint) {
              result = metrics::evaluate(segnet::load_network(*checkpoint), data.items);
            } else {
              std::vector<Mask> pred;
              std::vector<Mask> truth;
              for (std::size_t i = 0; i < data.items.size(); ++i) {
                pred.push_back(read_mask(fs::path(*predictions) / "masks" / (data.names[i] + ".pgm")));
                truth.push_back(data.items[i].mask);
              }
              result = metrics::evaluate_predictions(pred, truth);
            }
            make_parent(out);
            write_file_atomic(out, metrics::to_json(result) + "\n");
            RunRecord r;
            r.inputs = {dataset.string(), checkpoint ? *checkpoint : *predictions};
            r.outputs = {out.string()};
            r.manifest_path = file_manifest(out);
            return r;
          }};
}

template <typename T>
std::vector<T> pick(const std::vector<T>& all, const std::vector<std::size_t>& idx) {
  std::vector<T> out;
  out.reserve(idx.size());
  for (std::size_t i : idx) out.push_back(all[i]);
  return out;
}

Command kfold_command() {
  Schema s = {
      {"dataset", KeyKind::String, "", "dataset manifest"},
      {"out", KeyKind::String, "", "output directory"},
      {"k", KeyKind::Int, 4, "number of folds"},
      {"split_seed", KeyKind::Int, 0, "fold assignment shuffle seed"},
      {"save_checkpoints", KeyKind::Bool, false, "keep each fold's trained checkpoint"},
  };
  append(s, net_keys());
  append(s, train_keys());
  return {"kfold", "k-fold cross-validation: split, train per fold, average metrics", s,
          [](const json& c) {
            const fs::path dataset = required(c, "dataset");
            const fs::path out = required(c, "out");
            const int k = integer(c, "k");
            const auto net_cfg = net_from(c);
            const auto train_cfg = train_from(c);
            const auto data = synth::load_dataset(dataset);
            const auto folds = metrics::kfold_split(data.items.size(), k, seed(c, "split_seed"));
            make_dirs(out);

            std::vector<metrics::MetricsReport> reports;
            json fold_docs = json::array();
            for (std::size_t f = 0; f < folds.size(); ++f) {
              const fs::path dir = out / ("fold_" + std::to_string(f));
              make_dirs(dir);
              const auto train_set = pick(data.items, folds[f].train);
              const auto test_set = pick(data.items, folds[f].test);
              segnet::Network net(net_cfg);
              const std::string prefix = "fold " + std::to_string(f) + ": ";
              const auto report = segnet::train(net, train_set, train_cfg,
                                                [&](const auto& s) { log_epoch(s, prefix); });
              const auto evaluation = metrics::evaluate(net, test_set);
              reports.push_back(evaluation.overall);
              write_file_atomic(dir / "metrics.json", metrics::to_json(evaluation) + "\n");
              write_file_atomic(dir / "train_report.json", segnet::to_json(report) + "\n");
              write_file_atomic(dir / "split.json", json{{"train", folds[f].train},
                                                         {"test", folds[f].test}}.dump() + "\n");
              if (c.at("save_checkpoints").get<bool>()) segnet::save_network(net, dir / "checkpoint");
              fold_docs.push_back(json::parse(metrics::to_json(evaluation.overall)));
            }
            const json summary = {{"k", k},
                                  {"average", json::parse(metrics::to_json(metrics::average_folds(reports)))},
                                  {"folds", fold_docs}};
            write_file_atomic(out / "metrics.json", summary.dump(2) + "\n");
            RunRecord r;
            r.seeds = {{"split_seed", seed(c, "split_seed")},
                       {"seed", seed(c, "seed")},
                       {"init_seed", seed(c, "init_seed")}};
            r.inputs = {dataset.string()};
            r.outputs = {out.string()};
            r.manifest_path = out / "run_manifest.json";
            return r;
          }};
}

// ---- gradcheck -----------------------------------------------------------

json outcome_json(const verify::CheckOutcome& o) {
  return {{"name", o.name},       {"shape", o.shape},     {"max_rel_error", o.max_rel_error},
          {"tolerance", o.tolerance}, {"checked", o.checked}, {"skipped", o.skipped},
          {"passed", o.passed()}};
}

Command gradcheck_command() {
  Schema s = {
      {"out", KeyKind::String, "gradcheck.json", "output report JSON file"},
      {"seed", KeyKind::Int, 0, "sampling seed"},
      {"shapes_per_layer", KeyKind::Int, 5, "random shapes per layer"},
      {"network_params", KeyKind::Int, 100, "parameter coordinates sampled per network check"},
      {"size", KeyKind::Int, 8, "network check input size"},
  };
  return {"gradcheck", "finite-difference verification of every backward pass", s,
          [](const json& c) {
            const fs::path out = required(c, "out");
            const auto sd = seed(c, "seed");
            const int shapes = integer(c, "shapes_per_layer");
            const int params = integer(c, "network_params");
            if (shapes < 1 || params < 1) throw ConfigError("counts must be at least 1");
            bool ok = true;
            json layers = json::array();
            for (const auto& o : verify::layer_suite(sd, shapes)) {
              ok = ok && o.passed();
              layers.push_back(outcome_json(o));
            }
            json networks = json::array();
            for (auto head : {segnet::HeadKind::Fixed, segnet::HeadKind::Free}) {
              segnet::NetConfig cfg;
              cfg.head = head;
              auto o = verify::network_check(cfg, integer(c, "size"),
                                             static_cast<std::size_t>(params), sd);
              o.name += "/" + segnet::to_string(head);
              ok = ok && o.passed();
              networks.push_back(outcome_json(o));
            }
            double worst_layer = 0.0;
            for (const auto& l : layers) worst_layer = std::max(worst_layer, l["max_rel_error"].get<double>());
            std::printf("layers: %zu checks, worst relative error %.3g (tolerance %.0e)\n",
                        layers.size(), worst_layer, verify::kLayerTolerance);
            for (const auto& n : networks) {
              std::printf("%s: %zu coordinates, worst relative error %.3g (tolerance %.0e)\n",
                          n["name"].get<std::string>().c_str(), n["checked"].get<std::size_t>(),
                          n["max_rel_error"].get<double>(), verify::kNetworkTolerance);
            }
            std::printf("%s\n", ok ? "PASS" : "FAIL");
            make_parent(out);
            write_file_atomic(out, json{{"passed", ok}, {"layers", layers}, {"networks", networks}}
                                           .dump(2) + "\n");
            RunRecord r;
            r.seeds = {{"seed", sd}};
            r.outputs = {out.string()};
            r.manifest_path = file_manifest(out);
            r.exit_code = ok ? 0 : 4;
            return r;
          }};
}

}  // namespace

void write_file_atomic(const fs::path& path, const std::string& text) {
  const fs::path tmp = fs::path(path.string() + ".tmp");
  {
    std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
    if (!f) throw IoError("cannot write " + tmp.string());
    f << text;
    if (!f.flush()) throw IoError("write failed: " + tmp.string());
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) throw IoError("cannot rename " + tmp.string() + " to " + path.string() + ": " + ec.message());
}

const std::vector<Command>& commands() {
  static const std::vector<Command> all = {
      gen_command(),   enhance_command(), separate_command(), translate_command(),
      compose_command(), train_command(), infer_command(),    eval_command(),
      kfold_command(), gradcheck_command(),
  };
  return all;
}

}  // namespace tirdet::cli
