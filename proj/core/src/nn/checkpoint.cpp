#include "tirdet/nn/checkpoint.hpp"

#include <bit>
#include <cstdint>
#include <fstream>
#include <sstream>

#include "json.hpp"
#include "tirdet/error.hpp"

namespace tirdet::nn {

namespace {

using nlohmann::json;

std::string encode_le(std::span<const double> values) {
  std::string bytes(values.size() * 8, '\0');
  for (std::size_t i = 0; i < values.size(); ++i) {
    const auto bits = std::bit_cast<std::uint64_t>(values[i]);
    for (int b = 0; b < 8; ++b) {
      bytes[i * 8 + b] = static_cast<char>((bits >> (8 * b)) & 0xFF);
    }
  }
  return bytes;
}

std::vector<double> decode_le(const std::string& bytes) {
  std::vector<double> values(bytes.size() / 8);
  for (std::size_t i = 0; i < values.size(); ++i) {
    std::uint64_t bits = 0;
    for (int b = 0; b < 8; ++b) {
      bits |= static_cast<std::uint64_t>(static_cast<unsigned char>(bytes[i * 8 + b])) << (8 * b);
    }
    values[i] = std::bit_cast<double>(bits);
  }
  return values;
}

std::string slurp(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return std::move(ss).str();
}

void dump(const std::filesystem::path& path, const std::string& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open for writing: " + path.string());
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("write failed: " + path.string());
}

}  // namespace

void write_checkpoint(const std::filesystem::path& dir, std::span<const Parameter> params,
                      const std::string& hyperparameters_json) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("cannot create checkpoint directory " + dir.string());

  json manifest;
  manifest["format"] = "tirdet-checkpoint";
  manifest["version"] = kCheckpointVersion;
  manifest["hyperparameters"] = json::parse(hyperparameters_json);
  json entries = json::array();
  for (const auto& p : params) {
    if (!p.value.all_finite()) throw NumericError("checkpoint: non-finite values in " + p.name);
    const std::string file = p.name + ".f64";
    const Shape& s = p.value.shape();
    entries.push_back({{"name", p.name},
                       {"shape", {s.n, s.c, s.h, s.w}},
                       {"file", file},
                       {"trainable", p.trainable}});
    dump(dir / file, encode_le(p.value.values()));
  }
  manifest["parameters"] = std::move(entries);
  dump(dir / "manifest.json", manifest.dump(2) + "\n");
}

CheckpointData read_checkpoint(const std::filesystem::path& dir) {
  json manifest;
  try {
    manifest = json::parse(slurp(dir / "manifest.json"));
  } catch (const json::exception& e) {
    throw IoError("checkpoint manifest is not valid JSON: " + std::string(e.what()));
  }
  try {
    if (manifest.at("format") != "tirdet-checkpoint") throw IoError("not a tirdet checkpoint");
    const int version = manifest.at("version").get<int>();
    if (version != kCheckpointVersion) {
      throw IoError("unsupported checkpoint version " + std::to_string(version));
    }
    CheckpointData data;
    data.hyperparameters_json = manifest.at("hyperparameters").dump();
    for (const auto& entry : manifest.at("parameters")) {
      const auto dims = entry.at("shape").get<std::vector<int>>();
      if (dims.size() != 4) throw IoError("checkpoint shape must have 4 extents");
      const Shape shape{dims[0], dims[1], dims[2], dims[3]};
      const std::string bytes = slurp(dir / entry.at("file").get<std::string>());
      if (bytes.size() != shape.count() * 8) {
        throw IoError("checkpoint payload size mismatch for " + entry.at("name").get<std::string>());
      }
      Parameter p;
      p.name = entry.at("name").get<std::string>();
      p.value = Tensor(shape, decode_le(bytes));
      p.trainable = entry.value("trainable", true);
      data.parameters.push_back(std::move(p));
    }
    return data;
  } catch (const json::exception& e) {
    throw IoError("malformed checkpoint manifest: " + std::string(e.what()));
  }
}

}  // namespace tirdet::nn
