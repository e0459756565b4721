#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "tirdet/nn/graph.hpp"

namespace tirdet::nn {

inline constexpr int kCheckpointVersion = 1;

// On-disk layout of a checkpoint directory:
//   manifest.json  {"format":"tirdet-checkpoint","version":1,
//                   "hyperparameters":{...},
//                   "parameters":[{"name","shape":[n,c,h,w],"file","trainable"}]}
//   <name>.f64     raw little-endian IEEE-754 doubles, NCHW order

struct CheckpointData {
  std::vector<Parameter> parameters;
  std::string hyperparameters_json;
};

void write_checkpoint(const std::filesystem::path& dir, std::span<const Parameter> params,
                      const std::string& hyperparameters_json);

CheckpointData read_checkpoint(const std::filesystem::path& dir);

}  // namespace tirdet::nn
