#pragma once

#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "tirdet/config.hpp"

namespace tirdet::cli {

/// What a run reports back for its manifest.
struct RunRecord {
  json seeds = json::object();
  std::vector<std::string> inputs;
  std::vector<std::string> outputs;
  /// Where the manifest goes: <out>/run_manifest.json for directory outputs,
  /// <out>.manifest.json for single-file outputs.
  std::filesystem::path manifest_path;
  /// Non-zero when the run completed but its checks failed.
  int exit_code = 0;
};

struct Command {
  std::string name;
  std::string description;
  Schema schema;
  std::function<RunRecord(const json& config)> run;
};

const std::vector<Command>& commands();

/// Writes `text` to a sibling temporary file and renames it over `path`.
void write_file_atomic(const std::filesystem::path& path, const std::string& text);

}  // namespace tirdet::cli
