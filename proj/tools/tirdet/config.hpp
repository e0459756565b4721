#pragma once

#include <map>
#include <string>
#include <vector>

#include "json.hpp"

namespace tirdet::cli {

using nlohmann::json;

enum class KeyKind {
  Int,
  Real,
  Bool,
  String,
  OptionalString,  // string or null
  IntList,
  RealOrAuto,      // number or the string "auto"
};

struct KeySpec {
  std::string name;
  KeyKind kind;
  json default_value;
  std::string help;
};

using Schema = std::vector<KeySpec>;

/// Builds the resolved configuration: schema defaults, then the JSON config
/// file (which may also be a run manifest for the same subcommand), then
/// command-line overrides. Unknown keys and type mismatches throw ConfigError.
json resolve_config(const std::string& subcommand, const Schema& schema,
                    const std::string& config_path,
                    const std::map<std::string, std::string>& overrides);

std::string describe_default(const json& value);

}  // namespace tirdet::cli
