#include "tirdet/config.hpp"

#include <fstream>

#include "tirdet/error.hpp"

namespace tirdet::cli {

namespace {

bool matches(KeyKind kind, const json& v) {
  switch (kind) {
    case KeyKind::Int: return v.is_number_integer();
    case KeyKind::Real: return v.is_number();
    case KeyKind::Bool: return v.is_boolean();
    case KeyKind::String: return v.is_string();
    case KeyKind::OptionalString: return v.is_string() || v.is_null();
    case KeyKind::IntList:
      if (!v.is_array()) return false;
      for (const auto& e : v) {
        if (!e.is_number_integer()) return false;
      }
      return true;
    case KeyKind::RealOrAuto: return v.is_number() || (v.is_string() && v == "auto");
  }
  return false;
}

// Command-line values are JSON when they parse as JSON; string-typed keys
// always take the raw text.
json parse_override(const KeySpec& spec, const std::string& raw) {
  if (spec.kind == KeyKind::String) return raw;
  if (spec.kind == KeyKind::OptionalString) return raw == "null" ? json(nullptr) : json(raw);
  if (spec.kind == KeyKind::IntList && !raw.empty() && raw.front() != '[') {
    return json::parse("[" + raw + "]", nullptr, false);
  }
  json v = json::parse(raw, nullptr, false);
  if (v.is_discarded()) return raw;
  return v;
}

json load_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config file " + path);
  json doc = json::parse(in, nullptr, false);
  if (doc.is_discarded()) throw ConfigError("config file " + path + " is not valid JSON");
  if (!doc.is_object()) throw ConfigError("config file " + path + " must hold a JSON object");
  return doc;
}

}  // namespace

std::string describe_default(const json& value) {
  return value.is_string() ? value.get<std::string>() : value.dump();
}

json resolve_config(const std::string& subcommand, const Schema& schema,
                    const std::string& config_path,
                    const std::map<std::string, std::string>& overrides) {
  json resolved = json::object();
  std::map<std::string, const KeySpec*> by_name;
  for (const auto& spec : schema) {
    resolved[spec.name] = spec.default_value;
    by_name[spec.name] = &spec;
  }

  auto assign = [&](const std::string& key, const json& value, const char* origin) {
    const auto it = by_name.find(key);
    if (it == by_name.end()) {
      throw ConfigError("unknown config key \"" + key + "\" in " + origin + " for '" + subcommand +
                        "'");
    }
    if (!matches(it->second->kind, value)) {
      throw ConfigError("config key \"" + key + "\" has invalid value " + value.dump());
    }
    resolved[key] = value;
  };

  if (!config_path.empty()) {
    json doc = load_file(config_path);
    // A run manifest carries its resolved config under "config".
    if (doc.contains("subcommand") && doc.contains("config")) {
      if (doc["subcommand"] != subcommand) {
        throw ConfigError("manifest was written by '" + doc["subcommand"].get<std::string>() +
                          "', not '" + subcommand + "'");
      }
      doc = doc["config"];
    }
    for (const auto& [key, value] : doc.items()) assign(key, value, "config file");
  }
  for (const auto& [key, raw] : overrides) {
    const auto it = by_name.find(key);
    if (it == by_name.end()) throw ConfigError("unknown option --" + key);
    assign(key, parse_override(*it->second, raw), "command line");
  }
  return resolved;
}

}  // namespace tirdet::cli
