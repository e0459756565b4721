#include <chrono>
#include <cstdio>
#include <iostream>
#include <map>
#include <string>

#include "CLI11.hpp"
#include "tirdet/commands.hpp"
#include "tirdet/error.hpp"

namespace {

using tirdet::cli::json;
using tirdet::cli::KeyKind;

constexpr int kExitConfig = 2;
constexpr int kExitIo = 3;
constexpr int kExitNumeric = 4;

const char* value_hint(KeyKind kind) {
  switch (kind) {
    case KeyKind::Int: return "INT";
    case KeyKind::Real: return "REAL";
    case KeyKind::Bool: return "true|false";
    case KeyKind::String: return "TEXT";
    case KeyKind::OptionalString: return "TEXT|null";
    case KeyKind::IntList: return "INT,...";
    case KeyKind::RealOrAuto: return "REAL|auto";
  }
  return "VALUE";
}

struct Invocation {
  CLI::App* app = nullptr;
  const tirdet::cli::Command* command = nullptr;
  std::string config_path;
  std::map<std::string, std::string> values;
  std::map<std::string, CLI::Option*> options;
};

int run(const Invocation& inv) {
  std::map<std::string, std::string> overrides;
  for (const auto& [key, opt] : inv.options) {
    if (opt->count() > 0) overrides[key] = inv.values.at(key);
  }
  const json config = tirdet::cli::resolve_config(inv.command->name, inv.command->schema,
                                                  inv.config_path, overrides);
  const auto start = std::chrono::steady_clock::now();
  const tirdet::cli::RunRecord record = inv.command->run(config);
  const double seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

  const json manifest = {
      {"tool", "tirdet"},
      {"version", TIRDET_VERSION},
      {"subcommand", inv.command->name},
      {"config", config},
      {"seeds", record.seeds},
      {"inputs", record.inputs},
      {"outputs", record.outputs},
      {"wall_seconds", seconds},
      {"exit_code", record.exit_code},
  };
  tirdet::cli::write_file_atomic(record.manifest_path, manifest.dump(2) + "\n");
  return record.exit_code;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"tirdet: small thermal-infrared target detection pipeline"};
  app.set_version_flag("--version", TIRDET_VERSION);
  app.require_subcommand(1);

  std::vector<Invocation> invocations;
  invocations.reserve(tirdet::cli::commands().size());
  for (const auto& command : tirdet::cli::commands()) {
    Invocation& inv = invocations.emplace_back();
    inv.command = &command;
    inv.app = app.add_subcommand(command.name, command.description);
    inv.app->add_option("--config", inv.config_path,
                        "JSON config file, or a run manifest of this subcommand");
    for (const auto& key : command.schema) {
      inv.values[key.name];
    }
    for (const auto& key : command.schema) {
      inv.options[key.name] =
          inv.app
              ->add_option("--" + key.name, inv.values[key.name],
                           key.help + " [default: " + tirdet::cli::describe_default(key.default_value) +
                               "]")
              ->type_name(value_hint(key.kind));
    }
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }

  for (const auto& inv : invocations) {
    if (!inv.app->parsed()) continue;
    try {
      return run(inv);
    } catch (const tirdet::ConfigError& e) {
      std::fprintf(stderr, "config error: %s\n", e.what());
      return kExitConfig;
    } catch (const tirdet::InvalidArgument& e) {
      std::fprintf(stderr, "invalid argument: %s\n", e.what());
      return kExitConfig;
    } catch (const tirdet::IoError& e) {
      std::fprintf(stderr, "I/O error: %s\n", e.what());
      return kExitIo;
    } catch (const tirdet::NumericError& e) {
      std::fprintf(stderr, "numeric error: %s\n", e.what());
      return kExitNumeric;
    } catch (const std::exception& e) {
      std::fprintf(stderr, "error: %s\n", e.what());
      return 1;
    }
  }
  return 1;
}
