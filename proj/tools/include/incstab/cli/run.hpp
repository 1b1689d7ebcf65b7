#pragma once

#include "incstab/cli/scenario.hpp"

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace incstab::cli {

enum ExitCode : int {
  exit_ok = 0,
  exit_config_error = 2,
  exit_blow_up = 3,
  exit_refused = 4,
  exit_internal_error = 5,
};

struct RunOptions {
  /// Overrides the scenario's `output` when set.
  std::optional<std::filesystem::path> out_dir;
  std::optional<std::uint64_t> seed;
  std::optional<double> tolerance;
};

struct RunResult {
  int exit_code = exit_ok;
  std::vector<std::filesystem::path> files;
  std::string message;
};

/// Tool version written into every output header.
const char *tool_version();

/// Writes `contents` to a temporary file next to `path` and renames it into place.
void write_atomic(const std::filesystem::path &path, const std::string &contents);

/// "# incstab <version> key=value ..." from the scenario echo plus extras.
std::string csv_comment(const Scenario &s,
                        const std::vector<std::pair<std::string, std::string>> &extra = {});

/// Figure caption pair and parameter sets used by `figures`.
std::pair<Vector, Vector> figure_pair();

/// Dispatches the scenario's action. Throws ConfigError for config problems and
/// lets other exceptions propagate; blow-up and refusal are reported via exit_code.
RunResult run(Scenario scenario, const RunOptions &options, std::ostream &log);

/// Full command-line flow: parse (or default) the config, run, map exceptions
/// to exit codes and print diagnostics to `err`.
int run_command(Action action, const std::optional<std::filesystem::path> &config,
                const RunOptions &options, std::ostream &out, std::ostream &err);

}  // namespace incstab::cli
