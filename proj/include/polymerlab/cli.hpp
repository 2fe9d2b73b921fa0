#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "polymerlab/config.hpp"

namespace polymerlab {

struct OutputFile {
  std::string name;  // relative to the output directory
  std::string content;
};

/// Everything a run produces, held in memory until the run has succeeded.
struct RunOutput {
  std::vector<OutputFile> files;
  /// Printed to stdout after the files are written.
  std::string console;
  /// Approximations in effect (truncation radius, series tail, burn-in, ...).
  nlohmann::json approximations = nlohmann::json::object();
};

/// Executes one validated configuration without touching the disk.
RunOutput execute(const RunConfig& config);

/// Builds the configuration from command-line arguments: defaults, then the
/// POLYMERLAB_MEM_BUDGET environment variable, then flags, then --config.
/// Returns false when only help was requested.
bool parse_arguments(int argc, const char* const* argv, RunConfig& config);

/// Writes the files plus provenance.json into config.out.
void write_outputs(const RunConfig& config, const RunOutput& output, double wall_seconds);

/// Full command-line entry point; returns the process exit status:
/// 0 success, 2 configuration error, 3 resource error, 4 numeric error.
int run_cli(int argc, const char* const* argv);

}  // namespace polymerlab
