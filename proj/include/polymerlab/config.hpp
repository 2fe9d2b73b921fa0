#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <json.hpp>

#include "polymerlab/disorder.hpp"
#include "polymerlab/kernels.hpp"
#include "polymerlab/lattice.hpp"

namespace polymerlab {

enum class Command { Gpl, P2p, PhaseGrid, Table1, Classify, CltCheck, Monotonicity, Localize };

std::string_view to_string(Command c);
Command parse_command(std::string_view name);

struct KernelSpec {
  /// "simple", "table" or "gaussian".
  std::string type = "simple";
  int d = 1;
  /// Table kernels: (step, probability) pairs.
  std::vector<std::pair<Site, double>> steps;
  /// Gaussian kernels: center per axis (empty means zero).
  Vec center;

  StepKernel build() const;
  friend bool operator==(const KernelSpec&, const KernelSpec&) = default;
};

struct WeightSpec {
  WeightFamily family = WeightFamily::Uniform01;
  std::vector<double> params;

  WeightModel build() const { return WeightModel::from_params(family, params); }
  friend bool operator==(const WeightSpec&, const WeightSpec&) = default;
};

/// Fields t e_axis for t on an even grid [lo, hi].
struct FieldLine {
  int axis = 0;
  double lo = 0.0;
  double hi = 0.0;
  int points = 1;
  friend bool operator==(const FieldLine&, const FieldLine&) = default;
};

/// Square grid of fields in the (axis_a, axis_b) plane.
struct FieldGrid {
  int axis_a = 0;
  int axis_b = 1;
  double lo = -2.0;
  double hi = 2.0;
  int points = 9;
  friend bool operator==(const FieldGrid&, const FieldGrid&) = default;
};

inline constexpr std::size_t kDefaultMemoryBudget = std::size_t{4} << 30;

struct RunConfig {
  Command command = Command::Gpl;
  WeightSpec weights;
  KernelSpec kernel;
  std::vector<double> beta{1.0};
  Vec h;  // empty means zero
  std::optional<FieldLine> field_line;
  FieldGrid grid;
  int n = 100;
  int samples = 10;
  std::optional<std::uint64_t> seed;
  int threads = 1;
  std::size_t memory_budget_bytes = kDefaultMemoryBudget;
  std::string out = ".";
  bool single_precision = false;
  double burn_in = 0.1;
  int series_terms = 128;
  /// "two_scale" or "single_scale".
  std::string surface = "two_scale";

  int dim() const { return kernel.d; }
  Vec field() const;
  /// Fields swept by gpl and p2p: the field line if given, else {h}.
  std::vector<Vec> fields() const;

  friend bool operator==(const RunConfig&, const RunConfig&) = default;
};

/// Checks every constraint; throws ConfigError naming the offending key.
void validate(const RunConfig& c);

nlohmann::json to_json(const RunConfig& c);
/// Applies the keys of `j` on top of `base`. Unknown keys are rejected.
RunConfig apply_json(RunConfig base, const nlohmann::json& j);
RunConfig config_from_json(const nlohmann::json& j);

/// Parses a byte count with an optional K, M or G (binary) suffix.
std::size_t parse_bytes(std::string_view text);

/// Parses "a,b,c" into numbers.
std::vector<double> parse_list(std::string_view text);

}  // namespace polymerlab
