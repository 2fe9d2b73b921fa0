#include "polymerlab/config.hpp"

#include <array>
#include <charconv>
#include <cmath>
#include <limits>

#include "polymerlab/error.hpp"

namespace polymerlab {

using nlohmann::json;

namespace {

constexpr std::array<std::pair<Command, std::string_view>, 8> kCommands = {{
    {Command::Gpl, "gpl"},
    {Command::P2p, "p2p"},
    {Command::PhaseGrid, "phase-grid"},
    {Command::Table1, "table1"},
    {Command::Classify, "classify"},
    {Command::CltCheck, "clt-check"},
    {Command::Monotonicity, "monotonicity"},
    {Command::Localize, "localize"},
}};

[[noreturn]] void bad(const std::string& key, const std::string& what) {
  fail(ErrorCode::ConfigError, "config key '" + key + "': " + what);
}

void check(bool ok, const std::string& key, const std::string& what) {
  if (!ok) bad(key, what);
}

void only_keys(const json& j, const std::string& where, std::initializer_list<std::string_view> allowed) {
  check(j.is_object(), where, "expected an object");
  for (const auto& [k, v] : j.items()) {
    bool known = false;
    for (auto a : allowed) known = known || k == a;
    if (!known) bad(where.empty() ? k : where + "." + k, "unknown key");
  }
}

double get_double(const json& j, const std::string& key) {
  check(j.is_number(), key, "expected a number");
  return j.get<double>();
}

int get_int(const json& j, const std::string& key) {
  check(j.is_number_integer(), key, "expected an integer");
  return j.get<int>();
}

std::vector<double> get_doubles(const json& j, const std::string& key) {
  if (j.is_number()) return {j.get<double>()};
  check(j.is_array(), key, "expected a number or an array of numbers");
  std::vector<double> out;
  for (const auto& v : j) out.push_back(get_double(v, key));
  return out;
}

Site get_site(const json& j, const std::string& key) {
  check(j.is_array(), key, "expected an array of integers");
  Site out;
  for (const auto& v : j) out.push_back(get_int(v, key));
  return out;
}

std::string get_string(const json& j, const std::string& key) {
  check(j.is_string(), key, "expected a string");
  return j.get<std::string>();
}

}  // namespace

std::string_view to_string(Command c) {
  for (const auto& [cmd, name] : kCommands)
    if (cmd == c) return name;
  return "unknown";
}

Command parse_command(std::string_view name) {
  for (const auto& [cmd, n] : kCommands)
    if (n == name) return cmd;
  fail(ErrorCode::ConfigError, "unknown command '" + std::string(name) + "'");
}

StepKernel KernelSpec::build() const {
  if (type == "simple") return StepKernel::simple(d);
  if (type == "table") return StepKernel::table(d, steps);
  if (type == "gaussian") return StepKernel::discrete_gaussian(d, center);
  fail(ErrorCode::ConfigError, "unknown kernel type '" + type + "'");
}

Vec RunConfig::field() const { return h.empty() ? Vec(static_cast<std::size_t>(dim()), 0.0) : h; }

std::vector<Vec> RunConfig::fields() const {
  if (!field_line) return {field()};
  std::vector<Vec> out;
  const FieldLine& l = *field_line;
  for (int i = 0; i < l.points; ++i) {
    const double t = l.points > 1 ? l.lo + (l.hi - l.lo) * i / (l.points - 1) : l.lo;
    Vec v = field();
    v[static_cast<std::size_t>(l.axis)] += t;
    out.push_back(std::move(v));
  }
  return out;
}

void validate(const RunConfig& c) {
  check(c.kernel.d >= 1, "kernel.d", "must be >= 1");
  check(c.kernel.type == "simple" || c.kernel.type == "table" || c.kernel.type == "gaussian", "kernel.type",
        "must be one of simple, table, gaussian");
  if (c.kernel.type == "table") {
    check(!c.kernel.steps.empty(), "kernel.steps", "table kernel needs at least one step");
    for (const auto& [x, p] : c.kernel.steps) {
      check(static_cast<int>(x.size()) == c.kernel.d, "kernel.steps", "step has wrong dimension");
      check(p > 0.0 && std::isfinite(p), "kernel.steps", "probabilities must be > 0");
    }
  }
  if (c.kernel.type == "gaussian")
    check(c.kernel.center.empty() || static_cast<int>(c.kernel.center.size()) == c.kernel.d, "kernel.center",
          "must have d entries");
  check(!c.beta.empty(), "beta", "needs at least one value");
  for (double b : c.beta) check(b > 0.0 && std::isfinite(b), "beta", "beta must be > 0");
  if (c.command == Command::Monotonicity)
    for (std::size_t i = 1; i < c.beta.size(); ++i) check(c.beta[i] > c.beta[i - 1], "beta", "must be ascending");
  check(c.h.empty() || static_cast<int>(c.h.size()) == c.dim(), "h", "must have d entries");
  for (double v : c.h) check(std::isfinite(v), "h", "entries must be finite");
  if (c.field_line) {
    check(c.field_line->axis >= 0 && c.field_line->axis < c.dim(), "field_line.axis", "must lie in [0, d)");
    check(c.field_line->points >= 1, "field_line.points", "must be >= 1");
    check(c.field_line->hi >= c.field_line->lo, "field_line", "hi must be >= lo");
  }
  if (c.command == Command::PhaseGrid) {
    check(c.dim() >= 2, "kernel.d", "phase-grid needs d >= 2");
    check(c.grid.axis_a >= 0 && c.grid.axis_a < c.dim(), "grid.axis_a", "must lie in [0, d)");
    check(c.grid.axis_b >= 0 && c.grid.axis_b < c.dim(), "grid.axis_b", "must lie in [0, d)");
    check(c.grid.axis_a != c.grid.axis_b, "grid", "axes must differ");
  }
  check(c.grid.points >= 1, "grid.points", "must be >= 1");
  check(c.grid.hi >= c.grid.lo, "grid", "hi must be >= lo");
  check(c.n >= 1, "n", "must be >= 1");
  check(c.samples >= 1, "samples", "must be >= 1");
  check(c.threads >= 1, "threads", "must be >= 1");
  check(c.memory_budget_bytes > 0, "memory_budget_bytes", "must be > 0");
  check(!c.out.empty(), "out", "must not be empty");
  check(c.burn_in >= 0.0 && c.burn_in < 1.0, "burn_in", "must lie in [0, 1)");
  check(c.series_terms >= 10, "series_terms", "must be >= 10");
  check(c.surface == "two_scale" || c.surface == "single_scale", "surface", "must be two_scale or single_scale");
  const bool random = c.command != Command::Classify && c.command != Command::PhaseGrid;
  check(!random || c.seed.has_value(), "seed", "a seed is required for " + std::string(to_string(c.command)));
}

json to_json(const RunConfig& c) {
  json j;
  j["command"] = to_string(c.command);
  j["weights"] = {{"family", to_string(c.weights.family)}, {"params", c.weights.params}};
  json k = {{"type", c.kernel.type}, {"d", c.kernel.d}};
  if (!c.kernel.steps.empty()) {
    json steps = json::array();
    for (const auto& [x, p] : c.kernel.steps) steps.push_back({{"x", x}, {"p", p}});
    k["steps"] = steps;
  }
  if (!c.kernel.center.empty()) k["center"] = c.kernel.center;
  j["kernel"] = k;
  j["beta"] = c.beta;
  j["h"] = c.h;
  if (c.field_line)
    j["field_line"] = {{"axis", c.field_line->axis},
                       {"lo", c.field_line->lo},
                       {"hi", c.field_line->hi},
                       {"points", c.field_line->points}};
  j["grid"] = {{"axis_a", c.grid.axis_a},
               {"axis_b", c.grid.axis_b},
               {"lo", c.grid.lo},
               {"hi", c.grid.hi},
               {"points", c.grid.points}};
  j["n"] = c.n;
  j["samples"] = c.samples;
  if (c.seed) j["seed"] = *c.seed;
  j["threads"] = c.threads;
  j["memory_budget_bytes"] = c.memory_budget_bytes;
  j["out"] = c.out;
  j["precision"] = c.single_precision ? "single" : "double";
  j["burn_in"] = c.burn_in;
  j["series_terms"] = c.series_terms;
  j["surface"] = c.surface;
  return j;
}

RunConfig apply_json(RunConfig c, const json& j) {
  only_keys(j, "",
            {"command", "weights", "kernel", "beta", "h", "field_line", "grid", "n", "samples", "seed", "threads",
             "memory_budget_bytes", "out", "precision", "burn_in", "series_terms", "surface"});
  if (j.contains("command")) c.command = parse_command(get_string(j["command"], "command"));
  if (j.contains("weights")) {
    const json& w = j["weights"];
    only_keys(w, "weights", {"family", "params"});
    if (w.contains("family")) c.weights.family = parse_weight_family(get_string(w["family"], "weights.family"));
    c.weights.params = w.contains("params") ? get_doubles(w["params"], "weights.params") : std::vector<double>{};
  }
  if (j.contains("kernel")) {
    const json& k = j["kernel"];
    only_keys(k, "kernel", {"type", "d", "steps", "center"});
    if (k.contains("type")) c.kernel.type = get_string(k["type"], "kernel.type");
    if (k.contains("d")) c.kernel.d = get_int(k["d"], "kernel.d");
    c.kernel.steps.clear();
    if (k.contains("steps")) {
      check(k["steps"].is_array(), "kernel.steps", "expected an array");
      for (const auto& s : k["steps"]) {
        only_keys(s, "kernel.steps", {"x", "p"});
        check(s.contains("x") && s.contains("p"), "kernel.steps", "each step needs x and p");
        c.kernel.steps.emplace_back(get_site(s["x"], "kernel.steps.x"), get_double(s["p"], "kernel.steps.p"));
      }
    }
    c.kernel.center = k.contains("center") ? get_doubles(k["center"], "kernel.center") : Vec{};
  }
  if (j.contains("beta")) c.beta = get_doubles(j["beta"], "beta");
  if (j.contains("h")) c.h = get_doubles(j["h"], "h");
  if (j.contains("field_line")) {
    const json& l = j["field_line"];
    if (l.is_null()) {
      c.field_line.reset();
    } else {
      only_keys(l, "field_line", {"axis", "lo", "hi", "points"});
      FieldLine f;
      if (l.contains("axis")) f.axis = get_int(l["axis"], "field_line.axis");
      if (l.contains("lo")) f.lo = get_double(l["lo"], "field_line.lo");
      if (l.contains("hi")) f.hi = get_double(l["hi"], "field_line.hi");
      if (l.contains("points")) f.points = get_int(l["points"], "field_line.points");
      c.field_line = f;
    }
  }
  if (j.contains("grid")) {
    const json& g = j["grid"];
    only_keys(g, "grid", {"axis_a", "axis_b", "lo", "hi", "points"});
    if (g.contains("axis_a")) c.grid.axis_a = get_int(g["axis_a"], "grid.axis_a");
    if (g.contains("axis_b")) c.grid.axis_b = get_int(g["axis_b"], "grid.axis_b");
    if (g.contains("lo")) c.grid.lo = get_double(g["lo"], "grid.lo");
    if (g.contains("hi")) c.grid.hi = get_double(g["hi"], "grid.hi");
    if (g.contains("points")) c.grid.points = get_int(g["points"], "grid.points");
  }
  if (j.contains("n")) c.n = get_int(j["n"], "n");
  if (j.contains("samples")) c.samples = get_int(j["samples"], "samples");
  if (j.contains("seed")) {
    check(j["seed"].is_number_unsigned() || (j["seed"].is_number_integer() && j["seed"].get<std::int64_t>() >= 0),
          "seed", "expected a non-negative integer");
    c.seed = j["seed"].get<std::uint64_t>();
  }
  if (j.contains("threads")) c.threads = get_int(j["threads"], "threads");
  if (j.contains("memory_budget_bytes")) {
    const json& m = j["memory_budget_bytes"];
    if (m.is_string()) {
      c.memory_budget_bytes = parse_bytes(m.get<std::string>());
    } else {
      check(m.is_number_unsigned() || (m.is_number_integer() && m.get<std::int64_t>() > 0), "memory_budget_bytes",
            "expected a positive integer");
      c.memory_budget_bytes = m.get<std::size_t>();
    }
  }
  if (j.contains("out")) c.out = get_string(j["out"], "out");
  if (j.contains("precision")) {
    const std::string p = get_string(j["precision"], "precision");
    check(p == "single" || p == "double", "precision", "must be single or double");
    c.single_precision = p == "single";
  }
  if (j.contains("burn_in")) c.burn_in = get_double(j["burn_in"], "burn_in");
  if (j.contains("series_terms")) c.series_terms = get_int(j["series_terms"], "series_terms");
  if (j.contains("surface")) c.surface = get_string(j["surface"], "surface");
  return c;
}

RunConfig config_from_json(const json& j) { return apply_json(RunConfig{}, j); }

std::size_t parse_bytes(std::string_view text) {
  std::size_t value = 0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  require(ec == std::errc() && value > 0, ErrorCode::ConfigError,
          "memory budget '" + std::string(text) + "' is not a positive byte count");
  std::string_view rest(ptr, static_cast<std::size_t>(text.data() + text.size() - ptr));
  if (!rest.empty() && (rest.back() == 'B' || rest.back() == 'b')) rest.remove_suffix(1);
  if (rest.size() == 2 && (rest[1] == 'i' || rest[1] == 'I')) rest.remove_suffix(1);
  int shift = 0;
  if (rest.empty()) shift = 0;
  else if (rest == "K" || rest == "k") shift = 10;
  else if (rest == "M" || rest == "m") shift = 20;
  else if (rest == "G" || rest == "g") shift = 30;
  else fail(ErrorCode::ConfigError, "memory budget '" + std::string(text) + "' has an unknown suffix");
  require(value <= (std::numeric_limits<std::size_t>::max() >> shift), ErrorCode::ConfigError,
          "memory budget '" + std::string(text) + "' is too large");
  return value << shift;
}

std::vector<double> parse_list(std::string_view text) {
  std::vector<double> out;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const std::size_t end = std::min(text.find(',', pos), text.size());
    const std::string item(text.substr(pos, end - pos));
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(item, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    require(used > 0 && used == item.size(), ErrorCode::ConfigError, "'" + item + "' is not a number");
    out.push_back(v);
    pos = end + 1;
  }
  return out;
}

}  // namespace polymerlab
