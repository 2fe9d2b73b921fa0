#include "polymerlab/cli.hpp"

#include <CLI11.hpp>

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <new>
#include <sstream>

#include "polymerlab/error.hpp"
#include "polymerlab/experiments.hpp"
#include "polymerlab/free_energy.hpp"
#include "polymerlab/phase.hpp"
#include "polymerlab/stats.hpp"

namespace polymerlab {

using nlohmann::json;

namespace {

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return buf;
}

std::string h_header(int d, const char* prefix = "h") {
  std::string s;
  for (int a = 1; a <= d; ++a) s += std::string(",") + prefix + std::to_string(a);
  return s;
}

std::string join(std::span<const double> v) {
  std::string s;
  for (double x : v) s += "," + num(x);
  return s;
}

json eigen_json(const Eigen::MatrixXd& m) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(row);
  }
  return rows;
}

template <class T>
json opt_json(const std::optional<T>& v) {
  return v ? json(*v) : json(nullptr);
}

json report_json(const PhaseReport& r) {
  return {{"beta", r.beta},
          {"h", r.h},
          {"classification", to_string(r.classification)},
          {"M2", r.M2},
          {"pi", opt_json(r.pi)},
          {"pi_err", opt_json(r.pi_err)},
          {"l2_margin", opt_json(r.l2_margin)},
          {"series_terms", r.series_terms},
          {"series_tail", r.series_tail},
          {"r_min", r.r_min},
          {"theta_star", r.theta_star},
          {"H_weights", r.H_weights},
          {"H_walk", r.H_walk},
          {"H_K", opt_json(r.H_K)},
          {"K_size", r.K_size},
          {"possibly_in_D", r.possibly_in_D},
          {"entropy_comparison", r.entropy_comparison},
          {"conflict", r.conflict}};
}

struct Context {
  const RunConfig& c;
  WeightModel model;
  StepKernel p;
  RunOptions run;
  L2Options l2;

  explicit Context(const RunConfig& cfg) : c(cfg), model(cfg.weights.build()), p(cfg.kernel.build()) {
    run.threads = cfg.threads;
    run.engine.memory_budget = cfg.memory_budget_bytes;
    run.single_precision = cfg.single_precision;
    l2.series_terms = cfg.series_terms;
    l2.memory_budget = cfg.memory_budget_bytes;
  }

  ExperimentSetup setup(double beta) const {
    ExperimentSetup s;
    s.model = model;
    s.p = p;
    s.beta = beta;
    s.h = c.field();
    s.n = c.n;
    s.samples = c.samples;
    s.seed = *c.seed;
    s.run = run;
    return s;
  }
};

void run_gpl(const Context& ctx, RunOutput& out) {
  const int d = ctx.p.dim();
  std::string csv = "beta" + h_header(d) + ",n,samples,g_mean,g_se,annealed,gap\n";
  std::string jsonl;
  json summary = json::array();
  for (double beta : ctx.c.beta)
    for (const Vec& h : ctx.c.fields()) {
      const FreeEnergyEstimate e =
          estimate_gpl(ctx.model, ctx.p, beta, h, ctx.c.n, ctx.c.samples, *ctx.c.seed, ctx.run);
      csv += num(beta) + join(h) + "," + std::to_string(e.n) + "," + std::to_string(e.samples) + "," + num(e.mean) +
             "," + num(e.se) + "," + num(e.annealed) + "," + num(e.gap) + "\n";
      for (std::size_t s = 0; s < e.values.size(); ++s)
        jsonl += json{{"beta", beta}, {"h", h}, {"sample", s}, {"g", e.values[s]}}.dump() + "\n";
      summary.push_back({{"beta", beta},
                         {"h", h},
                         {"g_mean", e.mean},
                         {"g_se", e.se},
                         {"annealed", e.annealed},
                         {"gap", e.gap},
                         {"gap_se", e.gap_se}});
    }
  out.files.push_back({"gpl_curve.csv", csv});
  out.files.push_back({"gpl_samples.jsonl", jsonl});
  out.files.push_back({"gpl_summary.json", summary.dump(2) + "\n"});
}

void run_p2p(const Context& ctx, RunOutput& out) {
  const int d = ctx.p.dim();
  const auto estimator = ctx.c.surface == "two_scale" ? SurfaceEstimator::TwoScale : SurfaceEstimator::SingleScale;
  out.approximations["surface_estimator"] = to_string(estimator);
  std::string curve = "beta" + h_header(d) + ",g,se,annealed,gap\n";
  const auto fields = ctx.c.fields();
  for (std::size_t b = 0; b < ctx.c.beta.size(); ++b) {
    const double beta = ctx.c.beta[b];
    const P2PSurface surf = estimate_surface(ctx.setup(beta), beta, estimator);
    std::string csv = h_header(d, "x").substr(1) + ",value,stdev\n";
    for (std::size_t k = 0; k < surf.value.size(); ++k) {
      if (!surf.finite(k)) continue;
      std::string row;
      for (int a : surf.window.site(k)) row += std::to_string(a) + ",";
      csv += row + num(surf.value[k]) + "," + num(surf.stdev[k]) + "\n";
    }
    out.files.push_back({"surface_beta" + std::to_string(b) + ".csv", csv});
    for (const CurveRow& r : legendre_curve(surf, ctx.model, ctx.p, fields))
      curve += num(r.beta) + join(r.h) + "," + num(r.g) + "," + num(r.se) + "," + num(r.annealed) + "," +
               num(r.gap) + "\n";
  }
  out.files.push_back({"legendre_curve.csv", curve});
}

void run_classify(const Context& ctx, RunOutput& out) {
  json reports = json::array();
  for (double beta : ctx.c.beta)
    for (const Vec& h : ctx.c.fields()) reports.push_back(report_json(classify(ctx.model, ctx.p, beta, h, ctx.l2)));
  const json doc = reports.size() == 1 ? reports[0] : reports;
  out.files.push_back({"classify.json", doc.dump(2) + "\n"});
  out.console = doc.dump(2) + "\n";
}

void run_phase_grid(const Context& ctx, RunOutput& out) {
  const int d = ctx.p.dim();
  PhaseGridSpec spec;
  spec.axis_a = ctx.c.grid.axis_a;
  spec.axis_b = ctx.c.grid.axis_b;
  spec.lo = ctx.c.grid.lo;
  spec.hi = ctx.c.grid.hi;
  spec.points = ctx.c.grid.points;
  spec.l2 = ctx.l2;
  std::string csv = "beta" + h_header(d) +
                    ",classification,M2,pi,l2_margin,r_min,theta_star,H_weights,H_walk,K_size,possibly_in_D\n";
  std::string jsonl;
  auto opt = [](const std::optional<double>& v) { return v ? num(*v) : std::string(); };
  for (double beta : ctx.c.beta)
    for (const PhaseGridPoint& pt : phase_grid(ctx.model, ctx.p, beta, spec)) {
      const PhaseReport& r = pt.report;
      csv += num(beta) + join(pt.h) + "," + std::string(to_string(r.classification)) + "," + num(r.M2) + "," +
             opt(r.pi) + "," + opt(r.l2_margin) + "," + num(r.r_min) + "," + num(r.theta_star) + "," +
             num(r.H_weights) + "," + num(r.H_walk) + "," + std::to_string(r.K_size) + "," +
             (r.possibly_in_D ? "1" : "0") + "\n";
      jsonl += report_json(r).dump() + "\n";
    }
  out.files.push_back({"phase_grid.csv", csv});
  out.files.push_back({"phase_grid.jsonl", jsonl});
}

void run_table1(const Context& ctx, RunOutput& out) {
  out.approximations["burn_in"] = ctx.c.burn_in;
  const Table1Result r = table1_statistics(ctx.setup(ctx.c.beta.front()), ctx.c.burn_in);
  std::string csv = "k";
  for (const char* name : kTable1Names) csv += std::string(",") + name;
  csv += "\n";
  for (int k = 1; k <= r.n; ++k) {
    csv += std::to_string(k);
    for (const auto& s : r.series) csv += "," + num(s[static_cast<std::size_t>(k - 1)]);
    csv += "\n";
  }
  json summary = json::array();
  for (const ExponentFit& f : r.fits)
    summary.push_back({{"statistic", f.statistic},
                       {"d", r.d},
                       {"h", r.h},
                       {"beta", r.beta},
                       {"n", r.n},
                       {"samples", r.samples},
                       {"exponent", std::isfinite(f.slope) ? json(f.slope) : json(nullptr)},
                       {"stderr", std::isfinite(f.slope_se) ? json(f.slope_se) : json(nullptr)},
                       {"r2", std::isfinite(f.r2) ? json(f.r2) : json(nullptr)},
                       {"burn_in", f.burn_in},
                       {"points", f.points}});
  out.files.push_back({"table1_series.csv", csv});
  out.files.push_back({"table1_summary.json", summary.dump(2) + "\n"});
}

void run_clt(const Context& ctx, RunOutput& out) {
  const CltRun r = clt_run(ctx.setup(ctx.c.beta.front()), ctx.l2);
  const CltReport& rep = r.report;
  std::string jsonl;
  for (std::size_t s = 0; s < r.summaries.size(); ++s)
    jsonl += json{{"sample", s},
                  {"log_partition", r.summaries[s].log_partition},
                  {"mean", r.summaries[s].mean},
                  {"centered_mean", rep.centered_mean[s]},
                  {"second_moment", rep.second_moment[s]},
                  {"cross_moment", rep.cross_moment[s]}}
                 .dump() +
             "\n";
  const double trace = rep.sigma.trace();
  const json summary = {{"n", rep.n},
                        {"d", rep.d},
                        {"beta", ctx.c.beta.front()},
                        {"h", ctx.c.field()},
                        {"drift", rep.drift},
                        {"sigma", eigen_json(rep.sigma)},
                        {"sigma_trace", trace},
                        {"avg_second_moment", rep.avg_second_moment},
                        {"second_moment_ratio", rep.avg_second_moment / trace},
                        {"avg_cross_moment", rep.avg_cross_moment},
                        {"avg_centered_mean", rep.avg_centered_mean},
                        {"avg_velocity", rep.avg_velocity},
                        {"l2_certified", r.l2_certified},
                        {"l2_margin", r.l2_margin},
                        {"phase_mismatch", rep.phase_mismatch}};
  if (rep.d >= 3) out.approximations["series_terms"] = ctx.c.series_terms;
  out.files.push_back({"clt_samples.jsonl", jsonl});
  out.files.push_back({"clt_summary.json", summary.dump(2) + "\n"});
}

void run_monotonicity(const Context& ctx, RunOutput& out) {
  const Vec h0 = ctx.c.field();
  const auto rows =
      monotonicity_sweep(ctx.model, ctx.p, h0, ctx.c.beta, ctx.c.n, ctx.c.samples, *ctx.c.seed, ctx.run);
  std::string csv = "beta,mean,se,diff,diff_se,violation_rate\n";
  for (const auto& r : rows)
    csv += num(r.beta) + "," + num(r.mean) + "," + num(r.se) + "," + num(r.diff) + "," + num(r.diff_se) + "," +
           num(r.violation_rate) + "\n";
  out.files.push_back({"monotonicity.csv", csv});
}

void run_localize(const Context& ctx, RunOutput& out) {
  const LocalizationResult r = localization_run(ctx.setup(ctx.c.beta.front()));
  std::string csv = "t,j_mean\n";
  for (int t = 0; t < r.n; ++t) {
    CompensatedSum s;
    for (const auto& js : r.series) s.add(js[static_cast<std::size_t>(t)]);
    csv += std::to_string(t + 1) + "," + num(s.value() / static_cast<double>(r.series.size())) + "\n";
  }
  std::string jsonl;
  for (std::size_t s = 0; s < r.averages.size(); ++s)
    jsonl += json{{"sample", s}, {"average", r.averages[s]}}.dump() + "\n";
  out.files.push_back({"localize_series.csv", csv});
  out.files.push_back({"localize_samples.jsonl", jsonl});
  out.files.push_back(
      {"localize_summary.json", json{{"n", r.n}, {"mean", r.mean}, {"se", r.se}}.dump(2) + "\n"});
}

}  // namespace

RunOutput execute(const RunConfig& config) {
  validate(config);
  const Context ctx(config);
  RunOutput out;
  out.approximations["precision"] = config.single_precision ? "single" : "double";
  if (ctx.p.kind() == KernelKind::DiscreteGaussian) {
    out.approximations["kernel_truncation_radius"] = ctx.p.truncation_radius();
    out.approximations["kernel_tail_mass"] = ctx.p.tail_mass();
  }
  switch (config.command) {
    case Command::Gpl: run_gpl(ctx, out); break;
    case Command::P2p: run_p2p(ctx, out); break;
    case Command::PhaseGrid: run_phase_grid(ctx, out); break;
    case Command::Table1: run_table1(ctx, out); break;
    case Command::Classify: run_classify(ctx, out); break;
    case Command::CltCheck: run_clt(ctx, out); break;
    case Command::Monotonicity: run_monotonicity(ctx, out); break;
    case Command::Localize: run_localize(ctx, out); break;
  }
  if (config.command == Command::Classify || config.command == Command::PhaseGrid) {
    if (ctx.p.dim() >= 3) {
      out.approximations["series_terms"] = config.series_terms;
      out.approximations["series_tail_rule"] = "1.5 max_{last 10} n^{d/2} P(T_n=0) N^{1-d/2} / (d/2 - 1)";
    }
  }
  return out;
}

bool parse_arguments(int argc, const char* const* argv, RunConfig& config) {
  CLI::App app{"Directed polymers in random environments with an external field", "polymerlab"};
  app.require_subcommand(1);
  // --h is the field, so help is long-form only.
  app.set_help_flag("--help", "Print this help message and exit");
  app.set_version_flag("--version", std::string(POLYMERLAB_VERSION));

  std::string config_file, beta, h, out;
  std::optional<int> n, samples, threads;
  std::optional<std::uint64_t> seed;
  std::vector<CLI::App*> subs;
  for (const char* name :
       {"gpl", "p2p", "phase-grid", "table1", "classify", "clt-check", "monotonicity", "localize"}) {
    CLI::App* sub = app.add_subcommand(name);
    sub->set_help_flag("--help", "Print this help message and exit");
    sub->add_option("--config", config_file, "JSON configuration; its keys override the flags");
    sub->add_option("--beta", beta, "Inverse temperature, or a comma-separated list");
    sub->add_option("--h", h, "External field, comma-separated");
    sub->add_option("--n", n, "Number of steps");
    sub->add_option("--samples", samples, "Number of environment samples");
    sub->add_option("--seed", seed, "Random seed");
    sub->add_option("--threads", threads, "Worker threads");
    sub->add_option("--out", out, "Output directory");
    subs.push_back(sub);
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    std::cout << app.help();
    return false;
  } catch (const CLI::CallForVersion&) {
    std::cout << POLYMERLAB_VERSION << "\n";
    return false;
  } catch (const CLI::ParseError& e) {
    fail(ErrorCode::ConfigError, e.what());
  }
  for (CLI::App* sub : subs)
    if (sub->parsed()) config.command = parse_command(sub->get_name());

  if (const char* env = std::getenv("POLYMERLAB_MEM_BUDGET"); env && *env)
    config.memory_budget_bytes = parse_bytes(env);

  json flags = json::object();
  if (!beta.empty()) flags["beta"] = parse_list(beta);
  if (!h.empty()) flags["h"] = parse_list(h);
  if (n) flags["n"] = *n;
  if (samples) flags["samples"] = *samples;
  if (seed) flags["seed"] = *seed;
  if (threads) flags["threads"] = *threads;
  if (!out.empty()) flags["out"] = out;
  config = apply_json(config, flags);

  bool file_sets_d = false;
  if (!config_file.empty()) {
    std::ifstream in(config_file);
    require(static_cast<bool>(in), ErrorCode::ConfigError, "cannot open config file '" + config_file + "'");
    json j;
    try {
      j = json::parse(in);
    } catch (const json::parse_error& e) {
      fail(ErrorCode::ConfigError, "config file '" + config_file + "': " + e.what());
    }
    require(!j.contains("command") || j["command"] == to_string(config.command), ErrorCode::ConfigError,
            "config key 'command' disagrees with the subcommand");
    file_sets_d = j.contains("kernel") && j["kernel"].contains("d");
    config = apply_json(config, j);
  }
  // Without an explicit dimension the field fixes it.
  if (!file_sets_d && !config.h.empty()) config.kernel.d = static_cast<int>(config.h.size());
  return true;
}

void write_outputs(const RunConfig& config, const RunOutput& output, double wall_seconds) {
  namespace fs = std::filesystem;
  const fs::path dir(config.out);
  std::error_code ec;
  fs::create_directories(dir, ec);
  require(!ec, ErrorCode::ConfigError, "cannot create output directory '" + config.out + "': " + ec.message());
  const json provenance = {{"config", to_json(config)},
                           {"seed", config.seed ? json(*config.seed) : json(nullptr)},
                           {"version", POLYMERLAB_VERSION},
                           {"wall_time_seconds", wall_seconds},
                           {"approximations", output.approximations}};
  auto files = output.files;
  files.push_back({"provenance.json", provenance.dump(2) + "\n"});
  for (const OutputFile& f : files) {
    std::ofstream os(dir / f.name, std::ios::binary);
    os << f.content;
    require(static_cast<bool>(os), ErrorCode::ConfigError, "cannot write '" + (dir / f.name).string() + "'");
  }
}

int run_cli(int argc, const char* const* argv) {
  try {
    RunConfig config;
    if (!parse_arguments(argc, argv, config)) return 0;
    const auto start = std::chrono::steady_clock::now();
    const RunOutput output = execute(config);
    const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    write_outputs(config, output, wall);
    std::cout << output.console;
    return 0;
  } catch (const Error& e) {
    // what() already starts with the code name; add the category when it differs.
    if (to_string(e.code()) == to_string(e.category()))
      std::cerr << "polymerlab: " << e.what() << "\n";
    else
      std::cerr << "polymerlab: " << to_string(e.category()) << ": " << e.what() << "\n";
    switch (e.category()) {
      case ErrorCategory::Config: return 2;
      case ErrorCategory::Resource: return 3;
      case ErrorCategory::Numeric: return 4;
    }
    return 4;
  } catch (const std::bad_alloc&) {
    std::cerr << "polymerlab: ResourceError: out of memory\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "polymerlab: NumericError: " << e.what() << "\n";
    return 4;
  }
}

}  // namespace polymerlab
