#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "polymerlab/disorder.hpp"
#include "polymerlab/engine.hpp"
#include "polymerlab/free_energy.hpp"
#include "polymerlab/kernels.hpp"
#include "polymerlab/phase.hpp"

namespace polymerlab {

inline constexpr double kDefaultBurnIn = 0.1;

struct ExponentFit {
  std::string statistic;
  /// t(k) for k = 1..n.
  std::vector<double> series;
  double burn_in = kDefaultBurnIn;
  /// Least squares on (log k, log t(k)) over k > burn_in * n.
  double slope = 0.0;
  double slope_se = 0.0;
  double intercept = 0.0;
  double r2 = 0.0;
  int points = 0;
};

ExponentFit fit_exponent(std::span<const double> series, double burn_in = kDefaultBurnIn,
                         std::string statistic = {});

/// Shared settings of the Monte Carlo experiments.
struct ExperimentSetup {
  WeightModel model = WeightModel::uniform01();
  StepKernel p = StepKernel::simple(1);
  double beta = 1.0;
  Vec h;  // empty means zero
  int n = 100;
  int samples = 10;
  std::uint64_t seed = 1;
  RunOptions run;

  Vec field() const { return h.empty() ? Vec(static_cast<std::size_t>(p.dim()), 0.0) : h; }
};

inline constexpr std::array<const char*, 4> kTable1Names = {
    "logz_stdev", "gibbs_endpoint_stdev", "annealed_endpoint_stdev", "argmax_stdev"};

/// Fluctuation statistics per time k = 1..n, across environment samples:
///   0: sqrt(Var log Z_k)
///   1: sqrt(E[<|X_k|^2> - <|X_k|>^2])
///   2: sqrt(E<|X_k|^2> - (E<|X_k|>)^2)
///   3: sqrt(Var |A_k|), A_k the most likely endpoint
/// Brackets are Gibbs averages under the kernel q(h) at inverse temperature beta.
struct Table1Result {
  int d = 0;
  Vec h;
  double beta = 0.0;
  int n = 0;
  int samples = 0;
  std::array<std::vector<double>, 4> series;
  std::array<ExponentFit, 4> fits;
};

Table1Result table1_statistics(const ExperimentSetup& setup, double burn_in = kDefaultBurnIn);

struct CurveRow {
  double beta = 0.0;
  Vec h;
  double g = 0.0;          // Legendre estimate
  double se = 0.0;         // standard error at the maximizing site
  double annealed = 0.0;
  double gap = 0.0;        // annealed - g
};

/// Legendre transform of one surface at each field, with the annealed bound.
std::vector<CurveRow> legendre_curve(const P2PSurface& surface, const WeightModel& model, const StepKernel& p,
                                     std::span<const Vec> fields);

enum class SurfaceEstimator { SingleScale, TwoScale };

std::string_view to_string(SurfaceEstimator e);

P2PSurface estimate_surface(const ExperimentSetup& setup, double beta, SurfaceEstimator estimator);

/// g_pl(h) for each beta and field, from one point-to-point surface per beta.
std::vector<CurveRow> figure2_curve(const ExperimentSetup& setup, std::span<const double> betas,
                                    std::span<const Vec> fields,
                                    SurfaceEstimator estimator = SurfaceEstimator::TwoScale);

struct PhaseGridSpec {
  int axis_a = 0;
  int axis_b = 1;
  double lo = -2.0;
  double hi = 2.0;
  int points = 9;  // per axis
  L2Options l2;
};

struct PhaseGridPoint {
  Vec h;
  PhaseReport report;
};

/// Classifies every field on a square grid in the (axis_a, axis_b) plane.
std::vector<PhaseGridPoint> phase_grid(const WeightModel& model, const StepKernel& p, double beta,
                                       const PhaseGridSpec& spec);

struct LocalizationResult {
  int n = 0;
  /// Per sample: J_1..J_n and their average.
  std::vector<std::vector<double>> series;
  std::vector<double> averages;
  double mean = 0.0;
  double se = 0.0;
};

LocalizationResult localization_run(const ExperimentSetup& setup);

struct CltRun {
  std::vector<EndpointSummary> summaries;
  CltReport report;
  bool l2_certified = false;
  double l2_margin = 0.0;
};

/// Endpoint moments at time n for each sample, compared with N(n m_q, n Sigma_q).
CltRun clt_run(const ExperimentSetup& setup, const L2Options& l2 = {});

}  // namespace polymerlab
