#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "polymerlab/disorder.hpp"
#include "polymerlab/engine.hpp"
#include "polymerlab/kernels.hpp"

namespace polymerlab {

/// Execution settings shared by the Monte Carlo drivers.
struct RunOptions {
  int threads = 1;
  EngineOptions engine;
  bool single_precision = false;
};

struct FreeEnergyEstimate {
  double beta = 0.0;
  Vec h;
  int n = 0;
  int samples = 0;
  /// Per-sample g_n values in sample order.
  std::vector<double> values;
  double mean = 0.0;
  double se = 0.0;
  /// (Lambda(beta) + Lambda_p(beta h)) / beta.
  double annealed = 0.0;
  double gap = 0.0;
  double gap_se = 0.0;
};

/// g_n(beta, h) = (1/(beta n)) log Z_{n,beta,q(h)} + Lambda_p(beta h)/beta,
/// one environment per sample index.
FreeEnergyEstimate estimate_gpl(const WeightModel& model, const StepKernel& p, double beta,
                                std::span<const double> h, int n, int samples, std::uint64_t seed,
                                const RunOptions& options = {});

/// Sample-averaged (1/(beta n)) log Z_n(0, x) over the reachable window.
struct P2PSurface {
  int n = 0;
  double beta = 0.0;
  int samples = 0;
  Box window;
  /// Mean over samples; -inf where some sample had no mass.
  std::vector<double> value;
  std::vector<double> stdev;
  std::vector<int> count;

  double at(std::span<const int> x) const;
  bool finite(std::size_t i) const { return count[i] == samples; }
};

P2PSurface p2p_surface(const WeightModel& model, const StepKernel& p, double beta, int n, int samples,
                       std::uint64_t seed, const RunOptions& options = {});

/// Two-scale surface (log Z_{2n}(0, 2x) - log Z_n(0, x)) / (beta n), both
/// from the same environment. The polynomial prefactor of Z_n(0, x) cancels
/// up to (d/2) log 2 / n, where the single-scale surface carries a
/// (d/2) log n / n bias. Needs the window of time 2n.
P2PSurface p2p_surface_two_scale(const WeightModel& model, const StepKernel& p, double beta, int n,
                                 int samples, std::uint64_t seed, const RunOptions& options = {});

/// max over sites x with a finite value of surface(x) + h . x / n.
double legendre(const P2PSurface& surface, std::span<const double> h);

struct MonotonicityRow {
  double beta = 0.0;
  /// Mean and standard error of ghat_n(beta, h0) - Lambda(beta).
  double mean = 0.0;
  double se = 0.0;
  /// Against the previous beta (zero for the first row): mean and standard
  /// error of the paired per-sample differences.
  double diff = 0.0;
  double diff_se = 0.0;
  /// Fraction of samples whose own difference is positive.
  double violation_rate = 0.0;
};

/// ghat_n(beta, h0) = (1/n) log Z_{n,beta,q} + Lambda_p(h0) with q = tilt(p, 1, h0)
/// held fixed across beta, evaluated on the same environments for every beta.
std::vector<MonotonicityRow> monotonicity_sweep(const WeightModel& model, const StepKernel& p,
                                                std::span<const double> h0, std::span<const double> betas,
                                                int n, int samples, std::uint64_t seed,
                                                const RunOptions& options = {});

/// log Z_n for one environment sample, in the precision chosen by `options`.
double sample_log_partition(const StepKernel& q, double beta, const Environment& env, int n,
                            const RunOptions& options);

}  // namespace polymerlab
