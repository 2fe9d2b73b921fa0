#pragma once

#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "polymerlab/disorder.hpp"
#include "polymerlab/kernels.hpp"

namespace polymerlab {

/// M2(beta) = M(2 beta) / M(beta)^2.
double second_moment_ratio(const WeightModel& model, double beta);

/// Truncated return series sum_{n=1}^N P(T_n = 0) with an upper bound on the
/// remainder, C sum_{n>N} n^{-d/2} <= C N^{1-d/2} / (d/2 - 1), where C is 1.5
/// times the largest n^{d/2} P(T_n = 0) among the last 10 terms.
struct ReturnSeries {
  int d = 0;
  int terms_requested = 0;
  /// Terms actually summed; lower than requested when the memory budget binds.
  int terms = 0;
  std::vector<double> returns;  // P(T_n = 0), n = 1..terms
  double R = 0.0;
  double tail_constant = 0.0;
  double tail_bound = 0.0;
  /// n^{d/2} P(T_n = 0) predicted by the local CLT, for comparison.
  std::optional<double> clt_constant;

  double pi() const { return R / (1.0 + R); }
  /// Intersection probability with the remainder bound added to R.
  double pi_upper() const { return (R + tail_bound) / (1.0 + R + tail_bound); }
};

inline constexpr double kTailSafety = 1.5;
inline constexpr int kTailCalibrationTerms = 10;
inline constexpr int kDefaultSeriesTerms = 128;

/// Return series of a symmetric difference kernel by exact convolution.
ReturnSeries return_series(const StepKernel& dk, const LatticeBasis& basis, int N,
                           std::size_t memory_budget = std::size_t{4} << 30);

/// Same series for the difference walk of q, computed as
/// P(T_n = 0) = sum_x P(S_n = x)^2 from the single walk. Cheaper: the single
/// walk's window is half as wide.
ReturnSeries return_series_from_walk(const StepKernel& q, int N, std::size_t memory_budget = std::size_t{4} << 30);

/// R / (1 + R).
double intersection_probability(double R);

struct L2Result {
  bool certified = false;
  double margin = 0.0;  // 1/pi_upper - M2
  double M2 = 0.0;
  double pi = 0.0;
  double pi_err = 0.0;  // pi_upper - pi
  ReturnSeries series;
};

struct L2Options {
  int series_terms = kDefaultSeriesTerms;
  std::size_t memory_budget = std::size_t{4} << 30;
};

/// Second-moment certificate: M2(beta) < 1 / pi(q(h)).
L2Result l2_criterion(const WeightModel& model, const StepKernel& p, double beta, std::span<const double> h,
                      const L2Options& options = {});

/// r(theta) = M(theta beta) / M(beta)^theta * sum_x q(x)^theta.
double fractional_moment(const WeightModel& model, const StepKernel& q, double beta, double theta);
double log_fractional_moment(const WeightModel& model, const StepKernel& q, double beta, double theta);

struct StrongDisorderResult {
  bool certified = false;
  double theta_star = 1.0;
  double r_min = 1.0;
  double H_weights = 0.0;
  double H_walk = 0.0;
  /// H(Q_beta | P) > H(q(h)).
  bool entropy_comparison = false;
};

inline constexpr double kStrongDisorderMargin = 1e-9;

/// Minimizes log r over (0, 1) by golden section; certified iff
/// r_min < 1 - kStrongDisorderMargin.
StrongDisorderResult strong_disorder_test(const WeightModel& model, const StepKernel& p, double beta,
                                          std::span<const double> h);

enum class PhaseClass { L2Weak, EntropyLowTemp, Undetermined };

std::string_view to_string(PhaseClass c);

struct PhaseReport {
  double beta = 0.0;
  Vec h;
  double M2 = 0.0;
  /// Empty when the L2 criterion does not apply (d <= 2).
  std::optional<double> pi;
  std::optional<double> pi_err;
  std::optional<double> l2_margin;
  int series_terms = 0;
  double series_tail = 0.0;
  double r_min = 1.0;
  double theta_star = 1.0;
  double H_weights = 0.0;
  double H_walk = 0.0;
  std::optional<double> H_K;
  std::size_t K_size = 0;
  /// |K(h)| > 1: h may lie in the exceptional set.
  bool possibly_in_D = false;
  bool entropy_comparison = false;
  /// Both certificates fired; reported as undetermined.
  bool conflict = false;
  PhaseClass classification = PhaseClass::Undetermined;
};

PhaseReport classify(const WeightModel& model, const StepKernel& p, double beta, std::span<const double> h,
                     const L2Options& options = {});

}  // namespace polymerlab
