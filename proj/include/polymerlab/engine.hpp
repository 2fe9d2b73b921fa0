#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <cstdint>
#include <limits>
#include <memory>
#include <optional>
#include <span>
#include <vector>

#include "polymerlab/disorder.hpp"
#include "polymerlab/kernels.hpp"
#include "polymerlab/lattice.hpp"

namespace polymerlab {

struct EngineOptions {
  /// Cap on the two slab buffers together; exceeding it raises WindowOverflow.
  std::size_t memory_budget = std::size_t{4} << 30;
  /// Allocate buffers for this many steps up front (0 grows on demand).
  int reserve_steps = 0;
};

/// Nonzero cells of one window row, as offsets [lo, hi) along the last axis.
struct RowRange {
  int lo = 0;
  int hi = 0;
  bool empty() const { return hi <= lo; }
};

/// Point-to-point partition functions Z_n(x) started at the origin, over the
/// reachable box at time n. Values are stored linearly as Z_n(x) exp(-c_n)
/// with a running log scale c_n, so log Z_n(x) = c_n + log(value). Sites whose
/// mass falls below the smallest normal number relative to the maximum are
/// dropped (stored as 0), which also encodes parity.
template <class Real>
class PolymerFieldT {
 public:
  /// Polymer with step kernel q (already tilted), inverse temperature beta
  /// and the given environment. beta = 0 never reads the environment.
  PolymerFieldT(StepKernel q, double beta, Environment env, EngineOptions options = {});
  /// Free walk (beta = 0): Z_n(x) = P_q(S_n = x).
  explicit PolymerFieldT(StepKernel q, EngineOptions options = {});

  /// Bytes held by the two slab buffers once the field reaches time n.
  static std::size_t bytes_required(const StepKernel& q, int n);

  int time() const { return n_; }
  double beta() const { return beta_; }
  const StepKernel& kernel() const { return q_; }
  const Environment& environment() const { return env_; }
  const Box& window() const { return box_; }
  std::span<const RowRange> row_ranges() const { return ranges_; }

  /// Advances from time n to n + 1.
  void step();
  void advance_to(int n);

  /// log Z_n(x); -inf off the reachable set.
  double log_z(std::span<const int> x) const;
  /// log of the point-to-level partition function Z_n = sum_x Z_n(x).
  double log_partition() const;
  /// c_n: stored values are Z_n(x) exp(-c_n).
  double log_scale() const { return scale_; }
  /// XOR of the bit patterns of every weight read so far. Equal checksums
  /// across runs mean identical weights were read.
  std::uint64_t weight_checksum() const { return checksum_; }
  /// log of max_z sum_x mu_n(x) q(z - x): one free step folded onto mu_n.
  double fold_max_log() const;

  /// Calls fn(site, value) for every nonzero cell in lexicographic order,
  /// value = Z_n(site) exp(-c_n).
  template <class Fn>
  void for_each_site(Fn&& fn) const {
    const int d = box_.dim();
    const int ext = box_.extent(d - 1);
    Site x(d);
    for (std::size_t r = 0; r < ranges_.size(); ++r) {
      const RowRange rr = ranges_[r];
      if (rr.empty()) continue;
      box_.row_coords(r, x);
      const Real* row = data_.get() + r * static_cast<std::size_t>(ext);
      for (int j = rr.lo; j < rr.hi; ++j) {
        const double v = row[j];
        if (v == 0.0) continue;
        x[d - 1] = box_.lo()[d - 1] + j;
        fn(static_cast<const Site&>(x), v);
      }
    }
  }

 private:
  struct Group {
    Site lead;                 // leading coordinates of the steps
    std::vector<int> shift;    // last coordinate minus min last coordinate
    std::vector<double> prob;
    int shift_lo = 0;
    int shift_hi = 0;          // inclusive
  };

  void prepare_kernel();
  void prepare_weights();
  static void ensure_capacity(std::unique_ptr<Real[]>& buf, std::size_t& cap, std::size_t need);
  /// For every row of `next`, accumulates sum_s q(s) value(x - s) into a
  /// row buffer and calls visit(row, lead, range, acc).
  template <class Visit>
  void gather_rows(const Box& next, Visit&& visit) const;

  StepKernel q_;
  double beta_ = 0.0;
  Environment env_;
  EngineOptions options_;

  Site min_step_, max_step_;
  std::vector<Group> groups_;

  static constexpr int kExpLowBits = 42;
  static constexpr std::uint64_t kExpLowMask = (std::uint64_t{1} << kExpLowBits) - 1;
  static constexpr std::size_t kExpTableSize = std::size_t{1} << (53 - kExpLowBits);
  bool table_exp_ = false;
  std::vector<double> exp_table_;

  int n_ = 0;
  Box box_;
  std::vector<RowRange> ranges_;
  std::unique_ptr<Real[]> data_;
  std::size_t data_cap_ = 0;
  std::unique_ptr<Real[]> next_;
  std::size_t next_cap_ = 0;
  double scale_ = 0.0;
  double max_value_ = 1.0;
  std::uint64_t checksum_ = 0;
  mutable std::optional<double> log_partition_;
  mutable std::vector<double> acc_;
};

using PolymerField = PolymerFieldT<double>;
using PolymerFieldF = PolymerFieldT<float>;

extern template class PolymerFieldT<double>;
extern template class PolymerFieldT<float>;

/// W_n = Z_n / M(beta)^n.
template <class Real>
double normalized_martingale(const PolymerFieldT<Real>& field) {
  const double lambda = field.beta() == 0.0 ? 0.0 : field.environment().model().log_mgf(field.beta());
  return std::exp(field.log_partition() - field.time() * lambda);
}

/// Moments of the endpoint under the Gibbs measure mu_n.
struct EndpointSummary {
  int n = 0;
  double log_partition = 0.0;
  /// max_x mu_n(x) and its lexicographically smallest maximizer.
  double max_prob = 0.0;
  Site argmax;
  Vec mean;
  Eigen::MatrixXd cov;
  /// <|X_n|> and <|X_n|^2>, Euclidean norm.
  double mean_norm = 0.0;
  double mean_norm2 = 0.0;
};

template <class Real>
EndpointSummary endpoint_summary(const PolymerFieldT<Real>& field);

/// Dense mu_n over the window, plus its summary.
struct EndpointMeasure {
  Box window;
  std::vector<double> mu;
  EndpointSummary summary;

  double prob(std::span<const int> x) const { return window.contains(x) ? mu[window.index(x)] : 0.0; }
};

template <class Real>
EndpointMeasure endpoint_measure(const PolymerFieldT<Real>& field);

/// J_{n+1} = max_z mu_n(X_{n+1} = z), the most likely next endpoint under the
/// measure with weights through time n.
template <class Real>
double next_localization(const PolymerFieldT<Real>& field) {
  return std::exp(field.fold_max_log());
}

/// (1/n) sum_t J_t.
double localization_average(std::span<const double> j_series);

/// Centered, diffusively scaled endpoint moments compared with the Gaussian
/// limit N(0, Sigma_q).
struct CltReport {
  int n = 0;
  int d = 0;
  Vec drift;                  // m_q
  Eigen::MatrixXd sigma;      // Sigma_q
  /// Per sample: <(X_n - n m_q)/sqrt(n)>, <|X_n - n m_q|^2>/n, <(x1 - n m1)(x2 - n m2)>/n.
  std::vector<Vec> centered_mean;
  std::vector<double> second_moment;
  std::vector<double> cross_moment;
  /// Sample averages of the above.
  Vec avg_centered_mean;
  double avg_second_moment = 0.0;
  double avg_cross_moment = 0.0;
  /// <X_n>/n averaged over samples.
  Vec avg_velocity;
  /// Set when the caller could not certify the L2 region.
  bool phase_mismatch = false;
};

CltReport endpoint_clt_check(std::span<const EndpointSummary> samples, const TiltedKernel& q, int n,
                             bool l2_certified);
CltReport endpoint_clt_check(std::span<const EndpointSummary> samples, const Vec& drift,
                             const Eigen::MatrixXd& sigma, int n, bool l2_certified);

}  // namespace polymerlab
