#pragma once

#include <Eigen/Dense>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "polymerlab/lattice.hpp"

namespace polymerlab {

enum class KernelKind { Table, DiscreteGaussian };

/// Tail mass a discrete Gaussian kernel may discard after truncation.
inline constexpr double kGaussianTailTolerance = 1e-12;
/// Largest |coordinate| a truncated discrete Gaussian support may reach.
inline constexpr int kGaussianMaxRadius = 64;

/// Probability kernel on Z^d with an explicit (possibly truncated) support
/// table. Steps are kept in lexicographic order.
class StepKernel {
 public:
  /// Nearest-neighbour walk: +-e_i with probability 1/(2d) each.
  static StepKernel simple(int d);
  /// Explicit table. Probabilities must be positive and sum to 1 within 1e-9;
  /// they are renormalized exactly.
  static StepKernel table(int d, std::vector<std::pair<Site, double>> steps);
  /// p(x) proportional to exp(-|x - center|^2 / 2) on Z^d, truncated so the
  /// discarded mass is below kGaussianTailTolerance. An empty center means 0.
  static StepKernel discrete_gaussian(int d, Vec center = {});

  int dim() const { return dim_; }
  KernelKind kind() const { return kind_; }
  bool finite_range() const { return kind_ == KernelKind::Table; }
  std::size_t size() const { return steps_.size(); }

  const std::vector<Site>& steps() const { return steps_; }
  const std::vector<double>& probs() const { return probs_; }
  const std::vector<double>& log_probs() const { return log_probs_; }

  /// p(x), zero off the support.
  double prob(std::span<const int> x) const;
  std::optional<std::size_t> find(std::span<const int> x) const;

  /// Discrete Gaussian only: center of the (tilted) Gaussian.
  const Vec& gaussian_center() const { return center_; }
  /// Discrete Gaussian only: half-width of the support box around round(center).
  int truncation_radius() const { return radius_; }
  /// Mass discarded by truncation (0 for tables).
  double tail_mass() const { return tail_mass_; }

  /// Lambda_p(t) = log E_p[exp(t . X)]. Analytic for the discrete Gaussian.
  double log_mgf(std::span<const double> t) const;
  Vec mean() const;
  Eigen::MatrixXd covariance() const;
  /// Componentwise min and max over the support.
  Site min_step() const;
  Site max_step() const;

 private:
  StepKernel() = default;
  void finalize();

  int dim_ = 0;
  KernelKind kind_ = KernelKind::Table;
  std::vector<Site> steps_;
  std::vector<double> probs_;
  std::vector<double> log_probs_;
  Vec center_;
  int radius_ = 0;
  double tail_mass_ = 0.0;
};

/// q(h, x) = exp(beta x.h) p(x) / M_p(beta h), with cached drift and covariance.
class TiltedKernel {
 public:
  TiltedKernel(StepKernel base, double beta, Vec h);

  const StepKernel& base() const { return base_; }
  const StepKernel& kernel() const { return q_; }
  double beta() const { return beta_; }
  const Vec& h() const { return h_; }
  /// Lambda_p(beta h).
  double log_mgf() const { return log_mgf_; }
  double mgf() const;
  const Vec& mean() const { return mean_; }
  const Eigen::MatrixXd& covariance() const { return cov_; }

 private:
  StepKernel base_;
  double beta_;
  Vec h_;
  StepKernel q_;
  double log_mgf_;
  Vec mean_;
  Eigen::MatrixXd cov_;
};

TiltedKernel tilt(const StepKernel& p, double beta, std::span<const double> h);

/// -sum q log q.
double shannon_entropy(const StepKernel& k);
double shannon_entropy(const TiltedKernel& k);

struct ArgmaxSet {
  std::vector<Site> sites;
  bool singleton() const { return sites.size() == 1; }
};

/// K(h) = argmax_{x in supp p} h.x, with ties resolved at 1e-9 (1 + |h|).
ArgmaxSet argmax_set(const StepKernel& p, std::span<const double> h);

/// Entropy of p conditioned on stepping inside K.
double conditional_entropy(const StepKernel& p, std::span<const Site> K);

struct EntropyLimit {
  std::vector<double> entropies;
  /// H_{K(h)}(p) when the kernel has finite range.
  std::optional<double> conditional_limit;
};

/// H(q(lambda h)) for each lambda (tilt strength beta = 1).
EntropyLimit entropy_limit_check(const StepKernel& p, std::span<const double> h,
                                 std::span<const double> lambdas);

/// Closed-form entropy of the tilted discrete Gaussian, d (ln C0 + C2 / (2 C0)),
/// with the lattice sums taken over Z - t.
double gaussian_entropy_exact(double t, int d);

/// Kernel of X - X' for independent X, X' ~ q; exactly symmetric.
StepKernel difference_walk(const StepKernel& q);
StepKernel difference_walk(const TiltedKernel& q);

using IntMatrix = Eigen::Matrix<long long, Eigen::Dynamic, Eigen::Dynamic>;

/// Integer basis of the Z-span of a kernel support, in Hermite normal form.
struct LatticeBasis {
  /// Columns generate the lattice.
  IntMatrix A;
  long long abs_det = 0;

  int dim() const { return static_cast<int>(A.rows()); }
  /// Exact integer membership test.
  bool contains(std::span<const int> x) const;
};

LatticeBasis lattice_basis(const StepKernel& p);

/// Reference density det(Sigma^{-1/2} A) (2 pi n)^{-d/2}
/// exp(-(x - m n) . Sigma^{-1} (x - m n) / (2n)).
double local_clt_density(const LatticeBasis& basis, const Eigen::MatrixXd& sigma,
                         std::span<const double> m, int n, std::span<const int> x);

}  // namespace polymerlab
