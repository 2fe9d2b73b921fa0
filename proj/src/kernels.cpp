#include "polymerlab/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>

#include "polymerlab/error.hpp"

namespace polymerlab {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

double log_sum_exp(std::span<const double> v) {
  double m = kNegInf;
  for (double x : v) m = std::max(m, x);
  if (m == kNegInf) return kNegInf;
  double s = 0.0;
  for (double x : v) s += std::exp(x - m);
  return m + std::log(s);
}

// Sum_k exp(-(k - u)^2 / 2) over all integers k.
double gaussian_theta(double u) {
  const double frac = u - std::floor(u);
  double s = 0.0;
  for (int k = -40; k <= 41; ++k) {
    const double z = k - frac;
    s += std::exp(-0.5 * z * z);
  }
  return s;
}

struct Gaussian1D {
  int lo = 0;
  std::vector<double> log_w;  // normalized over the truncated range
  double tail = 0.0;
};

Gaussian1D truncated_gaussian(double c, double tail_budget) {
  const auto k0 = static_cast<int>(std::lround(c));
  const double total = gaussian_theta(c);
  auto mass_outside = [&](int r) {
    double s = 0.0;
    for (int j = r + 1; j <= r + 60; ++j) {
      const double a = k0 + j - c, b = k0 - j - c;
      s += std::exp(-0.5 * a * a) + std::exp(-0.5 * b * b);
    }
    return s / total;
  };
  int r = 1;
  while (mass_outside(r) >= tail_budget) ++r;
  require(std::abs(k0) + r <= kGaussianMaxRadius, ErrorCode::TruncationFailure,
          "discrete Gaussian truncation exceeds radius " + std::to_string(kGaussianMaxRadius));
  Gaussian1D g;
  g.lo = k0 - r;
  g.tail = mass_outside(r);
  std::vector<double> raw;
  for (int k = k0 - r; k <= k0 + r; ++k) raw.push_back(-0.5 * (k - c) * (k - c));
  const double z = log_sum_exp(raw);
  for (double v : raw) g.log_w.push_back(v - z);
  return g;
}

}  // namespace

void StepKernel::finalize() {
  std::vector<std::size_t> order(steps_.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](auto a, auto b) { return steps_[a] < steps_[b]; });
  std::vector<Site> s;
  std::vector<double> lp;
  for (auto i : order) {
    s.push_back(steps_[i]);
    lp.push_back(log_probs_[i]);
  }
  for (std::size_t i = 1; i < s.size(); ++i)
    require(s[i] != s[i - 1], ErrorCode::InvalidArgument, "duplicate kernel step " + to_string(s[i]));
  steps_ = std::move(s);
  log_probs_ = std::move(lp);
  probs_.resize(log_probs_.size());
  for (std::size_t i = 0; i < probs_.size(); ++i) probs_[i] = std::exp(log_probs_[i]);
}

StepKernel StepKernel::simple(int d) {
  require(d >= 1, ErrorCode::InvalidArgument, "dimension must be >= 1");
  std::vector<std::pair<Site, double>> steps;
  for (int a = 0; a < d; ++a)
    for (int sgn : {-1, 1}) {
      Site x(d, 0);
      x[a] = sgn;
      steps.emplace_back(x, 1.0 / (2.0 * d));
    }
  return table(d, std::move(steps));
}

StepKernel StepKernel::table(int d, std::vector<std::pair<Site, double>> steps) {
  require(d >= 1, ErrorCode::InvalidArgument, "dimension must be >= 1");
  require(!steps.empty(), ErrorCode::EmptySupport, "kernel table is empty");
  double total = 0.0;
  for (const auto& [x, p] : steps) {
    require(static_cast<int>(x.size()) == d, ErrorCode::InvalidArgument,
            "kernel step " + to_string(x) + " has wrong dimension");
    require(p > 0.0 && std::isfinite(p), ErrorCode::InvalidArgument,
            "kernel probabilities must be positive");
    total += p;
  }
  require(std::abs(total - 1.0) <= 1e-9, ErrorCode::InvalidArgument,
          "kernel probabilities sum to " + std::to_string(total) + ", not 1");
  StepKernel k;
  k.dim_ = d;
  k.kind_ = KernelKind::Table;
  const double log_total = std::log(total);
  for (auto& [x, p] : steps) {
    k.steps_.push_back(std::move(x));
    k.log_probs_.push_back(std::log(p) - log_total);
  }
  k.finalize();
  return k;
}

StepKernel StepKernel::discrete_gaussian(int d, Vec center) {
  require(d >= 1, ErrorCode::InvalidArgument, "dimension must be >= 1");
  if (center.empty()) center.assign(static_cast<std::size_t>(d), 0.0);
  require(static_cast<int>(center.size()) == d, ErrorCode::InvalidArgument,
          "gaussian center has wrong dimension");
  StepKernel k;
  k.dim_ = d;
  k.kind_ = KernelKind::DiscreteGaussian;
  k.center_ = center;
  std::vector<Gaussian1D> axes;
  double kept = 1.0;
  for (double c : center) {
    axes.push_back(truncated_gaussian(c, kGaussianTailTolerance / d));
    kept *= 1.0 - axes.back().tail;
    k.radius_ = std::max(k.radius_, static_cast<int>(axes.back().log_w.size() / 2));
  }
  k.tail_mass_ = 1.0 - kept;
  // Cartesian product in lexicographic order.
  Site idx(d, 0);
  while (true) {
    Site x(d);
    double lp = 0.0;
    for (int a = 0; a < d; ++a) {
      x[a] = axes[a].lo + idx[a];
      lp += axes[a].log_w[idx[a]];
    }
    k.steps_.push_back(std::move(x));
    k.log_probs_.push_back(lp);
    int a = d - 1;
    while (a >= 0 && ++idx[a] == static_cast<int>(axes[a].log_w.size())) idx[a--] = 0;
    if (a < 0) break;
  }
  k.finalize();
  return k;
}

std::optional<std::size_t> StepKernel::find(std::span<const int> x) const {
  const Site key(x.begin(), x.end());
  auto it = std::lower_bound(steps_.begin(), steps_.end(), key);
  if (it == steps_.end() || *it != key) return std::nullopt;
  return static_cast<std::size_t>(it - steps_.begin());
}

double StepKernel::prob(std::span<const int> x) const {
  auto i = find(x);
  return i ? probs_[*i] : 0.0;
}

double StepKernel::log_mgf(std::span<const double> t) const {
  require(static_cast<int>(t.size()) == dim_, ErrorCode::InvalidArgument, "tilt has wrong dimension");
  if (kind_ == KernelKind::DiscreteGaussian) {
    double acc = 0.0;
    for (int a = 0; a < dim_; ++a) {
      const double c = center_[a], s = t[a];
      acc += s * c + 0.5 * s * s + std::log(gaussian_theta(c + s)) - std::log(gaussian_theta(c));
    }
    return acc;
  }
  std::vector<double> v(steps_.size());
  for (std::size_t i = 0; i < steps_.size(); ++i) v[i] = log_probs_[i] + dot(steps_[i], t);
  return log_sum_exp(v);
}

Vec StepKernel::mean() const {
  Vec m(static_cast<std::size_t>(dim_), 0.0);
  for (std::size_t i = 0; i < steps_.size(); ++i)
    for (int a = 0; a < dim_; ++a) m[a] += probs_[i] * steps_[i][a];
  return m;
}

Eigen::MatrixXd StepKernel::covariance() const {
  const Vec m = mean();
  Eigen::MatrixXd c = Eigen::MatrixXd::Zero(dim_, dim_);
  for (std::size_t i = 0; i < steps_.size(); ++i)
    for (int a = 0; a < dim_; ++a)
      for (int b = 0; b < dim_; ++b) c(a, b) += probs_[i] * (steps_[i][a] - m[a]) * (steps_[i][b] - m[b]);
  return 0.5 * (c + c.transpose());
}

Site StepKernel::min_step() const {
  Site out = steps_.front();
  for (const auto& x : steps_)
    for (int a = 0; a < dim_; ++a) out[a] = std::min(out[a], x[a]);
  return out;
}

Site StepKernel::max_step() const {
  Site out = steps_.front();
  for (const auto& x : steps_)
    for (int a = 0; a < dim_; ++a) out[a] = std::max(out[a], x[a]);
  return out;
}

TiltedKernel::TiltedKernel(StepKernel base, double beta, Vec h)
    : base_(std::move(base)), beta_(beta), h_(std::move(h)), q_(base_) {
  require(beta_ > 0.0 && std::isfinite(beta_), ErrorCode::InvalidArgument, "tilt needs beta > 0");
  require(static_cast<int>(h_.size()) == base_.dim(), ErrorCode::InvalidArgument,
          "field has wrong dimension");
  const Vec t = scaled(h_, beta_);
  const bool zero = std::all_of(t.begin(), t.end(), [](double v) { return v == 0.0; });
  log_mgf_ = zero ? 0.0 : base_.log_mgf(t);
  require(std::isfinite(log_mgf_), ErrorCode::NumericError, "Lambda_p(beta h) is not finite");
  if (!zero) {
    if (base_.kind() == KernelKind::DiscreteGaussian) {
      Vec c = base_.gaussian_center();
      for (std::size_t a = 0; a < c.size(); ++a) c[a] += t[a];
      q_ = StepKernel::discrete_gaussian(base_.dim(), c);
    } else {
      std::vector<double> lq(base_.size());
      for (std::size_t i = 0; i < lq.size(); ++i)
        lq[i] = base_.log_probs()[i] + dot(base_.steps()[i], t);
      const double z = log_sum_exp(lq);
      std::vector<std::pair<Site, double>> steps;
      for (std::size_t i = 0; i < lq.size(); ++i) {
        const double p = std::exp(lq[i] - z);
        // Steps whose tilted mass underflows leave the support.
        if (p > 0.0) steps.emplace_back(base_.steps()[i], p);
      }
      q_ = StepKernel::table(base_.dim(), std::move(steps));
    }
  }
  mean_ = q_.mean();
  cov_ = q_.covariance();
}

double TiltedKernel::mgf() const { return std::exp(log_mgf_); }

TiltedKernel tilt(const StepKernel& p, double beta, std::span<const double> h) {
  return TiltedKernel(p, beta, Vec(h.begin(), h.end()));
}

double shannon_entropy(const StepKernel& k) {
  double acc = 0.0;
  for (std::size_t i = 0; i < k.size(); ++i) acc -= k.probs()[i] * k.log_probs()[i];
  return acc;
}

double shannon_entropy(const TiltedKernel& k) { return shannon_entropy(k.kernel()); }

ArgmaxSet argmax_set(const StepKernel& p, std::span<const double> h) {
  require(p.finite_range(), ErrorCode::InfiniteRange, "argmax over an infinite-range kernel may be empty");
  require(p.size() > 0, ErrorCode::EmptySupport, "kernel support is empty");
  require(static_cast<int>(h.size()) == p.dim(), ErrorCode::InvalidArgument, "field has wrong dimension");
  double best = -std::numeric_limits<double>::infinity();
  for (const auto& x : p.steps()) best = std::max(best, dot(x, h));
  const double tol = 1e-9 * (1.0 + norm(h));
  ArgmaxSet out;
  for (const auto& x : p.steps())
    if (dot(x, h) >= best - tol) out.sites.push_back(x);
  return out;
}

double conditional_entropy(const StepKernel& p, std::span<const Site> K) {
  require(!K.empty(), ErrorCode::EmptyK, "conditioning set is empty");
  std::vector<double> probs;
  double total = 0.0;
  for (const auto& x : K) {
    const double v = p.prob(x);
    require(v > 0.0, ErrorCode::InvalidArgument, "site " + to_string(x) + " is not in the support");
    probs.push_back(v);
    total += v;
  }
  double acc = 0.0;
  for (double v : probs) acc -= (v / total) * std::log(v / total);
  return acc;
}

EntropyLimit entropy_limit_check(const StepKernel& p, std::span<const double> h,
                                 std::span<const double> lambdas) {
  EntropyLimit out;
  if (p.finite_range()) {
    const auto K = argmax_set(p, h);
    out.conditional_limit = conditional_entropy(p, K.sites);
  }
  for (double lambda : lambdas) {
    const Vec field = scaled(h, lambda);
    out.entropies.push_back(lambda == 0.0 ? shannon_entropy(p) : shannon_entropy(tilt(p, 1.0, field)));
  }
  return out;
}

double gaussian_entropy_exact(double t, int d) {
  require(d >= 1, ErrorCode::InvalidArgument, "dimension must be >= 1");
  const double frac = t - std::floor(t);
  double c0 = 0.0, c2 = 0.0;
  // Terms for x = k - frac, walking outward from the mode until negligible.
  for (int k = 0;; ++k) {
    const double x = k - frac;
    const double w = std::exp(-0.5 * x * x);
    c0 += w;
    c2 += x * x * w;
    if (k > 1 && w < 1e-16) break;
  }
  for (int k = -1;; --k) {
    const double x = k - frac;
    const double w = std::exp(-0.5 * x * x);
    c0 += w;
    c2 += x * x * w;
    if (k < -1 && w < 1e-16) break;
  }
  return d * (std::log(c0) + c2 / (2.0 * c0));
}

StepKernel difference_walk(const StepKernel& q) {
  const int d = q.dim();
  const Site lo = q.min_step(), hi = q.max_step();
  Site dlo(d), dhi(d);
  for (int a = 0; a < d; ++a) {
    dlo[a] = lo[a] - hi[a];
    dhi[a] = hi[a] - lo[a];
  }
  const Box box(dlo, dhi);
  std::vector<double> acc(box.volume(), 0.0);
  Site z(d);
  for (std::size_t i = 0; i < q.size(); ++i)
    for (std::size_t j = 0; j < q.size(); ++j) {
      for (int a = 0; a < d; ++a) z[a] = q.steps()[i][a] - q.steps()[j][a];
      acc[box.index(z)] += q.probs()[i] * q.probs()[j];
    }
  // Storage is point-symmetric: index(-z) = volume - 1 - index(z).
  std::vector<std::pair<Site, double>> steps;
  double total = 0.0;
  for (std::size_t i = 0; i < acc.size(); ++i) {
    const double v = 0.5 * (acc[i] + acc[acc.size() - 1 - i]);
    if (v > 0.0) {
      steps.emplace_back(box.site(i), v);
      total += v;
    }
  }
  for (auto& s : steps) s.second /= total;
  return StepKernel::table(d, std::move(steps));
}

StepKernel difference_walk(const TiltedKernel& q) { return difference_walk(q.kernel()); }

namespace {

long long floor_div(long long a, long long b) {
  long long q = a / b;
  if ((a % b != 0) && ((a < 0) != (b < 0))) --q;
  return q;
}

}  // namespace

LatticeBasis lattice_basis(const StepKernel& p) {
  const int d = p.dim();
  std::vector<std::vector<long long>> rows;
  for (const auto& x : p.steps()) {
    if (std::all_of(x.begin(), x.end(), [](int v) { return v == 0; })) continue;
    rows.emplace_back(x.begin(), x.end());
  }
  // Integer row reduction to Hermite normal form; generators are rows.
  std::size_t r = 0;
  std::vector<int> pivot_col;
  for (int col = 0; col < d && r < rows.size(); ++col) {
    while (true) {
      std::size_t best = rows.size();
      for (std::size_t i = r; i < rows.size(); ++i)
        if (rows[i][col] != 0 && (best == rows.size() || std::llabs(rows[i][col]) < std::llabs(rows[best][col])))
          best = i;
      if (best == rows.size()) break;
      std::swap(rows[r], rows[best]);
      bool clean = true;
      for (std::size_t i = r + 1; i < rows.size(); ++i) {
        if (rows[i][col] == 0) continue;
        const long long f = rows[i][col] / rows[r][col];
        for (int c = 0; c < d; ++c) rows[i][c] -= f * rows[r][c];
        if (rows[i][col] != 0) clean = false;
      }
      if (clean) {
        if (rows[r][col] < 0)
          for (auto& v : rows[r]) v = -v;
        pivot_col.push_back(col);
        ++r;
        break;
      }
    }
  }
  require(static_cast<int>(r) == d, ErrorCode::RankDeficient,
          "support spans a lattice of rank " + std::to_string(r) + " < " + std::to_string(d));
  for (std::size_t i = 0; i < r; ++i)
    for (std::size_t k = 0; k < i; ++k) {
      const int col = pivot_col[i];
      const long long f = floor_div(rows[k][col], rows[i][col]);
      for (int c = 0; c < d; ++c) rows[k][c] -= f * rows[i][c];
    }
  LatticeBasis basis;
  basis.A = IntMatrix(d, d);
  basis.abs_det = 1;
  for (int i = 0; i < d; ++i) {
    for (int c = 0; c < d; ++c) basis.A(c, i) = rows[i][c];
    basis.abs_det *= rows[i][i];
  }
  return basis;
}

bool LatticeBasis::contains(std::span<const int> x) const {
  // A is lower triangular with the rows of the echelon form as columns:
  // solve A y = x by forward substitution in exact integers.
  const int d = dim();
  std::vector<long long> y(d, 0);
  for (int row = 0; row < d; ++row) {
    long long rest = x[row];
    for (int i = 0; i < row; ++i) rest -= A(row, i) * y[i];
    if (rest % A(row, row) != 0) return false;
    y[row] = rest / A(row, row);
  }
  return true;
}

double local_clt_density(const LatticeBasis& basis, const Eigen::MatrixXd& sigma,
                         std::span<const double> m, int n, std::span<const int> x) {
  const int d = basis.dim();
  require(n >= 1, ErrorCode::InvalidArgument, "n must be >= 1");
  require(sigma.rows() == d && sigma.cols() == d && static_cast<int>(m.size()) == d &&
              static_cast<int>(x.size()) == d,
          ErrorCode::InvalidArgument, "dimension mismatch");
  require(basis.contains(x), ErrorCode::InvalidArgument, "site " + to_string(x) + " is off the lattice");
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(sigma);
  const double top = std::max(1.0, eig.eigenvalues().cwiseAbs().maxCoeff());
  require(eig.eigenvalues().minCoeff() > 1e-12 * top, ErrorCode::SingularCovariance,
          "covariance is not positive definite");
  Eigen::VectorXd z(d);
  for (int a = 0; a < d; ++a) z(a) = x[a] - m[a] * n;
  const double quad = z.dot(sigma.ldlt().solve(z));
  const double det_sigma = eig.eigenvalues().prod();
  const double norm_const = static_cast<double>(basis.abs_det) / std::sqrt(det_sigma) /
                            std::pow(2.0 * std::numbers::pi * n, 0.5 * d);
  return norm_const * std::exp(-quad / (2.0 * n));
}

}  // namespace polymerlab
