#pragma once

// Test-only oracles and hand-rolled generators.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <vector>

#include "polymerlab/disorder.hpp"
#include "polymerlab/kernels.hpp"

namespace polymerlab::testing {

/// Small deterministic generator for property tests.
class Gen {
 public:
  explicit Gen(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next() {
    state_ += 0x9e3779b97f4a7c15ULL;
    return detail::mix64(state_);
  }
  double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  int integer(int lo, int hi) { return lo + static_cast<int>(next() % static_cast<std::uint64_t>(hi - lo + 1)); }
  bool coin() { return (next() & 1) != 0; }

  Vec vec(int d, double scale) {
    Vec v(static_cast<std::size_t>(d));
    for (double& x : v) x = uniform(-scale, scale);
    return v;
  }

  WeightModel model() {
    switch (integer(0, 3)) {
      case 0: return WeightModel::uniform01();
      case 1: return WeightModel::gaussian(uniform(-1.0, 1.0), uniform(0.2, 1.5));
      case 2: return WeightModel::bernoulli(uniform(0.1, 0.9));
      default: return WeightModel::gaussian(0.0, 1.0);
    }
  }

  /// Random finite-range kernel on Z^d with up to `max_steps` distinct steps in [-r, r]^d.
  StepKernel table_kernel(int d, int max_steps = 6, int r = 2) {
    std::map<Site, double> w;
    int cells = 1;
    for (int a = 0; a < d; ++a) cells *= 2 * r + 1;
    const int m = integer(1, std::min(max_steps, cells));
    while (static_cast<int>(w.size()) < m) {
      Site x(static_cast<std::size_t>(d));
      for (int& c : x) c = integer(-r, r);
      w[x] = uniform(0.1, 1.0);
    }
    double total = 0.0;
    for (const auto& [x, p] : w) total += p;
    std::vector<std::pair<Site, double>> steps;
    for (const auto& [x, p] : w) steps.emplace_back(x, p / total);
    return StepKernel::table(d, std::move(steps));
  }

  StepKernel kernel(int d) {
    switch (integer(0, 2)) {
      case 0: return StepKernel::simple(d);
      case 1: return table_kernel(d);
      default: return StepKernel::discrete_gaussian(d, vec(d, 0.5));
    }
  }

 private:
  std::uint64_t state_;
};

/// Exhaustive path sum: Z_n(0, x) = sum over all n-step paths ending at x of
/// prod_t q(step_t) exp(beta omega(t, x_t)). Exponential in n.
struct PathSum {
  std::map<Site, long double> z;
  long double total = 0.0L;
};

inline PathSum brute_path_sum(const StepKernel& q, double beta, const Environment& env, int n) {
  PathSum out;
  Site x(static_cast<std::size_t>(q.dim()), 0);
  auto rec = [&](auto&& self, int t, long double w) -> void {
    if (t == n) {
      out.z[x] += w;
      out.total += w;
      return;
    }
    for (std::size_t i = 0; i < q.size(); ++i) {
      const Site& s = q.steps()[i];
      for (std::size_t a = 0; a < x.size(); ++a) x[a] += s[a];
      const long double f =
          static_cast<long double>(q.probs()[i]) * std::exp(static_cast<long double>(beta * env.weight(t + 1, x)));
      self(self, t + 1, w * f);
      for (std::size_t a = 0; a < x.size(); ++a) x[a] -= s[a];
    }
  };
  rec(rec, 0, 1.0L);
  return out;
}

/// Exact law of S_n for a finite-range kernel by repeated sparse convolution.
inline std::map<Site, double> walk_law(const StepKernel& q, int n) {
  std::map<Site, double> law{{Site(static_cast<std::size_t>(q.dim()), 0), 1.0}};
  for (int t = 0; t < n; ++t) {
    std::map<Site, double> next;
    for (const auto& [x, p] : law)
      for (std::size_t i = 0; i < q.size(); ++i) {
        Site y = x;
        for (std::size_t a = 0; a < y.size(); ++a) y[a] += q.steps()[i][a];
        next[y] += p * q.probs()[i];
      }
    law = std::move(next);
  }
  return law;
}

}  // namespace polymerlab::testing
