#pragma once

#include <cmath>
#include <cstddef>
#include <span>

namespace polymerlab {

/// Neumaier-compensated running sum.
class CompensatedSum {
 public:
  void add(double x) {
    const double t = sum_ + x;
    if (std::abs(sum_) >= std::abs(x))
      comp_ += (sum_ - t) + x;
    else
      comp_ += (x - t) + sum_;
    sum_ = t;
  }
  double value() const { return sum_ + comp_; }

 private:
  double sum_ = 0.0;
  double comp_ = 0.0;
};

struct MeanSe {
  double mean = 0.0;
  double stdev = 0.0;
  double se = 0.0;
  std::size_t count = 0;
};

/// Mean, sample standard deviation (n - 1) and standard error, accumulated
/// in index order with compensated sums.
inline MeanSe mean_se(std::span<const double> xs) {
  MeanSe out;
  out.count = xs.size();
  if (xs.empty()) return out;
  CompensatedSum s;
  for (double x : xs) s.add(x);
  out.mean = s.value() / static_cast<double>(xs.size());
  if (xs.size() < 2) return out;
  CompensatedSum v;
  for (double x : xs) v.add((x - out.mean) * (x - out.mean));
  out.stdev = std::sqrt(v.value() / static_cast<double>(xs.size() - 1));
  out.se = out.stdev / std::sqrt(static_cast<double>(xs.size()));
  return out;
}

}  // namespace polymerlab
