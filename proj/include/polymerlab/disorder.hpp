#pragma once

#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

namespace polymerlab {

enum class WeightFamily { Uniform01, Gaussian, Bernoulli, PointMass };

std::string_view to_string(WeightFamily family);
WeightFamily parse_weight_family(std::string_view name);

/// Law of a single site weight. Every supported family has a finite moment
/// generating function on the whole real line.
class WeightModel {
 public:
  static WeightModel uniform01();
  static WeightModel gaussian(double mean, double stdev);
  /// Weight is 1 with probability `p_success`, else 0. Requires 0 < p < 1.
  static WeightModel bernoulli(double p_success);
  static WeightModel point_mass(double value);
  /// Builds from a family name and its parameter list (config form).
  static WeightModel from_params(WeightFamily family, std::span<const double> params);

  WeightFamily family() const { return family_; }
  const std::vector<double>& params() const { return params_; }
  bool degenerate() const { return family_ == WeightFamily::PointMass; }

  /// log E[exp(beta * w)].
  double log_mgf(double beta) const;
  /// d/dbeta of log_mgf, analytic for every family.
  double log_mgf_derivative(double beta) const;
  double mean() const;

  /// Maps a 64-bit key to a draw. `key2` is only consumed by the Gaussian.
  double draw(std::uint64_t key, std::uint64_t key2) const;

  friend bool operator==(const WeightModel&, const WeightModel&) = default;

 private:
  WeightModel(WeightFamily family, std::vector<double> params);

  WeightFamily family_;
  std::vector<double> params_;
};

double log_mgf(const WeightModel& model, double beta);

/// H(Q_beta | P) = beta * Lambda'(beta) - Lambda(beta).
double relative_entropy(const WeightModel& model, double beta);

namespace detail {

constexpr std::uint64_t kGolden = 0x9e3779b97f4a7c15ULL;

/// SplitMix64 finalizer.
constexpr std::uint64_t mix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

constexpr std::uint64_t combine(std::uint64_t h, std::int64_t v) {
  return mix64(h ^ (static_cast<std::uint64_t>(v) + kGolden + (h << 6) + (h >> 2)));
}

}  // namespace detail

/// Row-wise access to an environment: fixes (t, leading coordinates) so the
/// per-site cost along the last axis is a single mix.
class WeightRow {
 public:
  WeightRow(const WeightModel* model, std::uint64_t prefix)
      : model_(model), prefix_(prefix), uniform_(model->family() == WeightFamily::Uniform01) {}

  std::uint64_t key(int last) const { return detail::combine(prefix_, last); }

  double operator()(int last) const {
    const std::uint64_t key = detail::combine(prefix_, last);
    // Same value as WeightModel::draw, without the out-of-line call.
    if (uniform_) return static_cast<double>(key >> 11) * 0x1.0p-53;
    return model_->draw(key, detail::mix64(key ^ 0x5bd1e9955bd1e995ULL));
  }

 private:
  const WeightModel* model_;
  std::uint64_t prefix_;
  bool uniform_;
};

/// Reproducible field of iid weights omega(t, x) for one environment sample.
/// Weights are a pure function of (seed, sample, t, x): random access, no
/// stream state, and independent of beta and the field h.
class Environment {
 public:
  Environment(std::uint64_t seed, std::uint64_t sample_index, WeightModel model);

  std::uint64_t seed() const { return seed_; }
  std::uint64_t sample_index() const { return sample_; }
  const WeightModel& model() const { return model_; }

  /// omega(t, x); t must be >= 1.
  double weight(int t, std::span<const int> x) const;
  /// Row accessor; `lead` holds all coordinates except the last.
  WeightRow row(int t, std::span<const int> lead) const;

 private:
  std::uint64_t seed_;
  std::uint64_t sample_;
  WeightModel model_;
  std::uint64_t base_;
};

double sample_weight(const Environment& env, int t, std::span<const int> x);

}  // namespace polymerlab
