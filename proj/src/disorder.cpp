#include "polymerlab/disorder.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include "polymerlab/error.hpp"

namespace polymerlab {

std::string_view to_string(WeightFamily family) {
  switch (family) {
    case WeightFamily::Uniform01: return "uniform01";
    case WeightFamily::Gaussian: return "gaussian";
    case WeightFamily::Bernoulli: return "bernoulli";
    case WeightFamily::PointMass: return "pointmass";
  }
  return "unknown";
}

WeightFamily parse_weight_family(std::string_view name) {
  if (name == "uniform01") return WeightFamily::Uniform01;
  if (name == "gaussian") return WeightFamily::Gaussian;
  if (name == "bernoulli") return WeightFamily::Bernoulli;
  if (name == "pointmass") return WeightFamily::PointMass;
  fail(ErrorCode::ConfigError, "unknown weight family '" + std::string(name) + "'");
}

WeightModel::WeightModel(WeightFamily family, std::vector<double> params)
    : family_(family), params_(std::move(params)) {}

WeightModel WeightModel::uniform01() { return WeightModel(WeightFamily::Uniform01, {}); }

WeightModel WeightModel::gaussian(double mean, double stdev) {
  require(std::isfinite(mean) && std::isfinite(stdev) && stdev > 0.0, ErrorCode::InvalidArgument,
          "gaussian weights need a finite mean and stdev > 0");
  return WeightModel(WeightFamily::Gaussian, {mean, stdev});
}

WeightModel WeightModel::bernoulli(double p_success) {
  require(p_success > 0.0 && p_success < 1.0, ErrorCode::InvalidArgument,
          "bernoulli weights need 0 < p_success < 1");
  return WeightModel(WeightFamily::Bernoulli, {p_success});
}

WeightModel WeightModel::point_mass(double value) {
  require(std::isfinite(value), ErrorCode::InvalidArgument, "point mass value must be finite");
  return WeightModel(WeightFamily::PointMass, {value});
}

WeightModel WeightModel::from_params(WeightFamily family, std::span<const double> params) {
  auto expect = [&](std::size_t n) {
    require(params.size() == n, ErrorCode::ConfigError,
            std::string(to_string(family)) + " weights take " + std::to_string(n) + " parameter(s)");
  };
  switch (family) {
    case WeightFamily::Uniform01: expect(0); return uniform01();
    case WeightFamily::Gaussian: expect(2); return gaussian(params[0], params[1]);
    case WeightFamily::Bernoulli: expect(1); return bernoulli(params[0]);
    case WeightFamily::PointMass: expect(1); return point_mass(params[0]);
  }
  fail(ErrorCode::ConfigError, "unknown weight family");
}

namespace {

// log((e^b - 1) / b), the log-mgf of Uniform[0,1].
double uniform_log_mgf(double b) {
  const double a = std::abs(b);
  if (a < 1e-4) return b / 2.0 + b * b / 24.0 - b * b * b * b / 2880.0;
  if (b > 50.0) return b + std::log1p(-std::exp(-b)) - std::log(b);
  if (b < -50.0) return std::log(-std::expm1(b)) - std::log(-b);
  return std::log(std::expm1(b) / b);
}

// 1/(1 - e^{-b}) - 1/b.
double uniform_log_mgf_derivative(double b) {
  if (std::abs(b) < 1e-4) return 0.5 + b / 12.0 - b * b * b / 720.0;
  return -1.0 / std::expm1(-b) - 1.0 / b;
}

}  // namespace

double WeightModel::log_mgf(double beta) const {
  switch (family_) {
    case WeightFamily::Uniform01:
      return uniform_log_mgf(beta);
    case WeightFamily::Gaussian:
      return params_[0] * beta + 0.5 * params_[1] * params_[1] * beta * beta;
    case WeightFamily::Bernoulli: {
      // log(1 - p + p e^beta), stable for large |beta|.
      const double p = params_[0];
      if (beta > 0) return beta + std::log(p + (1.0 - p) * std::exp(-beta));
      return std::log1p(p * std::expm1(beta));
    }
    case WeightFamily::PointMass:
      return params_[0] * beta;
  }
  return 0.0;
}

double WeightModel::log_mgf_derivative(double beta) const {
  switch (family_) {
    case WeightFamily::Uniform01:
      return uniform_log_mgf_derivative(beta);
    case WeightFamily::Gaussian:
      return params_[0] + params_[1] * params_[1] * beta;
    case WeightFamily::Bernoulli: {
      const double p = params_[0];
      // p e^b / (1 - p + p e^b), written as a logistic.
      const double logit = std::log(p) - std::log1p(-p) + beta;
      return 1.0 / (1.0 + std::exp(-logit));
    }
    case WeightFamily::PointMass:
      return params_[0];
  }
  return 0.0;
}

double WeightModel::mean() const { return log_mgf_derivative(0.0); }

double WeightModel::draw(std::uint64_t key, std::uint64_t key2) const {
  constexpr double kUnit = 0x1.0p-53;
  switch (family_) {
    case WeightFamily::Uniform01:
      return static_cast<double>(key >> 11) * kUnit;
    case WeightFamily::Gaussian: {
      // Box-Muller; u1 in (0, 1] so the log is finite.
      const double u1 = static_cast<double>((key >> 11) + 1) * kUnit;
      const double u2 = static_cast<double>(key2 >> 11) * kUnit;
      const double z = std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
      return params_[0] + params_[1] * z;
    }
    case WeightFamily::Bernoulli:
      return static_cast<double>(key >> 11) * kUnit < params_[0] ? 1.0 : 0.0;
    case WeightFamily::PointMass:
      return params_[0];
  }
  return 0.0;
}

double log_mgf(const WeightModel& model, double beta) {
  require(std::isfinite(beta), ErrorCode::InvalidArgument, "beta must be finite");
  return model.log_mgf(beta);
}

double relative_entropy(const WeightModel& model, double beta) {
  require(std::isfinite(beta), ErrorCode::InvalidArgument, "beta must be finite");
  if (beta == 0.0 || model.degenerate()) return 0.0;
  const double value = beta * model.log_mgf_derivative(beta) - model.log_mgf(beta);
  // Clamp rounding noise; the quantity is a relative entropy.
  return value < 0.0 ? 0.0 : value;
}

Environment::Environment(std::uint64_t seed, std::uint64_t sample_index, WeightModel model)
    : seed_(seed), sample_(sample_index), model_(std::move(model)) {
  base_ = detail::combine(detail::mix64(seed_ + detail::kGolden), static_cast<std::int64_t>(sample_));
}

WeightRow Environment::row(int t, std::span<const int> lead) const {
  std::uint64_t h = detail::combine(base_, t);
  for (int c : lead) h = detail::combine(h, c);
  return WeightRow(&model_, h);
}

double Environment::weight(int t, std::span<const int> x) const {
  require(t >= 1, ErrorCode::InvalidArgument, "weights exist only for t >= 1");
  require(!x.empty(), ErrorCode::InvalidArgument, "site must have dimension >= 1");
  return row(t, x.first(x.size() - 1))(x.back());
}

double sample_weight(const Environment& env, int t, std::span<const int> x) { return env.weight(t, x); }

}  // namespace polymerlab
