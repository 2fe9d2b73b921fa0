#include "polymerlab/phase.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "polymerlab/engine.hpp"
#include "polymerlab/error.hpp"

namespace polymerlab {

double second_moment_ratio(const WeightModel& model, double beta) {
  require(beta >= 0.0 && std::isfinite(beta), ErrorCode::InvalidArgument, "beta must be >= 0");
  return std::exp(model.log_mgf(2.0 * beta) - 2.0 * model.log_mgf(beta));
}

double intersection_probability(double R) {
  require(R >= 0.0, ErrorCode::InvalidArgument, "expected return count must be >= 0");
  return R / (1.0 + R);
}

namespace {

void finish_series(ReturnSeries& s) {
  require(s.terms >= kTailCalibrationTerms, ErrorCode::WindowOverflow,
          "memory budget allows only " + std::to_string(s.terms) + " series terms");
  const double half_d = 0.5 * s.d;
  double R = 0.0, c = 0.0;
  for (int n = 1; n <= s.terms; ++n) {
    const double p = s.returns[static_cast<std::size_t>(n - 1)];
    R += p;
    if (n > s.terms - kTailCalibrationTerms) c = std::max(c, std::pow(n, half_d) * p);
  }
  s.R = R;
  s.tail_constant = kTailSafety * c;
  s.tail_bound = s.tail_constant * std::pow(static_cast<double>(s.terms), 1.0 - half_d) / (half_d - 1.0);
}

int affordable_terms(const StepKernel& k, int N, std::size_t budget) {
  int lo = 0, hi = N;
  while (lo < hi) {
    const int mid = (lo + hi + 1) / 2;
    if (PolymerField::bytes_required(k, mid) <= budget)
      lo = mid;
    else
      hi = mid - 1;
  }
  return lo;
}

std::optional<double> clt_constant(const StepKernel& dk) {
  try {
    const LatticeBasis basis = lattice_basis(dk);
    const Vec zero_drift(static_cast<std::size_t>(dk.dim()), 0.0);
    const Site origin(static_cast<std::size_t>(dk.dim()), 0);
    return local_clt_density(basis, dk.covariance(), zero_drift, 1, origin);
  } catch (const Error&) {
    return std::nullopt;
  }
}

// sum_x P(S_n = x)^2 for n = 1..N under a single kernel.
std::vector<double> self_overlap(const StepKernel& q, int N) {
  PolymerField field(q, EngineOptions{std::numeric_limits<std::size_t>::max(), N});
  std::vector<double> out;
  out.reserve(static_cast<std::size_t>(N));
  for (int n = 1; n <= N; ++n) {
    field.step();
    double s = 0.0;
    field.for_each_site([&](const Site&, double v) { s += v * v; });
    out.push_back(s * std::exp(2.0 * field.log_scale()));
  }
  return out;
}

}  // namespace

ReturnSeries return_series(const StepKernel& dk, const LatticeBasis& basis, int N, std::size_t memory_budget) {
  const int d = dk.dim();
  require(d >= 3, ErrorCode::DimensionTooLow, "return series needs d >= 3 (got d = " + std::to_string(d) + ")");
  require(N >= 1, ErrorCode::InvalidArgument, "series length must be >= 1");
  require(basis.dim() == d, ErrorCode::InvalidArgument, "lattice basis has wrong dimension");
  for (std::size_t i = 0; i < dk.size(); ++i) {
    Site neg = dk.steps()[i];
    for (int& c : neg) c = -c;
    const double a = dk.probs()[i], b = dk.prob(neg);
    require(std::abs(a - b) <= 1e-12 * std::max(a, b), ErrorCode::NotSymmetric,
            "difference kernel is not symmetric at " + to_string(dk.steps()[i]));
  }
  ReturnSeries s;
  s.d = d;
  s.terms_requested = N;
  s.terms = affordable_terms(dk, N, memory_budget);
  if (s.terms >= kTailCalibrationTerms) {
    PolymerField field(dk, EngineOptions{memory_budget, s.terms});
    const Site origin(static_cast<std::size_t>(d), 0);
    for (int n = 1; n <= s.terms; ++n) {
      field.step();
      s.returns.push_back(std::exp(field.log_z(origin)));
    }
  }
  finish_series(s);
  const Vec zero_drift(static_cast<std::size_t>(d), 0.0);
  const Site origin(static_cast<std::size_t>(d), 0);
  try {
    s.clt_constant = local_clt_density(basis, dk.covariance(), zero_drift, 1, origin);
  } catch (const Error&) {
  }
  return s;
}

ReturnSeries return_series_from_walk(const StepKernel& q, int N, std::size_t memory_budget) {
  const int d = q.dim();
  require(d >= 3, ErrorCode::DimensionTooLow, "return series needs d >= 3 (got d = " + std::to_string(d) + ")");
  require(N >= 1, ErrorCode::InvalidArgument, "series length must be >= 1");
  ReturnSeries s;
  s.d = d;
  s.terms_requested = N;
  if (q.kind() == KernelKind::DiscreteGaussian) {
    // Product kernel: the return probability factorizes over axes.
    s.terms = N;
    s.returns.assign(static_cast<std::size_t>(N), 1.0);
    for (int a = 0; a < d; ++a) {
      const auto axis = StepKernel::discrete_gaussian(1, Vec{q.gaussian_center()[a]});
      const auto ov = self_overlap(axis, N);
      for (int n = 0; n < N; ++n) s.returns[static_cast<std::size_t>(n)] *= ov[static_cast<std::size_t>(n)];
    }
  } else {
    s.terms = affordable_terms(q, N, memory_budget);
    if (s.terms >= kTailCalibrationTerms) s.returns = self_overlap(q, s.terms);
  }
  finish_series(s);
  if (q.finite_range()) s.clt_constant = clt_constant(difference_walk(q));
  return s;
}

namespace {

TiltedKernel tilted_or_plain(const StepKernel& p, double beta, std::span<const double> h) {
  // beta = 0 or h = 0 leaves p unchanged; TiltedKernel needs beta > 0.
  return TiltedKernel(p, beta > 0.0 ? beta : 1.0,
                      beta > 0.0 ? Vec(h.begin(), h.end()) : Vec(static_cast<std::size_t>(p.dim()), 0.0));
}

}  // namespace

L2Result l2_criterion(const WeightModel& model, const StepKernel& p, double beta, std::span<const double> h,
                      const L2Options& options) {
  require(p.dim() >= 3, ErrorCode::DimensionTooLow, "the L2 criterion needs d >= 3");
  require(static_cast<int>(h.size()) == p.dim(), ErrorCode::InvalidArgument, "field has wrong dimension");
  L2Result out;
  out.M2 = second_moment_ratio(model, beta);
  const TiltedKernel q = tilted_or_plain(p, beta, h);
  out.series = return_series_from_walk(q.kernel(), options.series_terms, options.memory_budget);
  out.pi = out.series.pi();
  const double upper = out.series.pi_upper();
  out.pi_err = upper - out.pi;
  out.margin = 1.0 / upper - out.M2;
  out.certified = out.margin > 0.0;
  return out;
}

double log_fractional_moment(const WeightModel& model, const StepKernel& q, double beta, double theta) {
  require(theta > 0.0 && theta <= 1.0, ErrorCode::InvalidArgument, "theta must lie in (0, 1]");
  double m = -std::numeric_limits<double>::infinity();
  for (double lq : q.log_probs()) m = std::max(m, theta * lq);
  double s = 0.0;
  for (double lq : q.log_probs()) s += std::exp(theta * lq - m);
  return model.log_mgf(theta * beta) - theta * model.log_mgf(beta) + m + std::log(s);
}

double fractional_moment(const WeightModel& model, const StepKernel& q, double beta, double theta) {
  return std::exp(log_fractional_moment(model, q, beta, theta));
}

StrongDisorderResult strong_disorder_test(const WeightModel& model, const StepKernel& p, double beta,
                                          std::span<const double> h) {
  require(static_cast<int>(h.size()) == p.dim(), ErrorCode::InvalidArgument, "field has wrong dimension");
  const TiltedKernel tq = tilted_or_plain(p, beta, h);
  const StepKernel& q = tq.kernel();
  auto f = [&](double theta) { return log_fractional_moment(model, q, beta, theta); };

  constexpr double kLo = 1e-9, kHi = 1.0, kTol = 1e-8;
  const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
  double a = kLo, b = kHi;
  double c = b - inv_phi * (b - a), d = a + inv_phi * (b - a);
  double fc = f(c), fd = f(d);
  while (b - a > kTol) {
    if (fc < fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - inv_phi * (b - a);
      fc = f(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + inv_phi * (b - a);
      fd = f(d);
    }
  }
  double theta = 0.5 * (a + b), best = f(theta);
  // A minimizer pinned to an end of the bracket: confirm on a grid.
  if (theta < 1e-3 || theta > 1.0 - 1e-3) {
    for (int i = 1; i <= 1000; ++i) {
      const double t = i * 1e-3;
      const double v = f(t);
      if (v < best) {
        best = v;
        theta = t;
      }
    }
  }
  StrongDisorderResult out;
  out.theta_star = std::min(theta, 1.0);
  out.r_min = std::exp(best);
  out.certified = out.r_min < 1.0 - kStrongDisorderMargin;
  out.H_weights = relative_entropy(model, beta);
  out.H_walk = shannon_entropy(q);
  out.entropy_comparison = out.H_weights > out.H_walk;
  return out;
}

std::string_view to_string(PhaseClass c) {
  switch (c) {
    case PhaseClass::L2Weak: return "L2_WEAK";
    case PhaseClass::EntropyLowTemp: return "ENTROPY_LOW_TEMP";
    case PhaseClass::Undetermined: return "UNDETERMINED";
  }
  return "UNDETERMINED";
}

PhaseReport classify(const WeightModel& model, const StepKernel& p, double beta, std::span<const double> h,
                     const L2Options& options) {
  PhaseReport rep;
  rep.beta = beta;
  rep.h.assign(h.begin(), h.end());
  rep.M2 = second_moment_ratio(model, beta);

  bool l2 = false;
  if (p.dim() >= 3) {
    const L2Result r = l2_criterion(model, p, beta, h, options);
    rep.pi = r.pi;
    rep.pi_err = r.pi_err;
    rep.l2_margin = r.margin;
    rep.series_terms = r.series.terms;
    rep.series_tail = r.series.tail_bound;
    l2 = r.certified;
  }

  const StrongDisorderResult sd = strong_disorder_test(model, p, beta, h);
  rep.r_min = sd.r_min;
  rep.theta_star = sd.theta_star;
  rep.H_weights = sd.H_weights;
  rep.H_walk = sd.H_walk;
  rep.entropy_comparison = sd.entropy_comparison;

  if (p.finite_range()) {
    const ArgmaxSet K = argmax_set(p, h);
    rep.K_size = K.sites.size();
    rep.H_K = conditional_entropy(p, K.sites);
    rep.possibly_in_D = K.sites.size() > 1;
  }

  if (l2 && sd.certified) {
    rep.conflict = true;
    rep.classification = PhaseClass::Undetermined;
  } else if (l2) {
    rep.classification = PhaseClass::L2Weak;
  } else if (sd.certified) {
    rep.classification = PhaseClass::EntropyLowTemp;
  }
  return rep;
}

}  // namespace polymerlab
