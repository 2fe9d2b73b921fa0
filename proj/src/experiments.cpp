#include "polymerlab/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "polymerlab/error.hpp"
#include "polymerlab/parallel.hpp"
#include "polymerlab/stats.hpp"

namespace polymerlab {

ExponentFit fit_exponent(std::span<const double> series, double burn_in, std::string statistic) {
  require(burn_in >= 0.0 && burn_in < 1.0, ErrorCode::InvalidArgument, "burn-in must lie in [0, 1)");
  ExponentFit fit;
  fit.statistic = std::move(statistic);
  fit.series.assign(series.begin(), series.end());
  fit.burn_in = burn_in;
  const int n = static_cast<int>(series.size());
  const double cut = burn_in * n;
  std::vector<double> xs, ys;
  for (int k = 1; k <= n; ++k) {
    if (k <= cut) continue;
    const double t = series[static_cast<std::size_t>(k - 1)];
    require(t > 0.0 && std::isfinite(t), ErrorCode::NonPositiveValues,
            "series value at k = " + std::to_string(k) + " is not positive");
    xs.push_back(std::log(static_cast<double>(k)));
    ys.push_back(std::log(t));
  }
  fit.points = static_cast<int>(xs.size());
  require(fit.points >= 2, ErrorCode::InvalidArgument, "fit window holds fewer than two points");
  const double m = static_cast<double>(fit.points);
  CompensatedSum sx, sy;
  for (int i = 0; i < fit.points; ++i) {
    sx.add(xs[i]);
    sy.add(ys[i]);
  }
  const double mx = sx.value() / m, my = sy.value() / m;
  CompensatedSum sxx, sxy, syy;
  for (int i = 0; i < fit.points; ++i) {
    const double dx = xs[i] - mx, dy = ys[i] - my;
    sxx.add(dx * dx);
    sxy.add(dx * dy);
    syy.add(dy * dy);
  }
  fit.slope = sxy.value() / sxx.value();
  fit.intercept = my - fit.slope * mx;
  CompensatedSum rss;
  for (int i = 0; i < fit.points; ++i) {
    const double r = ys[i] - fit.intercept - fit.slope * xs[i];
    rss.add(r * r);
  }
  fit.r2 = syy.value() > 0.0 ? 1.0 - rss.value() / syy.value() : 1.0;
  fit.slope_se = fit.points > 2 ? std::sqrt(rss.value() / (m - 2.0) / sxx.value()) : 0.0;
  return fit;
}

namespace {

TiltedKernel walk_kernel(const ExperimentSetup& s) {
  const Vec h = s.field();
  require(static_cast<int>(h.size()) == s.p.dim(), ErrorCode::InvalidArgument, "field has wrong dimension");
  require(s.beta >= 0.0 && std::isfinite(s.beta), ErrorCode::InvalidArgument, "beta must be >= 0");
  require(s.n >= 1, ErrorCode::InvalidArgument, "n must be >= 1");
  require(s.samples >= 1, ErrorCode::InvalidArgument, "samples must be >= 1");
  // At beta = 0 the field has no effect.
  return s.beta > 0.0 ? tilt(s.p, s.beta, h) : TiltedKernel(s.p, 1.0, Vec(h.size(), 0.0));
}

template <class Real>
PolymerFieldT<Real> make_field(const ExperimentSetup& s, const StepKernel& q, std::size_t sample) {
  EngineOptions eo = s.run.engine;
  eo.reserve_steps = s.n;
  if (s.beta == 0.0) return PolymerFieldT<Real>(q, eo);
  return PolymerFieldT<Real>(q, s.beta, Environment(s.seed, sample, s.model), eo);
}

// Per-sample, per-k quantities behind the four statistics.
struct KRecord {
  double log_w;
  double norm1;
  double norm2;
  double argmax_norm;
};

template <class Real>
void table1_sample(const ExperimentSetup& s, const StepKernel& q, double lambda, std::size_t sample,
                   std::vector<KRecord>& out) {
  auto field = make_field<Real>(s, q, sample);
  const int d = q.dim();
  out.resize(static_cast<std::size_t>(s.n));
  for (int k = 1; k <= s.n; ++k) {
    field.step();
    double total = 0.0, n1 = 0.0, n2 = 0.0, best = -1.0, best_norm = 0.0;
    field.for_each_site([&](const Site& x, double v) {
      double r2 = 0.0;
      for (int a = 0; a < d; ++a) r2 += static_cast<double>(x[a]) * x[a];
      const double r = d == 1 ? std::abs(static_cast<double>(x[0])) : std::sqrt(r2);
      total += v;
      n1 += v * r;
      n2 += v * r2;
      // First strict maximum: lexicographically smallest maximizer.
      if (v > best) {
        best = v;
        best_norm = r;
      }
    });
    out[static_cast<std::size_t>(k - 1)] = {field.log_scale() + std::log(total) - k * lambda, n1 / total,
                                            n2 / total, best_norm};
  }
}

// Welford accumulator.
struct Running {
  double mean = 0.0;
  double m2 = 0.0;
  int count = 0;
  void add(double x) {
    ++count;
    const double delta = x - mean;
    mean += delta / count;
    m2 += delta * (x - mean);
  }
  double variance() const { return count > 1 ? m2 / (count - 1) : 0.0; }
};

}  // namespace

Table1Result table1_statistics(const ExperimentSetup& setup, double burn_in) {
  const TiltedKernel tq = walk_kernel(setup);
  const StepKernel& q = tq.kernel();
  const double lambda = setup.beta > 0.0 ? setup.model.log_mgf(setup.beta) : 0.0;
  const std::size_t n = static_cast<std::size_t>(setup.n);
  std::vector<Running> logw(n), argmax(n);
  std::vector<CompensatedSum> gibbs_var(n), norm1(n), norm2(n);

  // Samples run in chunks and are folded in sample order, so results do not
  // depend on the thread count.
  const std::size_t chunk = static_cast<std::size_t>(std::max(1, setup.run.threads)) * 4;
  std::vector<std::vector<KRecord>> recs(chunk);
  const auto total = static_cast<std::size_t>(setup.samples);
  for (std::size_t first = 0; first < total; first += chunk) {
    const std::size_t size = std::min(chunk, total - first);
    parallel_for(size, setup.run.threads, [&](std::size_t i) {
      if (setup.run.single_precision)
        table1_sample<float>(setup, q, lambda, first + i, recs[i]);
      else
        table1_sample<double>(setup, q, lambda, first + i, recs[i]);
    });
    for (std::size_t i = 0; i < size; ++i)
      for (std::size_t k = 0; k < n; ++k) {
        const KRecord& r = recs[i][k];
        logw[k].add(r.log_w);
        argmax[k].add(r.argmax_norm);
        gibbs_var[k].add(r.norm2 - r.norm1 * r.norm1);
        norm1[k].add(r.norm1);
        norm2[k].add(r.norm2);
      }
  }

  Table1Result res;
  res.d = q.dim();
  res.h = setup.field();
  res.beta = setup.beta;
  res.n = setup.n;
  res.samples = setup.samples;
  for (auto& sr : res.series) sr.resize(n);
  const double m = static_cast<double>(setup.samples);
  for (std::size_t k = 0; k < n; ++k) {
    res.series[0][k] = std::sqrt(logw[k].variance());
    res.series[1][k] = std::sqrt(std::max(0.0, gibbs_var[k].value() / m));
    const double e1 = norm1[k].value() / m;
    res.series[2][k] = std::sqrt(std::max(0.0, norm2[k].value() / m - e1 * e1));
    res.series[3][k] = std::sqrt(argmax[k].variance());
  }
  for (std::size_t i = 0; i < 4; ++i) {
    try {
      res.fits[i] = fit_exponent(res.series[i], burn_in, kTable1Names[i]);
    } catch (const Error& e) {
      // A degenerate statistic (e.g. zero variance without disorder) keeps its
      // series but has no fit.
      if (e.code() != ErrorCode::NonPositiveValues) throw;
      res.fits[i].statistic = kTable1Names[i];
      res.fits[i].series = res.series[i];
      res.fits[i].burn_in = burn_in;
      res.fits[i].slope = std::numeric_limits<double>::quiet_NaN();
      res.fits[i].slope_se = std::numeric_limits<double>::quiet_NaN();
      res.fits[i].r2 = std::numeric_limits<double>::quiet_NaN();
    }
  }
  return res;
}

std::vector<CurveRow> legendre_curve(const P2PSurface& surface, const WeightModel& model, const StepKernel& p,
                                     std::span<const Vec> fields) {
  std::vector<CurveRow> rows;
  for (const Vec& h : fields) {
    CurveRow r;
    r.beta = surface.beta;
    r.h = h;
    r.g = legendre(surface, h);
    for (std::size_t k = 0; k < surface.value.size(); ++k) {
      if (!surface.finite(k)) continue;
      const Site x = surface.window.site(k);
      if (surface.value[k] + dot(x, h) / surface.n == r.g) {
        r.se = surface.stdev[k] / std::sqrt(static_cast<double>(surface.samples));
        break;
      }
    }
    r.annealed = (model.log_mgf(surface.beta) + p.log_mgf(scaled(h, surface.beta))) / surface.beta;
    r.gap = r.annealed - r.g;
    rows.push_back(std::move(r));
  }
  return rows;
}

std::string_view to_string(SurfaceEstimator e) {
  return e == SurfaceEstimator::TwoScale ? "two_scale" : "single_scale";
}

P2PSurface estimate_surface(const ExperimentSetup& setup, double beta, SurfaceEstimator estimator) {
  return estimator == SurfaceEstimator::TwoScale
             ? p2p_surface_two_scale(setup.model, setup.p, beta, setup.n, setup.samples, setup.seed, setup.run)
             : p2p_surface(setup.model, setup.p, beta, setup.n, setup.samples, setup.seed, setup.run);
}

std::vector<CurveRow> figure2_curve(const ExperimentSetup& setup, std::span<const double> betas,
                                    std::span<const Vec> fields, SurfaceEstimator estimator) {
  std::vector<CurveRow> rows;
  for (double beta : betas) {
    const auto part = legendre_curve(estimate_surface(setup, beta, estimator), setup.model, setup.p, fields);
    rows.insert(rows.end(), part.begin(), part.end());
  }
  return rows;
}

std::vector<PhaseGridPoint> phase_grid(const WeightModel& model, const StepKernel& p, double beta,
                                       const PhaseGridSpec& spec) {
  const int d = p.dim();
  require(spec.axis_a >= 0 && spec.axis_a < d && spec.axis_b >= 0 && spec.axis_b < d && spec.axis_a != spec.axis_b,
          ErrorCode::InvalidArgument, "grid axes must be two distinct coordinates");
  require(spec.points >= 1, ErrorCode::InvalidArgument, "grid needs at least one point per axis");
  require(spec.hi >= spec.lo, ErrorCode::InvalidArgument, "grid range is empty");
  std::vector<PhaseGridPoint> out;
  const double step = spec.points > 1 ? (spec.hi - spec.lo) / (spec.points - 1) : 0.0;
  for (int i = 0; i < spec.points; ++i)
    for (int j = 0; j < spec.points; ++j) {
      Vec h(static_cast<std::size_t>(d), 0.0);
      h[spec.axis_a] = spec.lo + i * step;
      h[spec.axis_b] = spec.lo + j * step;
      out.push_back({h, classify(model, p, beta, h, spec.l2)});
    }
  return out;
}

LocalizationResult localization_run(const ExperimentSetup& setup) {
  const TiltedKernel tq = walk_kernel(setup);
  LocalizationResult res;
  res.n = setup.n;
  res.series.resize(static_cast<std::size_t>(setup.samples));
  res.averages.resize(res.series.size());
  parallel_for(res.series.size(), setup.run.threads, [&](std::size_t s) {
    auto field = make_field<double>(setup, tq.kernel(), s);
    auto& js = res.series[s];
    js.reserve(static_cast<std::size_t>(setup.n));
    for (int t = 0; t < setup.n; ++t) {
      js.push_back(next_localization(field));
      field.step();
    }
    res.averages[s] = localization_average(js);
  });
  const MeanSe m = mean_se(res.averages);
  res.mean = m.mean;
  res.se = m.se;
  return res;
}

CltRun clt_run(const ExperimentSetup& setup, const L2Options& l2) {
  const TiltedKernel tq = walk_kernel(setup);
  CltRun run;
  run.summaries.resize(static_cast<std::size_t>(setup.samples));
  parallel_for(run.summaries.size(), setup.run.threads, [&](std::size_t s) {
    auto field = make_field<double>(setup, tq.kernel(), s);
    field.advance_to(setup.n);
    run.summaries[s] = endpoint_summary(field);
  });
  if (setup.p.dim() >= 3) {
    const L2Result r = l2_criterion(setup.model, setup.p, setup.beta, setup.field(), l2);
    run.l2_certified = r.certified;
    run.l2_margin = r.margin;
  }
  run.report = endpoint_clt_check(run.summaries, tq.mean(), tq.covariance(), setup.n, run.l2_certified);
  return run;
}

}  // namespace polymerlab
