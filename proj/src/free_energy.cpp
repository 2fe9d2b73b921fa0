#include "polymerlab/free_energy.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "polymerlab/error.hpp"
#include "polymerlab/parallel.hpp"
#include "polymerlab/stats.hpp"

namespace polymerlab {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

void check_common(double beta, int n, int samples) {
  require(beta > 0.0 && std::isfinite(beta), ErrorCode::InvalidArgument, "beta must be > 0");
  require(n >= 1, ErrorCode::InvalidArgument, "n must be >= 1");
  require(samples >= 1, ErrorCode::InvalidArgument, "samples must be >= 1");
}

}  // namespace

double sample_log_partition(const StepKernel& q, double beta, const Environment& env, int n,
                            const RunOptions& options) {
  EngineOptions eo = options.engine;
  eo.reserve_steps = n;
  if (options.single_precision) {
    PolymerFieldF field(q, beta, env, eo);
    field.advance_to(n);
    return field.log_partition();
  }
  PolymerField field(q, beta, env, eo);
  field.advance_to(n);
  return field.log_partition();
}

FreeEnergyEstimate estimate_gpl(const WeightModel& model, const StepKernel& p, double beta,
                                std::span<const double> h, int n, int samples, std::uint64_t seed,
                                const RunOptions& options) {
  check_common(beta, n, samples);
  const TiltedKernel q = tilt(p, beta, h);
  FreeEnergyEstimate est;
  est.beta = beta;
  est.h.assign(h.begin(), h.end());
  est.n = n;
  est.samples = samples;
  est.values.resize(static_cast<std::size_t>(samples));
  const double shift = q.log_mgf() / beta;
  parallel_for(static_cast<std::size_t>(samples), options.threads, [&](std::size_t s) {
    const Environment env(seed, s, model);
    est.values[s] = sample_log_partition(q.kernel(), beta, env, n, options) / (beta * n) + shift;
  });
  const MeanSe m = mean_se(est.values);
  est.mean = m.mean;
  est.se = m.se;
  est.annealed = (model.log_mgf(beta) + q.log_mgf()) / beta;
  est.gap = est.annealed - est.mean;
  est.gap_se = est.se;
  return est;
}

double P2PSurface::at(std::span<const int> x) const {
  if (!window.contains(x)) return kNegInf;
  return value[window.index(x)];
}

namespace {

// Runs `fill(sample, slab)` per sample and folds the slabs in sample order,
// so the result does not depend on the thread count.
template <class Fill>
P2PSurface fold_surface(const StepKernel& p, double beta, int n, int samples, int threads, Fill&& fill) {
  P2PSurface surf;
  surf.n = n;
  surf.beta = beta;
  surf.samples = samples;
  {
    Site lo = p.min_step(), hi = p.max_step();
    for (auto& c : lo) c *= n;
    for (auto& c : hi) c *= n;
    surf.window = Box(lo, hi);
  }
  const std::size_t volume = surf.window.volume();
  std::vector<double> mean(volume, 0.0), m2(volume, 0.0);
  surf.count.assign(volume, 0);

  const std::size_t chunk = static_cast<std::size_t>(std::max(1, threads));
  std::vector<std::vector<double>> slabs(chunk);
  for (std::size_t first = 0; first < static_cast<std::size_t>(samples); first += chunk) {
    const std::size_t size = std::min(chunk, static_cast<std::size_t>(samples) - first);
    parallel_for(size, threads, [&](std::size_t i) {
      slabs[i].assign(volume, kNegInf);
      fill(first + i, surf.window, slabs[i]);
    });
    for (std::size_t i = 0; i < size; ++i)
      for (std::size_t k = 0; k < volume; ++k) {
        const double v = slabs[i][k];
        if (v == kNegInf) continue;
        const int cnt = ++surf.count[k];
        const double delta = v - mean[k];
        mean[k] += delta / cnt;
        m2[k] += delta * (v - mean[k]);
      }
  }
  surf.value.assign(volume, kNegInf);
  surf.stdev.assign(volume, 0.0);
  for (std::size_t k = 0; k < volume; ++k) {
    if (surf.count[k] != samples) continue;
    surf.value[k] = mean[k];
    surf.stdev[k] = samples > 1 ? std::sqrt(m2[k] / (samples - 1)) : 0.0;
  }
  return surf;
}

}  // namespace

P2PSurface p2p_surface(const WeightModel& model, const StepKernel& p, double beta, int n, int samples,
                       std::uint64_t seed, const RunOptions& options) {
  check_common(beta, n, samples);
  const double scale = 1.0 / (beta * n);
  return fold_surface(p, beta, n, samples, options.threads,
                      [&](std::size_t sample, const Box& window, std::vector<double>& slab) {
                        EngineOptions eo = options.engine;
                        eo.reserve_steps = n;
                        PolymerField field(p, beta, Environment(seed, sample, model), eo);
                        field.advance_to(n);
                        const double c = field.log_scale();
                        field.for_each_site(
                            [&](const Site& x, double v) { slab[window.index(x)] = (c + std::log(v)) * scale; });
                      });
}

P2PSurface p2p_surface_two_scale(const WeightModel& model, const StepKernel& p, double beta, int n,
                                 int samples, std::uint64_t seed, const RunOptions& options) {
  check_common(beta, n, samples);
  const double scale = 1.0 / (beta * n);
  return fold_surface(p, beta, n, samples, options.threads,
                      [&](std::size_t sample, const Box& window, std::vector<double>& slab) {
                        EngineOptions eo = options.engine;
                        eo.reserve_steps = 2 * n;
                        PolymerField field(p, beta, Environment(seed, sample, model), eo);
                        field.advance_to(n);
                        double c = field.log_scale();
                        field.for_each_site([&](const Site& x, double v) { slab[window.index(x)] = c + std::log(v); });
                        field.advance_to(2 * n);
                        c = field.log_scale();
                        Site y;
                        for (std::size_t k = 0; k < slab.size(); ++k) {
                          if (slab[k] == kNegInf) continue;
                          y = window.site(k);
                          for (int& a : y) a *= 2;
                          const double lz = field.log_z(y);
                          slab[k] = lz == kNegInf ? kNegInf : (lz - slab[k]) * scale;
                        }
                      });
}

double legendre(const P2PSurface& surface, std::span<const double> h) {
  require(static_cast<int>(h.size()) == surface.window.dim(), ErrorCode::InvalidArgument,
          "field has wrong dimension");
  double best = kNegInf;
  for (std::size_t k = 0; k < surface.value.size(); ++k) {
    if (!surface.finite(k)) continue;
    const Site x = surface.window.site(k);
    best = std::max(best, surface.value[k] + dot(x, h) / surface.n);
  }
  require(best != kNegInf, ErrorCode::EmptySurface, "surface has no finite site");
  return best;
}

std::vector<MonotonicityRow> monotonicity_sweep(const WeightModel& model, const StepKernel& p,
                                                std::span<const double> h0, std::span<const double> betas,
                                                int n, int samples, std::uint64_t seed,
                                                const RunOptions& options) {
  require(!betas.empty(), ErrorCode::InvalidArgument, "beta list is empty");
  for (std::size_t i = 0; i < betas.size(); ++i) {
    check_common(betas[i], n, samples);
    require(i == 0 || betas[i] > betas[i - 1], ErrorCode::InvalidArgument, "betas must be ascending");
  }
  const TiltedKernel q = tilt(p, 1.0, h0);
  const std::size_t nb = betas.size();
  std::vector<double> ghat(static_cast<std::size_t>(samples) * nb);
  parallel_for(static_cast<std::size_t>(samples), options.threads, [&](std::size_t s) {
    const Environment env(seed, s, model);
    for (std::size_t b = 0; b < nb; ++b)
      ghat[s * nb + b] = sample_log_partition(q.kernel(), betas[b], env, n, options) / n + q.log_mgf() -
                         model.log_mgf(betas[b]);
  });
  std::vector<MonotonicityRow> rows(nb);
  std::vector<double> col(static_cast<std::size_t>(samples)), diff(col.size());
  for (std::size_t b = 0; b < nb; ++b) {
    for (std::size_t s = 0; s < col.size(); ++s) col[s] = ghat[s * nb + b];
    const MeanSe m = mean_se(col);
    rows[b].beta = betas[b];
    rows[b].mean = m.mean;
    rows[b].se = m.se;
    if (b == 0) continue;
    std::size_t up = 0;
    for (std::size_t s = 0; s < col.size(); ++s) {
      diff[s] = ghat[s * nb + b] - ghat[s * nb + b - 1];
      up += diff[s] > 0.0;
    }
    const MeanSe d = mean_se(diff);
    rows[b].diff = d.mean;
    rows[b].diff_se = d.se;
    rows[b].violation_rate = static_cast<double>(up) / static_cast<double>(samples);
  }
  return rows;
}

}  // namespace polymerlab
