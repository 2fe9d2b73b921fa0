#include "polymerlab/engine.hpp"

#include <algorithm>
#include <bit>
#include <climits>
#include <map>

#if defined(__SSE__)
#include <xmmintrin.h>
#endif

#include "polymerlab/error.hpp"
#include "polymerlab/stats.hpp"

namespace polymerlab {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

// Flush subnormals to zero while stepping: cells that far below the maximum
// are dropped anyway, and subnormal arithmetic is very slow.
class FlushDenormals {
 public:
  FlushDenormals() {
#if defined(__SSE__)
    saved_ = _mm_getcsr();
    _mm_setcsr(saved_ | 0x8040);
#endif
  }
  ~FlushDenormals() {
#if defined(__SSE__)
    _mm_setcsr(saved_);
#endif
  }
  FlushDenormals(const FlushDenormals&) = delete;
  FlushDenormals& operator=(const FlushDenormals&) = delete;

 private:
  unsigned saved_ = 0;
};

}  // namespace

template <class Real>
void PolymerFieldT<Real>::prepare_weights() {
  // exp(beta w) for Uniform[0,1) draws w = m 2^-53: a 2048-entry table on
  // the top 11 bits of m times a degree-5 series on the rest. The series
  // remainder is below 1e-17 relative while beta <= 10.
  table_exp_ = beta_ != 0.0 && env_.model().family() == WeightFamily::Uniform01 && std::abs(beta_) <= 10.0;
  if (!table_exp_) return;
  exp_table_.resize(kExpTableSize);
  for (std::size_t i = 0; i < kExpTableSize; ++i)
    exp_table_[i] = std::exp(beta_ * static_cast<double>(i) / static_cast<double>(kExpTableSize));
}

template <class Real>
PolymerFieldT<Real>::PolymerFieldT(StepKernel q, double beta, Environment env, EngineOptions options)
    : q_(std::move(q)), beta_(beta), env_(std::move(env)), options_(options) {
  require(std::isfinite(beta_), ErrorCode::InvalidArgument, "beta must be finite");
  prepare_kernel();
  prepare_weights();
  box_ = Box::origin(q_.dim());
  ranges_.assign(1, RowRange{0, 1});
  std::size_t need = 1;
  if (options_.reserve_steps > 0) {
    const std::size_t bytes = bytes_required(q_, options_.reserve_steps);
    require(bytes <= options_.memory_budget, ErrorCode::WindowOverflow,
            "window for n = " + std::to_string(options_.reserve_steps) + " needs " + std::to_string(bytes) +
                " bytes, budget is " + std::to_string(options_.memory_budget));
    need = bytes / 2 / sizeof(Real);
    ensure_capacity(next_, next_cap_, need);
  }
  ensure_capacity(data_, data_cap_, need);
  data_[0] = Real(1);
}

template <class Real>
PolymerFieldT<Real>::PolymerFieldT(StepKernel q, EngineOptions options)
    : PolymerFieldT(std::move(q), 0.0, Environment(0, 0, WeightModel::point_mass(0.0)), options) {}

template <class Real>
std::size_t PolymerFieldT<Real>::bytes_required(const StepKernel& q, int n) {
  const Site lo = q.min_step(), hi = q.max_step();
  std::size_t volume = 1;
  for (int a = 0; a < q.dim(); ++a) {
    const auto ext = static_cast<std::size_t>(n) * static_cast<std::size_t>(hi[a] - lo[a]) + 1;
    if (volume > std::numeric_limits<std::size_t>::max() / 4 / ext) return std::numeric_limits<std::size_t>::max();
    volume *= ext;
  }
  return 2 * volume * sizeof(Real);
}

template <class Real>
void PolymerFieldT<Real>::prepare_kernel() {
  const int d = q_.dim();
  min_step_ = q_.min_step();
  max_step_ = q_.max_step();
  std::map<Site, std::size_t> index;
  for (std::size_t k = 0; k < q_.size(); ++k) {
    const Site& s = q_.steps()[k];
    Site lead(s.begin(), s.end() - 1);
    auto [it, inserted] = index.emplace(lead, groups_.size());
    if (inserted) groups_.push_back(Group{lead, {}, {}, INT_MAX, INT_MIN});
    Group& g = groups_[it->second];
    const int shift = s[d - 1] - min_step_[d - 1];
    g.shift.push_back(shift);
    g.prob.push_back(q_.probs()[k]);
    g.shift_lo = std::min(g.shift_lo, shift);
    g.shift_hi = std::max(g.shift_hi, shift);
  }
}

template <class Real>
void PolymerFieldT<Real>::ensure_capacity(std::unique_ptr<Real[]>& buf, std::size_t& cap, std::size_t need) {
  if (need <= cap) return;
  const std::size_t grown = std::max(need, cap + cap / 2);
  buf = std::make_unique_for_overwrite<Real[]>(grown);
  cap = grown;
}

template <class Real>
template <class Visit>
void PolymerFieldT<Real>::gather_rows(const Box& next, Visit&& visit) const {
  const int d = box_.dim();
  const int lead_dim = d - 1;
  const auto ext_old = static_cast<std::size_t>(box_.extent(d - 1));
  const std::size_t groups = groups_.size();
  std::vector<std::ptrdiff_t> src(groups);
  Site lead(next.lo().begin(), next.lo().end() - 1);
  acc_.resize(static_cast<std::size_t>(next.extent(d - 1)));
  for (std::size_t R = 0; R < next.rows(); ++R) {
    int lo = INT_MAX, hi = INT_MIN;
    for (std::size_t g = 0; g < groups; ++g) {
      std::ptrdiff_t idx = 0;
      for (int a = 0; a < lead_dim; ++a) {
        const int c = lead[a] - groups_[g].lead[a];
        if (c < box_.lo()[a] || c > box_.hi()[a]) {
          idx = -1;
          break;
        }
        idx = idx * box_.extent(a) + (c - box_.lo()[a]);
      }
      if (idx >= 0 && ranges_[static_cast<std::size_t>(idx)].empty()) idx = -1;
      src[g] = idx;
      if (idx < 0) continue;
      const RowRange rr = ranges_[static_cast<std::size_t>(idx)];
      lo = std::min(lo, rr.lo + groups_[g].shift_lo);
      hi = std::max(hi, rr.hi + groups_[g].shift_hi);
    }
    if (lo < hi) {
      double* acc = acc_.data();
      std::fill(acc + lo, acc + hi, 0.0);
      for (std::size_t g = 0; g < groups; ++g) {
        if (src[g] < 0) continue;
        const RowRange rr = ranges_[static_cast<std::size_t>(src[g])];
        const Real* in = data_.get() + static_cast<std::size_t>(src[g]) * ext_old;
        const Group& grp = groups_[g];
        for (std::size_t k = 0; k < grp.shift.size(); ++k) {
          const double p = grp.prob[k];
          double* __restrict dst = acc + grp.shift[k];
          const Real* __restrict from = in;
          for (int i = rr.lo; i < rr.hi; ++i) dst[i] += p * static_cast<double>(from[i]);
        }
      }
      visit(R, static_cast<const Site&>(lead), RowRange{lo, hi}, static_cast<const double*>(acc));
    } else {
      visit(R, static_cast<const Site&>(lead), RowRange{0, 0}, static_cast<const double*>(nullptr));
    }
    for (int a = lead_dim - 1; a >= 0; --a) {
      if (++lead[a] <= next.hi()[a]) break;
      lead[a] = next.lo()[a];
    }
  }
}

template <class Real>
void PolymerFieldT<Real>::step() {
  FlushDenormals guard;
  const int d = box_.dim();
  const Box next = box_.expanded(min_step_, max_step_);
  const std::size_t bytes = 2 * next.volume() * sizeof(Real);
  require(bytes <= options_.memory_budget, ErrorCode::WindowOverflow,
          "window at n = " + std::to_string(n_ + 1) + " needs " + std::to_string(bytes) + " bytes, budget is " +
              std::to_string(options_.memory_budget));
  ensure_capacity(next_, next_cap_, next.volume());

  const int t = n_ + 1;
  const int last_lo = next.lo()[d - 1];
  const auto ext_new = static_cast<std::size_t>(next.extent(d - 1));
  const double inv = 1.0 / max_value_;
  double new_max = 0.0;
  std::uint64_t checksum = checksum_;
  std::vector<RowRange> out_ranges(next.rows());
  Real* out = next_.get();
  gather_rows(next, [&](std::size_t R, const Site& lead, RowRange o, const double* acc) {
    if (o.empty()) {
      out_ranges[R] = RowRange{0, 0};
      return;
    }
    Real* orow = out + R * ext_new;
    int first = INT_MAX, last = INT_MIN;
    if (beta_ == 0.0) {
      for (int j = o.lo; j < o.hi; ++j) {
        const auto v = static_cast<Real>(acc[j] * inv);
        orow[j] = v;
        if (v == Real(0)) continue;
        first = std::min(first, j);
        last = j;
        new_max = std::max(new_max, static_cast<double>(v));
      }
    } else {
      const WeightRow weights = env_.row(t, lead);
      for (int j = o.lo; j < o.hi; ++j) {
        if (acc[j] == 0.0) {
          orow[j] = Real(0);
          continue;
        }
        double boltzmann;
        if (table_exp_) {
          const std::uint64_t m = weights.key(last_lo + j) >> 11;
          const double w = static_cast<double>(m) * 0x1.0p-53;
          checksum ^= std::bit_cast<std::uint64_t>(w);
          const double x = beta_ * static_cast<double>(m & kExpLowMask) * 0x1.0p-53;
          const double series = 1.0 + x * (1.0 + x * (0.5 + x * (1.0 / 6 + x * (1.0 / 24 + x * (1.0 / 120)))));
          boltzmann = exp_table_[m >> kExpLowBits] * series;
        } else {
          const double w = weights(last_lo + j);
          checksum ^= std::bit_cast<std::uint64_t>(w);
          boltzmann = std::exp(beta_ * w);
        }
        const auto v = static_cast<Real>(acc[j] * boltzmann * inv);
        orow[j] = v;
        if (v == Real(0)) continue;
        first = std::min(first, j);
        last = j;
        new_max = std::max(new_max, static_cast<double>(v));
      }
    }
    out_ranges[R] = first <= last ? RowRange{first, last + 1} : RowRange{0, 0};
  });
  require(new_max > 0.0 && std::isfinite(new_max), ErrorCode::NumericError,
          "partition function left the representable range at n = " + std::to_string(t));

  std::swap(data_, next_);
  std::swap(data_cap_, next_cap_);
  box_ = next;
  ranges_ = std::move(out_ranges);
  scale_ += std::log(max_value_);
  max_value_ = new_max;
  checksum_ = checksum;
  n_ = t;
  log_partition_.reset();
}

template <class Real>
void PolymerFieldT<Real>::advance_to(int n) {
  require(n >= n_, ErrorCode::InvalidArgument, "cannot move a field backwards in time");
  while (n_ < n) step();
}

template <class Real>
double PolymerFieldT<Real>::log_z(std::span<const int> x) const {
  require(static_cast<int>(x.size()) == box_.dim(), ErrorCode::InvalidArgument, "site has wrong dimension");
  if (!box_.contains(x)) return kNegInf;
  const int d = box_.dim();
  const std::ptrdiff_t r = box_.row_index(x.first(x.size() - 1));
  const int j = x[d - 1] - box_.lo()[d - 1];
  const RowRange rr = ranges_[static_cast<std::size_t>(r)];
  if (j < rr.lo || j >= rr.hi) return kNegInf;
  const double v = data_[static_cast<std::size_t>(r) * static_cast<std::size_t>(box_.extent(d - 1)) + j];
  return v > 0.0 ? scale_ + std::log(v) : kNegInf;
}

template <class Real>
double PolymerFieldT<Real>::log_partition() const {
  if (log_partition_) return *log_partition_;
  const int d = box_.dim();
  const auto ext = static_cast<std::size_t>(box_.extent(d - 1));
  double s = 0.0;
  for (std::size_t r = 0; r < ranges_.size(); ++r) {
    const RowRange rr = ranges_[r];
    const Real* row = data_.get() + r * ext;
    for (int j = rr.lo; j < rr.hi; ++j) s += row[j];
  }
  log_partition_ = scale_ + std::log(s);
  return *log_partition_;
}

template <class Real>
double PolymerFieldT<Real>::fold_max_log() const {
  FlushDenormals guard;
  const Box next = box_.expanded(min_step_, max_step_);
  double best = 0.0;
  gather_rows(next, [&](std::size_t, const Site&, RowRange o, const double* acc) {
    for (int j = o.lo; j < o.hi; ++j) best = std::max(best, acc[j]);
  });
  return scale_ + std::log(best) - log_partition();
}

template class PolymerFieldT<double>;
template class PolymerFieldT<float>;

template <class Real>
EndpointSummary endpoint_summary(const PolymerFieldT<Real>& field) {
  const int d = field.window().dim();
  EndpointSummary s;
  s.n = field.time();
  s.log_partition = field.log_partition();
  std::vector<CompensatedSum> m1(d), m2(static_cast<std::size_t>(d * d));
  CompensatedSum norm1, norm2;
  s.max_prob = -1.0;
  const double total = std::exp(s.log_partition - field.log_scale());
  field.for_each_site([&](const Site& x, double v) {
    const double mu = v / total;
    if (mu > s.max_prob) {
      s.max_prob = mu;
      s.argmax = x;
    }
    double r2 = 0.0;
    for (int a = 0; a < d; ++a) {
      m1[a].add(mu * x[a]);
      for (int b = a; b < d; ++b) m2[a * d + b].add(mu * x[a] * x[b]);
      r2 += static_cast<double>(x[a]) * x[a];
    }
    norm1.add(mu * std::sqrt(r2));
    norm2.add(mu * r2);
  });
  s.mean.resize(d);
  for (int a = 0; a < d; ++a) s.mean[a] = m1[a].value();
  s.cov = Eigen::MatrixXd(d, d);
  for (int a = 0; a < d; ++a)
    for (int b = a; b < d; ++b) s.cov(a, b) = s.cov(b, a) = m2[a * d + b].value() - s.mean[a] * s.mean[b];
  s.mean_norm = norm1.value();
  s.mean_norm2 = norm2.value();
  return s;
}

template <class Real>
EndpointMeasure endpoint_measure(const PolymerFieldT<Real>& field) {
  require(field.time() >= 1, ErrorCode::InvalidArgument, "endpoint measure needs n >= 1");
  EndpointMeasure m;
  m.window = field.window();
  m.mu.assign(m.window.volume(), 0.0);
  const double total = std::exp(field.log_partition() - field.log_scale());
  field.for_each_site([&](const Site& x, double v) { m.mu[m.window.index(x)] = v / total; });
  m.summary = endpoint_summary(field);
  return m;
}

template EndpointSummary endpoint_summary(const PolymerFieldT<double>&);
template EndpointSummary endpoint_summary(const PolymerFieldT<float>&);
template EndpointMeasure endpoint_measure(const PolymerFieldT<double>&);
template EndpointMeasure endpoint_measure(const PolymerFieldT<float>&);

double localization_average(std::span<const double> j_series) {
  require(!j_series.empty(), ErrorCode::EmptySeries, "localization series is empty");
  CompensatedSum s;
  for (double j : j_series) s.add(j);
  return s.value() / static_cast<double>(j_series.size());
}

CltReport endpoint_clt_check(std::span<const EndpointSummary> samples, const Vec& drift,
                             const Eigen::MatrixXd& sigma, int n, bool l2_certified) {
  require(!samples.empty(), ErrorCode::EmptySeries, "no endpoint samples");
  require(n >= 1, ErrorCode::InvalidArgument, "n must be >= 1");
  const int d = static_cast<int>(drift.size());
  CltReport rep;
  rep.n = n;
  rep.d = d;
  rep.drift = drift;
  rep.sigma = sigma;
  rep.phase_mismatch = !l2_certified;
  const double sn = std::sqrt(static_cast<double>(n));
  std::vector<CompensatedSum> cm(d), vel(d);
  CompensatedSum sm, xm;
  for (const auto& s : samples) {
    require(static_cast<int>(s.mean.size()) == d, ErrorCode::InvalidArgument, "sample has wrong dimension");
    Vec c(d);
    double shift2 = 0.0;
    for (int a = 0; a < d; ++a) {
      const double off = s.mean[a] - n * drift[a];
      c[a] = off / sn;
      shift2 += off * off;
      cm[a].add(c[a]);
      vel[a].add(s.mean[a] / n);
    }
    const double second = (s.cov.trace() + shift2) / n;
    const double cross =
        d >= 2 ? (s.cov(0, 1) + (s.mean[0] - n * drift[0]) * (s.mean[1] - n * drift[1])) / n : 0.0;
    rep.centered_mean.push_back(std::move(c));
    rep.second_moment.push_back(second);
    rep.cross_moment.push_back(cross);
    sm.add(second);
    xm.add(cross);
  }
  const double k = static_cast<double>(samples.size());
  rep.avg_centered_mean.resize(d);
  rep.avg_velocity.resize(d);
  for (int a = 0; a < d; ++a) {
    rep.avg_centered_mean[a] = cm[a].value() / k;
    rep.avg_velocity[a] = vel[a].value() / k;
  }
  rep.avg_second_moment = sm.value() / k;
  rep.avg_cross_moment = xm.value() / k;
  return rep;
}

CltReport endpoint_clt_check(std::span<const EndpointSummary> samples, const TiltedKernel& q, int n,
                             bool l2_certified) {
  return endpoint_clt_check(samples, q.mean(), q.covariance(), n, l2_certified);
}

}  // namespace polymerlab
