#include <doctest.h>

#include <cmath>
#include <numbers>

#include "polymerlab/error.hpp"
#include "polymerlab/kernels.hpp"
#include "support.hpp"

using namespace polymerlab;
using polymerlab::testing::Gen;

namespace {

double total_mass(const StepKernel& k) {
  double s = 0.0;
  for (double p : k.probs()) s += p;
  return s;
}

// Direct entropy of the 1-D discrete Gaussian centred at t.
double gaussian_entropy_direct(double t) {
  double z = 0.0, e = 0.0;
  for (int k = -60; k <= 60; ++k) z += std::exp(-0.5 * (k - t) * (k - t));
  for (int k = -60; k <= 60; ++k) {
    const double p = std::exp(-0.5 * (k - t) * (k - t)) / z;
    if (p > 0) e -= p * std::log(p);
  }
  return e;
}

}  // namespace

TEST_CASE("kernels are normalized") {
  Gen gen(1);
  for (int i = 0; i < 60; ++i) {
    const StepKernel k = gen.kernel(gen.integer(1, 3));
    CHECK(total_mass(k) == doctest::Approx(1.0).epsilon(1e-13));
    for (std::size_t j = 0; j < k.size(); ++j) CHECK(k.log_probs()[j] == doctest::Approx(std::log(k.probs()[j])));
  }
  const StepKernel dg = StepKernel::discrete_gaussian(2, {0.3, -0.2});
  CHECK(dg.tail_mass() <= kGaussianTailTolerance);
  CHECK(dg.kind() == KernelKind::DiscreteGaussian);
  CHECK_FALSE(dg.finite_range());
}

TEST_CASE("simple walk layout") {
  const StepKernel k = StepKernel::simple(3);
  CHECK(k.size() == 6);
  for (double p : k.probs()) CHECK(p == doctest::Approx(1.0 / 6.0));
  CHECK(k.prob(Site{0, 1, 0}) == doctest::Approx(1.0 / 6.0));
  CHECK(k.prob(Site{1, 1, 0}) == 0.0);
  CHECK(k.min_step() == Site{-1, -1, -1});
  CHECK(k.max_step() == Site{1, 1, 1});
  CHECK(k.covariance().isApprox(Eigen::MatrixXd::Identity(3, 3) / 3.0));
  CHECK_THROWS_AS(StepKernel::simple(0), Error);
}

TEST_CASE("table validation") {
  using Steps = std::vector<std::pair<Site, double>>;
  CHECK_THROWS_AS(StepKernel::table(1, Steps{{{1}, 0.5}, {{1}, 0.5}}), Error);
  CHECK_THROWS_AS(StepKernel::table(1, Steps{{{1}, 0.7}, {{-1}, 0.7}}), Error);
  CHECK_THROWS_AS(StepKernel::table(1, Steps{{{1}, 1.5}, {{-1}, -0.5}}), Error);
  CHECK_THROWS_AS(StepKernel::table(2, Steps{{{1}, 1.0}}), Error);
  CHECK_THROWS_AS(StepKernel::table(1, Steps{}), Error);
}

TEST_CASE("zero tilt returns p exactly") {
  Gen gen(2);
  for (int i = 0; i < 30; ++i) {
    const int d = gen.integer(1, 3);
    const StepKernel p = gen.kernel(d);
    const TiltedKernel q = tilt(p, gen.uniform(0.1, 4.0), Vec(static_cast<std::size_t>(d), 0.0));
    REQUIRE(q.kernel().size() == p.size());
    for (std::size_t j = 0; j < p.size(); ++j) {
      CHECK(q.kernel().steps()[j] == p.steps()[j]);
      CHECK(q.kernel().probs()[j] == p.probs()[j]);
    }
    CHECK(q.log_mgf() == 0.0);
  }
}

TEST_CASE("tilted simple walk in one dimension") {
  const TiltedKernel q = tilt(StepKernel::simple(1), 1.0, Vec{1.0});
  CHECK(q.kernel().prob(Site{1}) == doctest::Approx(0.8807970779778823).epsilon(1e-15));
  CHECK(q.log_mgf() == doctest::Approx(std::log(std::cosh(1.0))).epsilon(1e-15));
  CHECK(q.mean()[0] == doctest::Approx(std::tanh(1.0)).epsilon(1e-14));
  CHECK(q.covariance()(0, 0) == doctest::Approx(1.0 - std::tanh(1.0) * std::tanh(1.0)).epsilon(1e-13));
}

TEST_CASE("tilts compose additively") {
  Gen gen(3);
  for (int i = 0; i < 40; ++i) {
    const int d = gen.integer(1, 3);
    const StepKernel p = gen.kernel(d);
    const double beta = gen.uniform(0.2, 2.0);
    const Vec h1 = gen.vec(d, 1.0), h2 = gen.vec(d, 1.0);
    Vec h12(h1);
    for (int a = 0; a < d; ++a) h12[a] += h2[a];
    const TiltedKernel q1 = tilt(p, beta, h1);
    const TiltedKernel q12 = tilt(q1.kernel(), beta, h2);
    const TiltedKernel direct = tilt(p, beta, h12);
    CHECK(q1.log_mgf() + q12.log_mgf() == doctest::Approx(direct.log_mgf()).epsilon(1e-12));
    for (std::size_t j = 0; j < direct.kernel().size(); ++j) {
      const Site& x = direct.kernel().steps()[j];
      CHECK(q12.kernel().prob(x) == doctest::Approx(direct.kernel().prob(x)).epsilon(1e-10));
    }
    CHECK(total_mass(direct.kernel()) == doctest::Approx(1.0).epsilon(1e-13));
  }
}

TEST_CASE("drift and covariance are derivatives of the log-mgf") {
  Gen gen(4);
  for (int i = 0; i < 30; ++i) {
    const int d = gen.integer(1, 3);
    const StepKernel p = gen.kernel(d);
    const Vec t = gen.vec(d, 1.0);
    const TiltedKernel q = tilt(p, 1.0, t);
    const double e = 1e-4;
    for (int a = 0; a < d; ++a) {
      Vec up(t), dn(t);
      up[a] += e;
      dn[a] -= e;
      CHECK(q.mean()[a] == doctest::Approx((p.log_mgf(up) - p.log_mgf(dn)) / (2 * e)).epsilon(1e-7));
      const double second = (p.log_mgf(up) - 2 * p.log_mgf(t) + p.log_mgf(dn)) / (e * e);
      CHECK(q.covariance()(a, a) == doctest::Approx(second).epsilon(1e-5));
    }
  }
}

TEST_CASE("discrete Gaussian log-mgf agrees with its support sum") {
  Gen gen(5);
  for (int i = 0; i < 20; ++i) {
    const int d = gen.integer(1, 2);
    const StepKernel p = StepKernel::discrete_gaussian(d, gen.vec(d, 0.5));
    const Vec t = gen.vec(d, 1.5);
    // The analytic form covers the whole lattice; the support sum misses the
    // truncated tails, whose mass the tilt inflates by up to e^{|t| r}.
    double m = -1e300;
    for (std::size_t j = 0; j < p.size(); ++j) m = std::max(m, p.log_probs()[j] + dot(p.steps()[j], t));
    double s = 0.0;
    for (std::size_t j = 0; j < p.size(); ++j) s += std::exp(p.log_probs()[j] + dot(p.steps()[j], t) - m);
    CHECK(p.log_mgf(t) == doctest::Approx(m + std::log(s)).epsilon(1e-8));
  }
}

TEST_CASE("discrete Gaussian entropy") {
  CHECK(gaussian_entropy_exact(0.0, 1) == doctest::Approx(gaussian_entropy_direct(0.0)).epsilon(1e-12));
  CHECK(gaussian_entropy_exact(0.0, 1) == doctest::Approx(1.41894).epsilon(1e-5));
  Gen gen(6);
  for (int i = 0; i < 20; ++i) {
    const double t = gen.uniform(-2.0, 2.0);
    CHECK(gaussian_entropy_exact(t, 1) == doctest::Approx(gaussian_entropy_direct(t)).epsilon(1e-12));
    CHECK(gaussian_entropy_exact(t, 3) == doctest::Approx(3 * gaussian_entropy_direct(t)).epsilon(1e-12));
    CHECK(gaussian_entropy_exact(t + 1.0, 1) == doctest::Approx(gaussian_entropy_exact(t, 1)).epsilon(1e-13));
    CHECK(shannon_entropy(StepKernel::discrete_gaussian(1, {t})) ==
          doctest::Approx(gaussian_entropy_direct(t)).epsilon(1e-10));
  }
}

TEST_CASE("argmax set and conditional entropy") {
  const StepKernel p = StepKernel::simple(3);
  CHECK(argmax_set(p, Vec{1.0, 1.0, 0.0}).sites.size() == 2);
  CHECK(argmax_set(p, Vec{1.0, -1.0, 0.0}).sites.size() == 2);
  CHECK(argmax_set(p, Vec{1.0, 0.5, 0.0}).singleton());
  CHECK(argmax_set(p, Vec{1.0, 0.5, 0.0}).sites[0] == Site{1, 0, 0});
  CHECK(argmax_set(p, Vec{0.0, 0.0, 0.0}).sites.size() == 6);
  CHECK(conditional_entropy(p, argmax_set(p, Vec{0.0, 0.0, 0.0}).sites) == doctest::Approx(std::log(6.0)));
  CHECK(conditional_entropy(p, argmax_set(p, Vec{1.0, 1.0, 0.0}).sites) == doctest::Approx(std::log(2.0)));
  CHECK_THROWS_AS(conditional_entropy(p, std::vector<Site>{}), Error);
  CHECK_THROWS_AS(conditional_entropy(p, std::vector<Site>{Site{2, 0, 0}}), Error);
}

TEST_CASE("entropy of strongly tilted kernels tends to the conditional entropy") {
  const StepKernel p = StepKernel::simple(2);
  const std::vector<double> lambdas{0.0, 1.0, 4.0, 16.0, 64.0};
  const EntropyLimit diag = entropy_limit_check(p, Vec{1.0, 1.0}, lambdas);
  REQUIRE(diag.conditional_limit);
  CHECK(diag.entropies.front() == doctest::Approx(std::log(4.0)));
  CHECK(diag.entropies.back() == doctest::Approx(*diag.conditional_limit).epsilon(1e-12));
  CHECK(*diag.conditional_limit == doctest::Approx(std::log(2.0)));
  for (std::size_t i = 1; i < lambdas.size(); ++i) CHECK(diag.entropies[i] <= diag.entropies[i - 1] + 1e-15);
  const EntropyLimit off = entropy_limit_check(p, Vec{1.0, 0.3}, lambdas);
  CHECK(off.entropies.back() < 1e-20 + 1e-12);
  const std::vector<double> moderate{0.0, 1.0, 4.0};
  CHECK_FALSE(entropy_limit_check(StepKernel::discrete_gaussian(1), Vec{1.0}, moderate).conditional_limit);
  CHECK_THROWS_AS(entropy_limit_check(StepKernel::discrete_gaussian(1), Vec{1.0}, lambdas), Error);
}

TEST_CASE("difference walk is the exact law of X - X'") {
  Gen gen(7);
  for (int i = 0; i < 20; ++i) {
    const int d = gen.integer(1, 3);
    const StepKernel q = gen.table_kernel(d);
    const StepKernel dk = difference_walk(q);
    CHECK(total_mass(dk) == doctest::Approx(1.0).epsilon(1e-13));
    for (std::size_t a = 0; a < q.size(); ++a)
      for (std::size_t b = 0; b < q.size(); ++b) {
        Site z = q.steps()[a];
        for (int c = 0; c < d; ++c) z[c] -= q.steps()[b][c];
        double expect = 0.0;
        for (std::size_t u = 0; u < q.size(); ++u)
          for (std::size_t v = 0; v < q.size(); ++v) {
            bool match = true;
            for (int c = 0; c < d; ++c) match = match && q.steps()[u][c] - q.steps()[v][c] == z[c];
            if (match) expect += q.probs()[u] * q.probs()[v];
          }
        CHECK(dk.prob(z) == doctest::Approx(expect).epsilon(1e-13));
        Site neg = z;
        for (int& c : neg) c = -c;
        CHECK(dk.prob(neg) == dk.prob(z));
      }
  }
  const StepKernel d1 = difference_walk(StepKernel::simple(1));
  CHECK(d1.prob(Site{0}) == doctest::Approx(0.5));
  CHECK(d1.prob(Site{2}) == doctest::Approx(0.25));
}

TEST_CASE("lattice basis") {
  const LatticeBasis z3 = lattice_basis(StepKernel::simple(3));
  CHECK(z3.abs_det == 1);
  const LatticeBasis even = lattice_basis(difference_walk(StepKernel::simple(3)));
  CHECK(even.abs_det == 2);
  CHECK(even.contains(Site{1, 1, 0}));
  CHECK(even.contains(Site{2, 0, 0}));
  CHECK_FALSE(even.contains(Site{1, 0, 0}));
  const LatticeBasis two = lattice_basis(difference_walk(StepKernel::simple(1)));
  CHECK(two.abs_det == 2);
  CHECK_FALSE(two.contains(Site{3}));
  using Steps = std::vector<std::pair<Site, double>>;
  const StepKernel skew = StepKernel::table(2, Steps{{{3, 1}, 0.5}, {{1, 2}, 0.5}});
  CHECK(lattice_basis(skew).abs_det == 5);
  CHECK(lattice_basis(skew).contains(Site{4, 3}));
  CHECK_FALSE(lattice_basis(skew).contains(Site{1, 0}));
  CHECK_THROWS_AS(lattice_basis(StepKernel::table(2, Steps{{{1, 0}, 0.5}, {{-1, 0}, 0.5}})), Error);
}

TEST_CASE("local CLT density sums to one over the lattice") {
  const StepKernel dk = difference_walk(StepKernel::simple(1));
  const LatticeBasis basis = lattice_basis(dk);
  const Vec zero{0.0};
  double s = 0.0;
  for (int x = -400; x <= 400; x += 2) s += local_clt_density(basis, dk.covariance(), zero, 100, Site{x});
  CHECK(s == doctest::Approx(1.0).epsilon(1e-10));
  Eigen::MatrixXd singular = Eigen::MatrixXd::Zero(1, 1);
  CHECK_THROWS_AS(local_clt_density(basis, singular, zero, 10, Site{0}), Error);
}
