#include <doctest.h>

#include <cmath>
#include <numbers>

#include "polymerlab/error.hpp"
#include "polymerlab/phase.hpp"
#include "support.hpp"

using namespace polymerlab;
using polymerlab::testing::Gen;

namespace {

// Expected number of returns of the 3-d simple random walk, 1/(1 - F) - 1 with
// F = 0.3405373296 the return probability.
constexpr double kSrw3Returns = 0.5163860591519780;

}  // namespace

TEST_CASE("second moment ratio of uniform weights") {
  const double e = std::numbers::e;
  CHECK(second_moment_ratio(WeightModel::uniform01(), 1.0) == doctest::Approx((e + 1) / (2 * (e - 1))).epsilon(1e-13));
  CHECK(second_moment_ratio(WeightModel::uniform01(), 1.0) == doctest::Approx(1.081977).epsilon(1e-6));
  CHECK(second_moment_ratio(WeightModel::gaussian(0.3, 2.0), 0.5) == doctest::Approx(std::exp(4.0 * 0.25)));
  CHECK(second_moment_ratio(WeightModel::point_mass(1.0), 3.0) == doctest::Approx(1.0));
  CHECK(second_moment_ratio(WeightModel::uniform01(), 0.0) == 1.0);
}

TEST_CASE("both routes to the return series agree") {
  const StepKernel p = StepKernel::simple(3);
  const StepKernel dk = difference_walk(p);
  const ReturnSeries a = return_series(dk, lattice_basis(dk), 40);
  const ReturnSeries b = return_series_from_walk(p, 40);
  REQUIRE(a.terms == 40);
  REQUIRE(b.terms == 40);
  for (int k = 0; k < 40; ++k) CHECK(a.returns[k] == doctest::Approx(b.returns[k]).epsilon(1e-12));
  CHECK(a.R == doctest::Approx(b.R).epsilon(1e-12));

  const StepKernel t = StepKernel::table(
      3, {{Site{1, 0, 0}, 0.3},
          {Site{0, 1, 0}, 0.2},
          {Site{0, 0, 1}, 0.1},
          {Site{-1, -1, -1}, 0.25},
          {Site{1, 1, 0}, 0.15}});
  const StepKernel dt = difference_walk(t);
  const ReturnSeries c = return_series(dt, lattice_basis(dt), 20);
  const ReturnSeries e = return_series_from_walk(t, 20);
  for (int k = 0; k < 20; ++k) CHECK(c.returns[k] == doctest::Approx(e.returns[k]).epsilon(1e-12));
}

TEST_CASE("truncated series brackets the known return count") {
  const ReturnSeries s = return_series_from_walk(StepKernel::simple(3), 128);
  CHECK(s.R < kSrw3Returns);
  CHECK(s.R + s.tail_bound > kSrw3Returns);
  CHECK(s.tail_bound < 0.1);
  REQUIRE(s.clt_constant.has_value());
  // n^{3/2} P(T_n = 0) approaches the local CLT constant.
  CHECK(std::pow(128.0, 1.5) * s.returns.back() == doctest::Approx(*s.clt_constant).epsilon(0.02));
  CHECK(s.pi() < s.pi_upper());
  CHECK(intersection_probability(1.0) == 0.5);
}

TEST_CASE("series preconditions") {
  CHECK_THROWS_AS(return_series_from_walk(StepKernel::simple(2), 10), Error);
  try {
    return_series_from_walk(StepKernel::simple(2), 10);
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::DimensionTooLow);
  }
  const StepKernel skew = StepKernel::table(3, {{Site{1, 0, 0}, 0.5}, {Site{0, 1, 0}, 0.3}, {Site{0, 0, 1}, 0.2}});
  try {
    return_series(skew, lattice_basis(skew), 10);
    FAIL("asymmetric kernel accepted");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::NotSymmetric);
  }
  const ReturnSeries tiny = return_series_from_walk(StepKernel::simple(3), 40, std::size_t{2} << 20);
  CHECK(tiny.terms >= kTailCalibrationTerms);
  CHECK(tiny.terms < 40);
  CHECK_THROWS_AS(return_series_from_walk(StepKernel::simple(3), 40, 1 << 12), Error);
}

TEST_CASE("fractional moment properties") {
  Gen gen(32);
  for (int c = 0; c < 20; ++c) {
    const WeightModel m = gen.model();
    const StepKernel q = gen.kernel(gen.integer(1, 3));
    const double beta = gen.uniform(0.1, 4.0);
    CHECK(fractional_moment(m, q, beta, 1.0) == doctest::Approx(1.0).epsilon(1e-12));
    // log r is convex in theta.
    for (double th = 0.1; th < 0.85; th += 0.1) {
      const double a = log_fractional_moment(m, q, beta, th);
      const double b = log_fractional_moment(m, q, beta, th + 0.05);
      const double cc = log_fractional_moment(m, q, beta, th + 0.1);
      CHECK(a + cc - 2 * b >= -1e-12);
    }
  }
  CHECK_THROWS_AS(fractional_moment(WeightModel::uniform01(), StepKernel::simple(1), 1.0, 0.0), Error);
}

TEST_CASE("slope of log r at theta = 1 is the entropy difference") {
  Gen gen(33);
  for (int c = 0; c < 10; ++c) {
    const WeightModel m = gen.model();
    const StepKernel q = gen.table_kernel(gen.integer(1, 2));
    const double beta = gen.uniform(0.2, 3.0);
    const double e = 1e-4;
    const double slope = (3 * log_fractional_moment(m, q, beta, 1.0) - 4 * log_fractional_moment(m, q, beta, 1 - e) +
                          log_fractional_moment(m, q, beta, 1 - 2 * e)) /
                         (2 * e);
    CHECK(slope == doctest::Approx(relative_entropy(m, beta) - shannon_entropy(q)).epsilon(1e-6).scale(1.0));
  }
}

TEST_CASE("strong disorder certificate") {
  const Vec zero{0.0};
  // Bernoulli weights at large beta carry far more entropy than the walk.
  const StrongDisorderResult s = strong_disorder_test(WeightModel::bernoulli(0.1), StepKernel::simple(1), 10.0, zero);
  CHECK(s.certified);
  CHECK(s.entropy_comparison);
  CHECK(s.r_min < 1.0);
  CHECK(s.theta_star < 1.0);
  const StrongDisorderResult w = strong_disorder_test(WeightModel::uniform01(), StepKernel::simple(1), 0.1, zero);
  CHECK_FALSE(w.certified);
  CHECK_FALSE(w.entropy_comparison);
}

TEST_CASE("classification") {
  const Vec h0{0.0, 0.0, 0.0};
  const PhaseReport weak = classify(WeightModel::uniform01(), StepKernel::simple(3), 0.3, h0);
  CHECK(weak.classification == PhaseClass::L2Weak);
  CHECK(weak.pi.has_value());
  CHECK(*weak.l2_margin > 0.0);
  CHECK(weak.K_size == 6);
  CHECK(weak.possibly_in_D);

  const PhaseReport strong = classify(WeightModel::bernoulli(0.1), StepKernel::simple(3), 10.0, h0);
  CHECK(strong.classification == PhaseClass::EntropyLowTemp);
  CHECK_FALSE(strong.conflict);

  const Vec h1{0.0};
  const PhaseReport low_d = classify(WeightModel::uniform01(), StepKernel::simple(1), 0.3, h1);
  CHECK_FALSE(low_d.pi.has_value());
  CHECK(low_d.classification == PhaseClass::Undetermined);

  // A generic field selects a single maximizing step.
  const Vec hg{1.0, 0.3, 0.1};
  const PhaseReport g = classify(WeightModel::uniform01(), StepKernel::simple(3), 0.3, hg);
  CHECK(g.K_size == 1);
  CHECK_FALSE(g.possibly_in_D);
  CHECK(to_string(PhaseClass::L2Weak) != to_string(PhaseClass::Undetermined));
}

TEST_CASE("small theta limit counts the support") {
  const StepKernel q =
      StepKernel::table(2, {{Site{1, 0}, 0.1}, {Site{0, 1}, 0.2}, {Site{-1, 0}, 0.3}, {Site{0, -1}, 0.4}});
  CHECK(log_fractional_moment(WeightModel::uniform01(), q, 1.0, 1e-9) == doctest::Approx(std::log(4.0)).epsilon(1e-6));
}

TEST_CASE("L2 certificate near the origin") {
  const WeightModel m = WeightModel::uniform01();
  const StepKernel p = StepKernel::simple(3);
  L2Options o;
  o.series_terms = 64;
  const Vec h0{0.0, 0.0, 0.0};
  CHECK(l2_criterion(m, p, 0.0, h0, o).certified);
  int certified = 0;
  for (double beta : {0.1, 0.3, 0.5, 1.0, 2.0, 10.0}) certified += l2_criterion(m, p, beta, h0, o).certified;
  CHECK(certified > 0);
  CHECK(certified < 6);
  // Deep inside the region a small field does not change the verdict.
  const Vec h1{0.01, 0.0, 0.0};
  const L2Result a = l2_criterion(m, p, 0.3, h0, o), b = l2_criterion(m, p, 0.3, h1, o);
  CHECK(a.certified == b.certified);
  CHECK(b.margin == doctest::Approx(a.margin).epsilon(0.01));
  const StepKernel shifted = StepKernel::table(3, {{Site{2, 0, 0}, 1.0}});
  CHECK_THROWS_AS(return_series(shifted, lattice_basis(StepKernel::simple(3)), 10), Error);
}
