#include <doctest.h>

#include <cmath>
#include <limits>

#include "polymerlab/engine.hpp"
#include "polymerlab/error.hpp"
#include "support.hpp"

using namespace polymerlab;
using polymerlab::testing::brute_path_sum;
using polymerlab::testing::Gen;
using polymerlab::testing::walk_law;

TEST_CASE("transfer recursion equals the exhaustive path sum") {
  Gen gen(21);
  for (int c = 0; c < 25; ++c) {
    const int d = gen.integer(1, 2);
    const StepKernel q = gen.coin() ? StepKernel::simple(d) : gen.table_kernel(d, 4, 1);
    const int n = gen.integer(1, d == 1 ? 7 : 5);
    const double beta = gen.uniform(0.1, 3.0);
    const Environment env(gen.next(), 0, gen.model());
    PolymerField field(q, beta, env);
    field.advance_to(n);
    const auto brute = brute_path_sum(q, beta, env, n);
    CHECK(field.log_partition() == doctest::Approx(std::log(static_cast<double>(brute.total))).epsilon(1e-12));
    for (const auto& [x, z] : brute.z) CHECK(field.log_z(x) == doctest::Approx(std::log(static_cast<double>(z))));
    int nonzero = 0;
    field.for_each_site([&](const Site&, double) { ++nonzero; });
    CHECK(nonzero == static_cast<int>(brute.z.size()));
  }
}

TEST_CASE("free walk gives the exact walk law") {
  const StepKernel q = StepKernel::simple(1);
  PolymerField field(q);
  field.advance_to(30);
  for (int x = -30; x <= 30; x += 2) {
    const double expect = std::lgamma(31.0) - std::lgamma((30 + x) / 2 + 1.0) - std::lgamma((30 - x) / 2 + 1.0) -
                          30 * std::log(2.0);
    CHECK(field.log_z(Site{x}) == doctest::Approx(expect).epsilon(1e-12));
    CHECK(field.log_z(Site{x + 1}) == -std::numeric_limits<double>::infinity());
  }
  CHECK(field.log_z(Site{40}) == -std::numeric_limits<double>::infinity());
  CHECK(std::abs(field.log_partition()) < 1e-13);

  Gen gen(22);
  const StepKernel t = gen.table_kernel(2, 5, 2);
  PolymerField f2(t);
  f2.advance_to(6);
  for (const auto& [x, p] : walk_law(t, 6)) CHECK(std::exp(f2.log_z(x)) == doctest::Approx(p).epsilon(1e-12));
}

TEST_CASE("Gibbs measure is normalized") {
  Gen gen(23);
  for (int c = 0; c < 10; ++c) {
    const int d = gen.integer(1, 3);
    PolymerField field(gen.kernel(d), gen.uniform(0.1, 5.0), Environment(gen.next(), 1, gen.model()));
    field.advance_to(gen.integer(1, 12));
    const EndpointMeasure m = endpoint_measure(field);
    double s = 0.0;
    for (double v : m.mu) s += v;
    CHECK(s == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(m.summary.max_prob == doctest::Approx(m.prob(m.summary.argmax)).epsilon(1e-15));
  }
}

TEST_CASE("endpoint summary of the free walk") {
  PolymerField f1(StepKernel::simple(3));
  f1.advance_to(40);
  const EndpointSummary s = endpoint_summary(f1);
  CHECK(s.cov.trace() == doctest::Approx(40.0).epsilon(1e-12));
  CHECK(s.mean_norm2 == doctest::Approx(40.0).epsilon(1e-12));
  for (double m : s.mean) CHECK(std::abs(m) < 1e-12);
  // Ties are broken towards the lexicographically smallest site.
  PolymerField f2(StepKernel::simple(2));
  f2.step();
  CHECK(endpoint_summary(f2).argmax == Site{-1, 0});
  CHECK_THROWS_AS(endpoint_measure(PolymerField(StepKernel::simple(1))), Error);
}

TEST_CASE("degenerate weights give W = 1") {
  PolymerField field(StepKernel::simple(2), 1.7, Environment(1, 0, WeightModel::point_mass(0.4)));
  field.advance_to(25);
  CHECK(normalized_martingale(field) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("single precision tracks double precision") {
  const Environment env(5, 2, WeightModel::gaussian(0.0, 1.0));
  PolymerField fd(StepKernel::simple(2), 1.0, env);
  PolymerFieldF ff(StepKernel::simple(2), 1.0, env);
  fd.advance_to(60);
  ff.advance_to(60);
  CHECK(ff.log_partition() == doctest::Approx(fd.log_partition()).epsilon(1e-5));
  // Far tails underflow sooner in single precision, so the sets of weights read
  // only agree while no mass has been flushed.
  PolymerField gd(StepKernel::simple(2), 1.0, env);
  PolymerFieldF gf(StepKernel::simple(2), 1.0, env);
  gd.advance_to(8);
  gf.advance_to(8);
  CHECK(gf.weight_checksum() == gd.weight_checksum());
}

TEST_CASE("weight checksum identifies the environment") {
  auto run = [](std::uint64_t seed) {
    PolymerField f(StepKernel::simple(2), 1.0, Environment(seed, 0, WeightModel::uniform01()));
    f.advance_to(20);
    return f.weight_checksum();
  };
  CHECK(run(1) == run(1));
  CHECK(run(1) != run(2));
}

TEST_CASE("memory budget is enforced") {
  EngineOptions small;
  small.memory_budget = 1 << 20;
  CHECK_THROWS_AS(PolymerField(StepKernel::simple(3), 1.0, Environment(1, 0, WeightModel::uniform01()), small)
                      .advance_to(64),
                  Error);
  try {
    PolymerField f(StepKernel::simple(3), 1.0, Environment(1, 0, WeightModel::uniform01()), small);
    f.advance_to(64);
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::WindowOverflow);
    CHECK(e.category() == ErrorCategory::Resource);
  }
  CHECK(PolymerField::bytes_required(StepKernel::simple(1), 10) == 2 * 21 * sizeof(double));
}

TEST_CASE("next-step localization matches a direct fold") {
  Gen gen(24);
  for (int c = 0; c < 8; ++c) {
    const int d = gen.integer(1, 2);
    const StepKernel q = gen.table_kernel(d, 4, 1);
    PolymerField field(q, gen.uniform(0.5, 3.0), Environment(gen.next(), 0, gen.model()));
    field.advance_to(gen.integer(1, 6));
    const EndpointMeasure m = endpoint_measure(field);
    std::map<Site, double> next;
    for (std::size_t k = 0; k < m.mu.size(); ++k) {
      if (m.mu[k] == 0.0) continue;
      const Site x = m.window.site(k);
      for (std::size_t i = 0; i < q.size(); ++i) {
        Site y = x;
        for (int a = 0; a < d; ++a) y[a] += q.steps()[i][a];
        next[y] += m.mu[k] * q.probs()[i];
      }
    }
    double best = 0.0;
    for (const auto& [y, v] : next) best = std::max(best, v);
    CHECK(next_localization(field) == doctest::Approx(best).epsilon(1e-12));
  }
  CHECK(localization_average(std::vector<double>{0.5, 0.25}) == doctest::Approx(0.375));
  CHECK_THROWS_AS(localization_average(std::vector<double>{}), Error);
}

TEST_CASE("CLT report of the free walk is exact") {
  PolymerField field(StepKernel::simple(3));
  field.advance_to(50);
  const std::vector<EndpointSummary> s{endpoint_summary(field)};
  const TiltedKernel q = tilt(StepKernel::simple(3), 1.0, Vec{0.0, 0.0, 0.0});
  const CltReport r = endpoint_clt_check(s, q, 50, true);
  CHECK(r.avg_second_moment == doctest::Approx(q.covariance().trace()).epsilon(1e-12));
  CHECK(std::abs(r.avg_cross_moment) < 1e-12);
  CHECK_FALSE(r.phase_mismatch);
}
