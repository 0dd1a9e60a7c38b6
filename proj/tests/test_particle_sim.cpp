#include <doctest.h>

#include <cmath>
#include <numbers>

#include "gklab/errors.hpp"
#include "gklab/particle_sim.hpp"

namespace {

double metric_oracle_constants(double a, double b, std::size_t K) {
  // Lebesgue pairings: <1, f_0> = 1, <1, sin(pi m u)> = 2/(pi m) for odd m, 0 else.
  double d = 0.0;
  for (std::size_t k = 0; k < K; ++k) {
    const std::size_t m = k / 2;
    double pairing = 0.0;
    if (k == 0) pairing = 1.0;
    if (k % 2 == 1 && m % 2 == 1) pairing = 2.0 / (std::numbers::pi * double(m));
    d += std::ldexp(1.0, -int(k)) * std::abs(a - b) * pairing;
  }
  return d;
}

}  // namespace

TEST_CASE("configuration bookkeeping") {
  auto c = gk::Configuration::from_string("0110");
  CHECK(c.particle_count() == 2);
  CHECK(c[-1] == false);
  CHECK(c[5] == true);
  c.flip(0);
  CHECK(c.particle_count() == 3);
  CHECK(c.to_string() == "1110");
  CHECK(gk::Configuration::from_index(c.to_index(), 4) == c);
  CHECK(c.window(0, 1) == 0b110u);  // sites -1, 0, 1 hold 0, 1, 1
  const auto f = gk::Configuration::from_string("11000011").block_average(4);
  CHECK(f[0] == 1.0);
  CHECK(f[1] == 0.0);
  CHECK(f[3] == 1.0);
  CHECK_THROWS_AS((void)c.block_average(5), gk::DomainError);
  CHECK_THROWS_AS(gk::Configuration::from_string("012"), gk::DomainError);
  CHECK(c.empirical().mass() == doctest::Approx(0.75));
}

TEST_CASE("fenwick selection follows cumulative weights") {
  gk::FenwickTree t({1.0, 0.0, 2.0, 3.0, 0.5});
  CHECK(t.total() == doctest::Approx(6.5));
  CHECK(t.find(0.0) == 0);
  CHECK(t.find(0.999) == 0);
  CHECK(t.find(1.0) == 2);
  CHECK(t.find(2.999) == 2);
  CHECK(t.find(3.0) == 3);
  CHECK(t.find(6.4) == 4);
  CHECK(t.find(7.0) == 4);
  t.set(1, 4.0);
  CHECK(t.find(1.5) == 1);
  CHECK(t.prefix(3) == doctest::Approx(7.0));
  CHECK(t.total() == doctest::Approx(t.exact_total()));
}

TEST_CASE("profile sampling") {
  gk::Rng rng(3);
  auto all = gk::sample_profile_configuration(gk::DensityField(8, 1.0), 100, rng);
  CHECK(all.particle_count() == 100);
  auto none = gk::sample_profile_configuration(gk::DensityField(8, 0.0), 100, rng);
  CHECK(none.particle_count() == 0);
  // Binomial(10^4, 1/2): P(|mean - 1/2| >= 0.02) < 1e-4.
  for (int rep = 0; rep < 5; ++rep) {
    auto half = gk::sample_profile_configuration(gk::DensityField(8, 0.5), 10000, rng);
    CHECK(std::abs(half.empirical().mass() - 0.5) < 0.02);
  }
  CHECK_THROWS_AS(gk::sample_profile_configuration(gk::DensityField(4, 1.5), 10, rng),
                  gk::DomainError);
}

TEST_CASE("reference step: event rates") {
  const auto m = gk::make_constant();
  SUBCASE("full configuration only flips, mean wait 1/N") {
    gk::Rng rng(11);
    const std::size_t N = 20;
    double wait = 0.0;
    const int reps = 40000;
    for (int i = 0; i < reps; ++i) {
      gk::Configuration eta(N, true);
      auto ev = gk::kmc_step(eta, m, rng);
      CHECK(ev.kind == gk::KmcEvent::Kind::flip);
      wait += ev.wait;
    }
    // Exp(N) mean 1/N, standard error (1/N)/sqrt(reps).
    CHECK(std::abs(wait / reps - 1.0 / N) < 5.0 * (1.0 / N) / std::sqrt(double(reps)));
  }
  SUBCASE("N=3 with one particle") {
    const auto eta = gk::Configuration::from_string("100");
    const auto r = gk::elementary_rates(eta, m);
    double total = 0.0;
    for (double v : r) total += v;
    CHECK(total == doctest::Approx(12.0));
    CHECK(r[0] == doctest::Approx(4.5));
    CHECK(r[1] == 0.0);
    CHECK(r[2] == doctest::Approx(4.5));
    gk::Rng rng(5);
    int exchanges = 0;
    const int reps = 60000;
    for (int i = 0; i < reps; ++i) {
      auto e = eta;
      if (gk::kmc_step(e, m, rng).kind == gk::KmcEvent::Kind::exchange) ++exchanges;
    }
    const double p = 9.0 / 12.0;
    CHECK(std::abs(double(exchanges) / reps - p) < 5.0 * std::sqrt(p * (1 - p) / reps));
  }
  SUBCASE("exclusion only conserves particles") {
    gk::Rng rng(9);
    gk::KmcOptions opt;
    opt.flips = false;
    auto eta = gk::Configuration::from_string("0000100000");
    for (int i = 0; i < 2000; ++i) {
      auto ev = gk::kmc_step(eta, m, rng, opt);
      CHECK(ev.kind == gk::KmcEvent::Kind::exchange);
      CHECK(eta.particle_count() == 1);
    }
  }
}

TEST_CASE("simulator bookkeeping") {
  const auto m = gk::make_double_well(1.0, 4.0);
  gk::Rng rng(1);
  auto eta = gk::sample_profile_configuration(gk::DensityField(4, 0.3), 256, rng);
  SUBCASE("exclusion-only runs conserve the particle count") {
    gk::KmcOptions opt;
    opt.flips = false;
    const auto n0 = eta.particle_count();
    gk::KmcSimulator sim(eta, m, 4, opt);
    for (int i = 0; i < 200000; ++i) sim.step();
    CHECK(sim.configuration().particle_count() == n0);
  }
  SUBCASE("cached total matches recomputation at every audit") {
    gk::KmcSimulator sim(eta, m, 4);
    for (int i = 0; i < 3'000'000; ++i) sim.step();
    CHECK(sim.audits() == 3);
    CHECK(sim.max_audit_error() < 1e-9);
    CHECK(std::abs(sim.total_rate() - sim.recomputed_total_rate()) <
          1e-9 * sim.recomputed_total_rate());
  }
}

TEST_CASE("trajectories are deterministic given the seed") {
  const auto m = gk::make_pair_interaction(2.0);
  gk::Rng rng(2);
  const auto eta = gk::sample_profile_configuration(gk::DensityField(4, 0.5), 128, rng);
  const auto p = gk::SimParams::uniform(128, 0.05, 5, 16, 77);
  const auto a = gk::simulate_trajectory(eta, m, p);
  const auto b = gk::simulate_trajectory(eta, m, p);
  REQUIRE(a.frames.size() == 6);
  for (std::size_t k = 0; k < a.frames.size(); ++k) CHECK(a.frames[k].values == b.frames[k].values);
  auto q = p;
  q.seed = 78;
  const auto c = gk::simulate_trajectory(eta, m, q);
  CHECK(c.frames.back().values != a.frames.back().values);
}

TEST_CASE("zero horizon records the initial block average") {
  const auto m = gk::make_constant();
  const auto eta = gk::Configuration::from_string("1100110011110000");
  const auto p = gk::SimParams::uniform(16, 0.0, 0, 4, 1);
  const auto t = gk::simulate_trajectory(eta, m, p);
  REQUIRE(t.frames.size() == 1);
  CHECK(t.frames[0].values == eta.block_average(4).values);
}

TEST_CASE("constant rate: fixed point and relaxation from empty") {
  const auto m = gk::make_constant();
  const std::size_t N = 512;
  gk::Rng rng(21);
  SUBCASE("half filled stays near 1/2") {
    const auto eta = gk::sample_profile_configuration(gk::DensityField(1, 0.5), N, rng);
    const auto t = gk::simulate_trajectory(eta, m, gk::SimParams::uniform(N, 0.5, 2, 8, 5));
    const double se = 0.5 / std::sqrt(double(N));
    for (const auto& f : t.frames) CHECK(std::abs(f.mean() - 0.5) < 3 * se);
  }
  SUBCASE("empty start approaches (1 - e^-2)/2 at t=1") {
    const auto t = gk::simulate_trajectory(gk::Configuration(N), m,
                                           gk::SimParams::uniform(N, 1.0, 1, 8, 6));
    CHECK(std::abs(t.frames.back().mean() - (1 - std::exp(-2.0)) / 2) < 0.05);
  }
}

TEST_CASE("exact stationary law") {
  SUBCASE("constant rate is uniform") {
    const auto e = gk::exact_stationary_small(gk::make_constant(), 3);
    REQUIRE(e.probabilities.size() == 8);
    for (double p : e.probabilities) CHECK(std::abs(p - 0.125) < 1e-10);
    CHECK(e.residual < 1e-10);
    const auto e8 = gk::exact_stationary_small(gk::make_constant(), 8);
    for (double p : e8.probabilities) CHECK(std::abs(p - 1.0 / 256) < 1e-10);
  }
  SUBCASE("any model sums to one") {
    for (const auto& m : {gk::make_pair_interaction(2.0), gk::make_double_well(1.0, 4.0)}) {
      const auto e = gk::exact_stationary_small(m, 6);
      double s = 0.0;
      for (double p : e.probabilities) s += p;
      CHECK(s == doctest::Approx(1.0).epsilon(1e-12));
      CHECK(e.residual < 1e-10);
    }
  }
  SUBCASE("pair interaction N=4: simulator histogram matches") {
    const auto m = gk::make_pair_interaction(2.0);
    const auto e = gk::exact_stationary_small(m, 4);
    const auto h = gk::occupation_histogram(m, 4, 2'000'000, 13);
    CHECK(gk::total_variation(e.probabilities, h) < 0.02);
  }
  CHECK_THROWS_AS(gk::exact_stationary_small(gk::make_constant(), 13), gk::DomainError);
  CHECK_THROWS_AS(gk::exact_stationary_small(gk::make_neutral(), 4), gk::DomainError);
}

TEST_CASE("metric d") {
  const gk::DensityField half(64, 0.5), quarter(64, 0.25);
  CHECK(gk::measure_distance(half, half) == 0.0);
  const double d16 = gk::measure_distance(half, quarter, 16);
  CHECK(d16 == doctest::Approx(metric_oracle_constants(0.5, 0.25, 16)).epsilon(1e-12));
  CHECK(std::abs(d16 - 0.2703) < 5e-5);
  CHECK(gk::measure_distance(half, quarter, 1) == doctest::Approx(0.25));
  CHECK_THROWS_AS(gk::measure_distance(half, quarter, 0), gk::DomainError);

  gk::Rng rng(8);
  for (int trial = 0; trial < 50; ++trial) {
    auto rnd = [&] {
      gk::DensityField f(32);
      for (auto& v : f.values) v = rng.uniform();
      return f;
    };
    const auto a = rnd(), b = rnd(), c = rnd();
    CHECK(gk::measure_distance(a, b) == doctest::Approx(gk::measure_distance(b, a)).epsilon(1e-14));
    CHECK(gk::measure_distance(a, c) <= gk::measure_distance(a, b) + gk::measure_distance(b, c) + 1e-14);
  }
  // An empirical measure and its block field are close when blocks are small.
  auto eta = gk::sample_profile_configuration(gk::DensityField(1, 0.5), 4096, rng);
  CHECK(gk::measure_distance(eta.empirical(), eta.block_average(4096)) < 2e-3);
  CHECK(gk::measure_distance(eta.empirical(), eta.empirical()) == 0.0);
}
