#include <doctest.h>

#include <cmath>
#include <numbers>

#include "gklab/errors.hpp"
#include "gklab/linalg.hpp"
#include "gklab/pde.hpp"
#include "gklab/random.hpp"
#include "gklab/spectral.hpp"

namespace {

constexpr double kPi = std::numbers::pi;

gk::PdeParams params(std::size_t J, double dt, std::size_t frames = 0) {
  gk::PdeParams p;
  p.J = J;
  p.dt = dt;
  p.frames = frames;
  return p;
}

gk::DensityField sine_profile(std::size_t J, double amp = 0.5) {
  return gk::DensityField::from_function(J, [&](double u) { return 0.5 + amp * std::sin(2 * kPi * u); });
}

gk::DensityField random_profile(std::size_t J, gk::Rng& rng) {
  // A few random Fourier modes mapped into [0.05, 0.95].
  double a[4], b[4];
  for (int k = 0; k < 4; ++k) {
    a[k] = rng.uniform() - 0.5;
    b[k] = rng.uniform() - 0.5;
  }
  return gk::DensityField::from_function(J, [&](double u) {
    double s = 0.0;
    for (int k = 0; k < 4; ++k) s += (a[k] * std::cos(2 * kPi * (k + 1) * u) + b[k] * std::sin(2 * kPi * (k + 1) * u)) / (k + 1);
    return 0.5 + 0.45 * std::tanh(s);
  });
}

}  // namespace

TEST_CASE("cyclic tridiagonal solvers") {
  const std::size_t n = 9;
  std::vector<double> lo(n), di(n), up(n), rhs(n);
  gk::Rng rng(1);
  for (std::size_t i = 0; i < n; ++i) {
    lo[i] = rng.uniform() - 0.5;
    up[i] = rng.uniform() - 0.5;
    di[i] = 3.0 + rng.uniform();
    rhs[i] = rng.uniform();
  }
  const auto x = gk::solve_cyclic_tridiagonal(lo, di, up, rhs);
  for (std::size_t i = 0; i < n; ++i) {
    const double ax = lo[i] * x[(i + n - 1) % n] + di[i] * x[i] + up[i] * x[(i + 1) % n];
    CHECK(ax == doctest::Approx(rhs[i]).epsilon(1e-13));
  }
  gk::ImplicitDiffusion D(n, 2.5);
  auto y = rhs;
  D.solve(y);
  double s0 = 0.0, s1 = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double ay = y[i] - 2.5 * (y[(i + n - 1) % n] - 2 * y[i] + y[(i + 1) % n]);
    CHECK(ay == doctest::Approx(rhs[i]).epsilon(1e-13));
    s0 += rhs[i];
    s1 += y[i];
  }
  CHECK(std::abs(s0 - s1) < 1e-13);
}

TEST_CASE("spectral laplacian eigenvalues") {
  gk::PeriodicSpectral S(16);
  std::vector<double> x(16), mult(S.modes());
  for (std::size_t j = 0; j < 16; ++j) x[j] = std::cos(2 * kPi * 3 * j / 16.0);
  for (std::size_t k = 0; k < S.modes(); ++k) mult[k] = S.laplacian_eigenvalue(k);
  auto y = x;
  S.apply_multiplier(y, mult);
  for (std::size_t j = 0; j < 16; ++j) {
    const double lap = 256.0 * (x[(j + 15) % 16] - 2 * x[j] + x[(j + 1) % 16]);
    CHECK(y[j] == doctest::Approx(lap).epsilon(1e-10));
  }
}

TEST_CASE("cauchy problem examples") {
  SUBCASE("roots of F are fixed points") {
    for (auto [m, r] : {std::pair{gk::make_constant(), 0.5}, std::pair{gk::make_double_well(1, 4), 0.25}}) {
      const auto t = gk::solve_cauchy(gk::DensityField(32, r), m, 0.5, params(32, 1e-3));
      for (const auto& f : t.frames)
        for (double v : f.values) CHECK(std::abs(v - r) < 1e-14);
    }
  }
  SUBCASE("constant rate from empty") {
    const auto t = gk::solve_cauchy(gk::DensityField(64, 0.0), gk::make_constant(), 1.0,
                                    params(64, 1e-3, 10));
    REQUIRE(t.frames.size() == 11);
    CHECK(t.times.back() == 1.0);
    const double exact = (1 - std::exp(-2.0)) / 2;
    for (double v : t.final_frame().values) CHECK(std::abs(v - exact) < 1e-6);
  }
  SUBCASE("neutral model: single heat mode") {
    const auto t = gk::solve_cauchy(sine_profile(256), gk::make_neutral(), 0.05, params(256, 1e-5, 1));
    const auto exact = gk::DensityField::from_function(
        256, [](double u) { return 0.5 + 0.5 * std::exp(-2 * kPi * kPi * 0.05) * std::sin(2 * kPi * u); });
    CHECK(gk::sup_distance(t.final_frame(), exact) < 1e-4);
  }
}

TEST_CASE("controlled equation") {
  const auto m = gk::make_constant();
  SUBCASE("zero control reproduces the uncontrolled solver bit for bit") {
    gk::Rng rng(3);
    const auto g = random_profile(64, rng);
    const auto a = gk::solve_cauchy(g, gk::make_double_well(1, 4), 0.3, params(64, 1e-4, 6));
    const gk::ControlField zero = [](double, std::span<double> h) { std::fill(h.begin(), h.end(), 0.0); };
    const auto b = gk::solve_controlled(g, gk::make_double_well(1, 4), zero, 0.3, params(64, 1e-4, 6));
    REQUIRE(a.frames.size() == b.frames.size());
    for (std::size_t k = 0; k < a.frames.size(); ++k) CHECK(a.frames[k].values == b.frames[k].values);
  }
  SUBCASE("spatially constant control gives the scalar ODE") {
    const double h = 0.7;
    const gk::ControlField H = [&](double, std::span<double> out) { std::fill(out.begin(), out.end(), h); };
    const auto t = gk::solve_controlled(gk::DensityField(32, 0.5), m, H, 1.0, params(32, 1e-3, 4));
    const double k = 2 * std::cosh(h), rinf = std::exp(h) / k;
    for (std::size_t n = 0; n < t.frames.size(); ++n) {
      const double exact = rinf + (0.5 - rinf) * std::exp(-k * t.times[n]);
      for (double v : t.frames[n].values) CHECK(std::abs(v - exact) < 1e-8);
    }
  }
  SUBCASE("values stay in [0,1] under the step bound") {
    const gk::ControlField H = [](double t, std::span<double> out) {
      const std::size_t J = out.size();
      for (std::size_t j = 0; j < J; ++j)
        out[j] = 0.9 * std::cos(3 * t) * std::sin(2 * kPi * (j + 0.5) / J);
    };
    for (const auto& g : {gk::DensityField(64, 0.02), gk::DensityField::from_function(64, [](double u) { return u < 0.5 ? 1.0 : 0.0; })}) {
      const auto t = gk::solve_controlled(g, gk::make_double_well(1, 4), H, 0.5, params(64, 2e-5, 50));
      for (const auto& f : t.frames)
        for (double v : f.values) {
          CHECK(v >= -1e-10);
          CHECK(v <= 1 + 1e-10);
        }
    }
  }
  SUBCASE("step bound violations are reported with the step") {
    const gk::ControlField H = [](double, std::span<double> out) {
      for (std::size_t j = 0; j < out.size(); ++j) out[j] = (j % 2) ? 1.0 : -1.0;
    };
    try {
      (void)gk::solve_controlled(gk::DensityField(64, 0.5), m, H, 0.1, params(64, 1e-3));
      FAIL("expected a step-bound error");
    } catch (const gk::NumericalError& e) {
      CHECK(std::string(e.what()).find("dt=0.001") != std::string::npos);
    }
  }
}

TEST_CASE("mild solution") {
  SUBCASE("zero reaction is the heat semigroup") {
    const auto g = sine_profile(64, 0.3);
    const auto t = gk::solve_mild_picard(g, gk::make_neutral(), 0.1, params(64, 1e-3, 5));
    gk::PeriodicSpectral S(64);
    for (std::size_t n = 0; n < t.frames.size(); ++n) {
      std::vector<double> mult(S.modes()), x = g.values;
      for (std::size_t k = 0; k < S.modes(); ++k) mult[k] = std::exp(0.5 * S.laplacian_eigenvalue(k) * t.times[n]);
      S.apply_multiplier(x, mult);
      CHECK(gk::sup_distance(t.frames[n], gk::DensityField(x)) < 1e-13);
    }
  }
  SUBCASE("constant rate from empty agrees with the finite-difference scheme") {
    const auto p = params(32, 1e-3, 10);
    const auto a = gk::solve_mild_picard(gk::DensityField(32, 0.0), gk::make_constant(), 1.0, p);
    const auto b = gk::solve_cauchy(gk::DensityField(32, 0.0), gk::make_constant(), 1.0, p);
    CHECK(gk::trajectory_sup(a, b) < 1e-5);
  }
  SUBCASE("constant data follows the scalar ODE") {
    const auto m = gk::make_double_well(1, 4);
    const auto t = gk::solve_mild_picard(gk::DensityField(16, 0.4), m, 1.0, params(16, 1e-3, 10));
    const auto ode = gk::solve_homogeneous_ode(0.4, m, 1.0, 10000);
    for (std::size_t n = 0; n < t.frames.size(); ++n)
      for (double v : t.frames[n].values) CHECK(std::abs(v - ode[n * 1000]) < 1e-6);
  }
}

TEST_CASE("homogeneous ODE") {
  const auto m = gk::make_constant();
  const auto lam0 = gk::solve_homogeneous_ode(0.0, m, 2.0, 2000);
  for (std::size_t n = 0; n < lam0.size(); ++n) {
    const double t = 2.0 * n / 2000.0;
    CHECK(std::abs(lam0[n] - (1 - std::exp(-2 * t)) / 2) < 1e-8);
  }
  const auto lam1 = gk::solve_homogeneous_ode(1.0, m, 2.0, 2000);
  for (double j : {0.1, 0.5, 0.9}) {
    const auto l = gk::solve_homogeneous_ode(j, m, 2.0, 2000);
    for (std::size_t n = 0; n < l.size(); ++n) {
      CHECK(lam0[n] <= l[n]);
      CHECK(l[n] <= lam1[n]);
    }
  }
  for (double v : gk::solve_homogeneous_ode(0.75, gk::make_double_well(1, 4), 1.0, 100)) CHECK(v == 0.75);
  CHECK_THROWS_AS(gk::solve_homogeneous_ode(1.5, m, 1.0), gk::DomainError);
}

TEST_CASE("solver properties") {
  gk::Rng rng(17);
  const std::vector<gk::RateModel> models{gk::make_constant(), gk::make_pair_interaction(2.0),
                                          gk::make_double_well(1, 4), gk::make_neutral()};
  SUBCASE("maximum principle and monotonicity") {
    for (const auto& m : models) {
      auto g1 = random_profile(64, rng);
      auto g2 = g1;
      for (auto& v : g2.values) v = std::min(1.0, v + 0.1 * rng.uniform());
      const auto t1 = gk::solve_cauchy(g1, m, 0.5, params(64, 1e-4, 10));
      const auto t2 = gk::solve_cauchy(g2, m, 0.5, params(64, 1e-4, 10));
      for (std::size_t n = 0; n < t1.frames.size(); ++n)
        for (std::size_t j = 0; j < 64; ++j) {
          CHECK(t1.frames[n][j] >= -1e-10);
          CHECK(t2.frames[n][j] <= 1 + 1e-10);
          CHECK(t1.frames[n][j] <= t2.frames[n][j] + 1e-9);
        }
    }
  }
  SUBCASE("mass conservation without reaction") {
    const auto g = random_profile(128, rng);
    const auto t = gk::solve_cauchy(g, gk::make_neutral(), 0.01, params(128, 1e-4));
    for (std::size_t n = 1; n < t.frames.size(); ++n)
      CHECK(std::abs(t.frames[n].mean() - t.frames[n - 1].mean()) < 1e-12);
  }
  SUBCASE("refinement: successive changes shrink") {
    const auto m = gk::make_double_well(1, 4);
    auto g_of = [](std::size_t J) {
      return gk::DensityField::from_function(J, [](double u) { return 0.5 + 0.3 * std::sin(2 * kPi * u); });
    };
    std::vector<gk::DensityField> finals;
    for (int level = 0; level < 4; ++level) {
      const std::size_t J = 32u << level;
      const double dt = 4e-3 / (1 << level);
      finals.push_back(gk::solve_cauchy(g_of(J), m, 0.2, params(J, dt, 1)).final_frame());
    }
    auto restrict_to = [](const gk::DensityField& f, std::size_t J) {
      // Point values at the coarse centers by averaging the two nearest fine cells.
      gk::DensityField c(J);
      const std::size_t r = f.size() / J;
      for (std::size_t j = 0; j < J; ++j)
        c[j] = r == 1 ? f[j] : 0.5 * (f[j * r + r / 2 - 1] + f[j * r + r / 2]);
      return c;
    };
    std::vector<double> change;
    for (int level = 1; level < 4; ++level)
      change.push_back(gk::sup_distance(restrict_to(finals[level], 32), restrict_to(finals[level - 1], 32)));
    for (std::size_t i = 1; i < change.size(); ++i) {
      CAPTURE(change[i - 1]);
      CAPTURE(change[i]);
      CHECK(change[i] < change[i - 1]);
      CHECK(change[i - 1] < 4.0 * change[i]);  // no faster than second order
    }
  }
  SUBCASE("finite-difference and mild schemes agree on every preset") {
    for (const auto& m : models) {
      const auto g = random_profile(128, rng);
      const auto p = params(128, 1e-5, 10);
      const auto a = gk::solve_cauchy(g, m, 0.2, p);
      const auto b = gk::solve_mild_picard(g, m, 0.2, p);
      CAPTURE(m.name());
      CHECK(gk::trajectory_sup(a, b) < 1e-4);
    }
  }
}

TEST_CASE("stationary set") {
  gk::Rng rng(5);
  auto p = params(32, 2e-3);
  SUBCASE("constant rate: only 1/2") {
    std::vector<gk::DensityField> seeds;
    for (int i = 0; i < 8; ++i) seeds.push_back(random_profile(32, rng));
    const auto E = gk::stationary_set_search(gk::make_constant(), p, seeds);
    CHECK(E.failures.empty());
    REQUIRE(E.profiles.size() == 1);
    for (double v : E.profiles[0].values) CHECK(std::abs(v - 0.5) < 1e-10);
    CHECK(E.residuals[0] < p.tol);
    CHECK(gk::distance_to_stationary_set(E.profiles[0], E) == 0.0);
    CHECK(gk::distance_to_stationary_set(gk::DensityField(32, 0.25), E, 1) == doctest::Approx(0.25));
    CHECK(gk::distance_to_stationary_set(gk::DensityField(32, 0.25), E, 16) == doctest::Approx(0.2703).epsilon(2e-4));
  }
  SUBCASE("double well: the three constants are included") {
    std::vector<gk::DensityField> seeds;
    for (int i = 0; i < 4; ++i) seeds.push_back(random_profile(32, rng));
    const auto m = gk::make_double_well(1, 4);
    const auto E = gk::stationary_set_search(m, p, seeds);
    for (double r : {0.25, 0.5, 0.75}) {
      bool found = false;
      for (const auto& f : E.profiles)
        if (gk::sup_distance(f, gk::DensityField(32, r)) < 1e-10) found = true;
      CHECK(found);
    }
    for (std::size_t i = 0; i < E.profiles.size(); ++i) {
      CHECK(E.residuals[i] < p.tol);
      CHECK(gk::stationary_residual(E.profiles[i], m) < p.tol);
    }
    CHECK(gk::distance_to_stationary_set(gk::DensityField(32, 0.26), E, 1) == doctest::Approx(0.01).epsilon(1e-9));
    CHECK(std::abs(gk::distance_to_stationary_set(gk::DensityField(32, 0.26), E, 16) - 0.01) < 1e-3);
  }
  CHECK_THROWS_AS(gk::distance_to_stationary_set(gk::DensityField(4, 0.5), gk::StationarySet{}), gk::DomainError);
}
