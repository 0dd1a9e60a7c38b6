#include <doctest.h>

#include <cmath>
#include <numbers>

#include "gklab/errors.hpp"
#include "gklab/functionals.hpp"
#include "gklab/pde.hpp"
#include "gklab/random.hpp"
#include "gklab/smoothing.hpp"

namespace {

constexpr double kPi = std::numbers::pi;

gk::Trajectory static_path(const gk::DensityField& f, double T, std::size_t K) {
  gk::Trajectory p;
  p.times = gk::uniform_times(T, K);
  p.frames.assign(K + 1, f);
  return p;
}

gk::DensityField sine_profile(std::size_t J, double amp) {
  return gk::DensityField::from_function(J, [&](double u) { return 0.5 + amp * std::sin(2 * kPi * u); });
}

gk::PdeParams params(std::size_t J, double dt, std::size_t frames) {
  gk::PdeParams p;
  p.J = J;
  p.dt = dt;
  p.frames = frames;
  return p;
}

/// A time-dependent interior path: the sine profile drifting and growing.
gk::Trajectory moving_path(std::size_t J, std::size_t K) {
  gk::Trajectory p;
  p.times = gk::uniform_times(1.0, K);
  for (double t : p.times)
    p.frames.push_back(gk::DensityField::from_function(J, [&](double u) {
      return 0.5 + (0.2 + 0.1 * t) * std::sin(2 * kPi * (u - 0.2 * t));
    }));
  return p;
}

double quadrature(double (*f)(double), double a, double b, std::size_t n = 200000) {
  const double h = (b - a) / static_cast<double>(n);
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) s += f(a + (static_cast<double>(i) + 0.5) * h);
  return s * h;
}

}  // namespace

TEST_CASE("bump kernel has unit mass") {
  CHECK(gk::bump_normalization() == doctest::Approx(0.443993816).epsilon(1e-8));
  CHECK(std::abs(quadrature([](double r) { return gk::bump(r); }, -1.0, 1.0) - 1.0) < 1e-10);
  CHECK(std::abs(quadrature([](double s) { return gk::SmoothingSchedule::phi_time(s); }, 0.0, 1.0) - 1.0) < 1e-10);
  CHECK(gk::bump(1.0) == 0.0);
  CHECK(gk::bump(-1.5) == 0.0);
  const auto w = gk::bump_weights(0.1, 0.01);
  double s = 0.0;
  for (double v : w) s += v;
  CHECK(s == doctest::Approx(1.0).epsilon(1e-14));
  CHECK_THROWS_AS((void)gk::bump_weights(0.02, 0.01), gk::DomainError);
  CHECK_THROWS_AS((void)gk::MollifierSpec::make(0.6, 0.1), gk::DomainError);
}

TEST_CASE("space-time mollifier") {
  const auto spec = gk::MollifierSpec::make(0.1, 0.05);
  const auto flat = static_path(gk::DensityField(64, 0.37), 1.0, 100);
  const auto f = gk::mollify_spacetime(flat, spec);
  for (const auto& fr : f.frames)
    for (double v : fr.values) CHECK(std::abs(v - 0.37) < 1e-12);

  const auto mv = moving_path(64, 100);
  const auto mm = gk::mollify_spacetime(mv, spec);
  for (std::size_t n = 0; n < mv.frames.size(); ++n) {
    CHECK(std::abs(mm.frames[n].mean() - mv.frames[n].mean()) < 1e-10);
    CHECK(mm.frames[n].min() >= 0.0);
    CHECK(mm.frames[n].max() <= 1.0);
  }

  // Static sine: the amplitude is scaled by the kernel's first Fourier coefficient.
  const std::size_t J = 1024;
  const auto s = static_path(sine_profile(J, 0.4), 1.0, 100);
  const auto ms = gk::mollify_spacetime(s, spec);
  static double eps = 0.1;
  const double coeff = quadrature([](double r) { return gk::bump(r / eps) / eps * std::cos(2 * kPi * r); }, -eps, eps);
  const auto& mid = ms.frames[50];
  for (std::size_t j = 0; j < J; j += 37) {
    const double expected = 0.5 + 0.4 * coeff * std::sin(2 * kPi * gk::DensityField::center(j, J));
    CHECK(std::abs(mid[j] - expected) < 1e-5);
  }

  CHECK_THROWS_AS((void)gk::mollify_spacetime(static_path(gk::DensityField(16, 0.5), 1.0, 100), spec),
                  gk::DomainError);
}

TEST_CASE("schedule ramp") {
  const auto s = gk::SmoothingSchedule::make(0.1, 8);
  CHECK(s.alpha(0.05) == 0.0);
  CHECK(s.alpha(0.1) == 0.0);
  CHECK(s.alpha(0.2) == 1.0);
  CHECK(s.alpha(0.7) == 1.0);
  CHECK(s.alpha_n(0.5) == doctest::Approx(0.125));
  double prev = 0.0;
  for (int i = 0; i <= 1000; ++i) {
    const double a = s.alpha(0.1 + 0.1 * i / 1000.0);
    CHECK(a >= prev);
    prev = a;
  }
  CHECK_THROWS_AS((void)gk::SmoothingSchedule::make(0.0, 8), gk::DomainError);
}

TEST_CASE("splice with the solution") {
  const auto c1 = gk::make_constant();
  const auto gamma = sine_profile(32, 0.4);
  const auto sol = gk::solve_cauchy(gamma, c1, 1.0, params(32, 1e-4, 400));
  const double d = 0.05;
  const auto sp = gk::splice_with_solution(sol, gamma, c1, d);
  const std::size_t k = 20;
  const auto lambda = gk::solve_cauchy(gamma, c1, 0.05, params(32, 1e-4, k));
  for (std::size_t j = 0; j < 32; ++j) {
    CHECK(std::abs(sp.frames[k][j] - lambda.frames[k][j]) < 1e-9);
    CHECK(std::abs(sp.frames[2 * k][j] - gamma[j]) < 1e-9);
    CHECK(std::abs(sp.frames[2 * k - 1][j] - lambda.frames[1][j]) < 1e-9);
  }

  // L1 distance to the original shrinks with delta.
  const auto mv = gk::solve_controlled(gamma, c1, [](double, std::span<double> h) {
    for (std::size_t j = 0; j < h.size(); ++j) h[j] = 0.5 * std::cos(2 * kPi * gk::DensityField::center(j, h.size()));
  }, 1.0, params(32, 1e-4, 400));
  double prev = 1e9;
  for (double delta : {0.2, 0.1, 0.05}) {
    const double dist = gk::trajectory_l1(gk::splice_with_solution(mv, gamma, c1, delta), mv);
    CHECK(dist < prev);
    prev = dist;
  }

  // Rate of the spliced hydrodynamic solution is tiny and shrinks with delta.
  const double r1 = gk::rate_explicit_smooth(gk::splice_with_solution(sol, gamma, c1, 0.1), c1).value;
  const double r2 = gk::rate_explicit_smooth(gk::splice_with_solution(sol, gamma, c1, 0.025), c1).value;
  CHECK(r2 < r1);

  CHECK_THROWS_AS((void)gk::splice_with_solution(sol, sine_profile(32, 0.3), c1, d), gk::DomainError);
  CHECK_THROWS_AS((void)gk::splice_with_solution(sol, gamma, c1, 0.6), gk::DomainError);
}

TEST_CASE("interpolation with the solution") {
  const auto c1 = gk::make_constant();
  const auto gamma = sine_profile(32, 0.4);
  const auto mv = moving_path(32, 100);
  gk::Trajectory p = mv;
  p.frames[0] = gamma;
  CHECK(gk::trajectory_sup(gk::interpolate_with_solution(p, gamma, c1, 0.0), p) == 0.0);
  const auto sol = gk::solve_cauchy(gamma, c1, 1.0, params(32, 1e-4, 100));
  CHECK(gk::trajectory_sup(gk::interpolate_with_solution(p, gamma, c1, 1.0), sol) < 1e-12);

  // Path held at zero: bounded below by eps (1 - e^{-2t}) / 2.
  const gk::DensityField zero(32, 0.0);
  const auto held = static_path(zero, 1.0, 50);
  const double eps = 0.2;
  const auto q = gk::interpolate_with_solution(held, zero, c1, eps);
  for (std::size_t n = 0; n < q.frames.size(); ++n) {
    const double bound = eps * (1.0 - std::exp(-2.0 * q.times[n])) / 2.0;
    for (double v : q.frames[n].values) CHECK(v >= bound - 1e-7);
  }
}

TEST_CASE("heat-kernel smoothing") {
  const auto sched = gk::SmoothingSchedule::make(0.1, 16);
  const std::size_t J = 128;
  const auto s = static_path(sine_profile(J, 0.4), 1.0, 100);
  const auto h = gk::heat_kernel_smooth(s, sched);
  for (std::size_t n = 0; n <= 10; ++n) CHECK(h.frames[n].values == s.frames[n].values);
  const double factor = std::exp(-(2 * kPi) * (2 * kPi) * (1.0 / 16) / 2);
  for (std::size_t j = 0; j < J; ++j) {
    const double expected = 0.5 + 0.4 * factor * std::sin(2 * kPi * gk::DensityField::center(j, J));
    CHECK(std::abs(h.frames[50][j] - expected) < 1e-12);
  }

  const auto mv = moving_path(64, 100);
  double prev = 1e9;
  for (double n : {4.0, 16.0, 64.0}) {
    const auto out = gk::heat_kernel_smooth(mv, gk::SmoothingSchedule::make(0.1, n));
    const double dist = gk::trajectory_sup(out, mv);
    CHECK(dist < prev);
    prev = dist;
    CHECK(gk::energy_direct(out) <= gk::energy_direct(mv) + 1e-9);
    for (const auto& f : out.frames) {
      CHECK(f.min() >= 0.0);
      CHECK(f.max() <= 1.0);
    }
  }
}

TEST_CASE("time-average smoothing") {
  const auto c1 = gk::make_constant();
  const auto flat = static_path(sine_profile(16, 0.3), 1.0, 100);
  const auto sched = gk::SmoothingSchedule::make(0.1, 4);
  // A static profile that is not a solution: the extension past T moves, so
  // only check frames whose window stays inside [0, T].
  const auto f = gk::time_average_smooth(flat, c1, sched);
  for (std::size_t n = 0; n <= 70; ++n)
    for (std::size_t j = 0; j < 16; ++j) CHECK(std::abs(f.frames[n][j] - flat.frames[n][j]) < 1e-12);

  const auto half = static_path(gk::DensityField(16, 0.5), 1.0, 100);
  CHECK(gk::trajectory_sup(gk::time_average_smooth(half, c1, sched), half) < 1e-12);

  const auto mv = moving_path(64, 400);
  const auto early = gk::time_average_smooth(mv, c1, sched);
  for (std::size_t n = 0; n <= 40; ++n) CHECK(early.frames[n].values == mv.frames[n].values);
  double errs[3];
  int i = 0;
  for (double n : {16.0, 32.0, 64.0}) {
    errs[i++] = gk::trajectory_l1(gk::time_average_smooth(mv, c1, gk::SmoothingSchedule::make(0.1, n)), mv);
  }
  for (int k = 0; k < 2; ++k) {
    const double ratio = errs[k] / errs[k + 1];
    CHECK(ratio >= 1.8);
    CHECK(ratio <= 2.2);
  }
}

TEST_CASE("I-density harness on a controlled path") {
  const std::size_t J = 32;
  const auto c1 = gk::make_constant();
  const auto gamma = sine_profile(J, 0.3);
  const auto path = gk::solve_controlled(gamma, c1, [](double t, std::span<double> h) {
    for (std::size_t j = 0; j < h.size(); ++j)
      h[j] = 0.6 * std::sin(2 * kPi * gk::DensityField::center(j, h.size())) * std::cos(kPi * t);
  }, 1.0, params(J, 1e-4, 800));
  const auto rep = gk::idensity_harness(path, gamma, c1, gk::default_levels({0.04, 0.04, 16}, 4));
  REQUIRE(rep.rows.size() == 4);
  CHECK(rep.gap_decreasing);
  CHECK(rep.distance_decreasing);
  CHECK(rep.rows.back().gap < 0.2);
  for (const auto& r : rep.rows) CHECK(r.rate >= 0.0);
}
