#include "gklab/smoothing.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>

#include "gklab/errors.hpp"
#include "gklab/functionals.hpp"
#include "gklab/metric.hpp"
#include "gklab/pde.hpp"
#include "gklab/spectral.hpp"

namespace gk {

namespace {

double raw_bump(double r) {
  const double q = 1.0 - r * r;
  return q > 0.0 ? std::exp(-1.0 / q) : 0.0;
}

double compute_normalization() {
  constexpr std::size_t nodes = 4097;
  const double h = 2.0 / static_cast<double>(nodes - 1);
  double s = 0.0;
  for (std::size_t i = 0; i < nodes; ++i) {
    const double r = -1.0 + h * static_cast<double>(i);
    const double w = (i == 0 || i + 1 == nodes) ? 1.0 : (i % 2 == 1 ? 4.0 : 2.0);
    s += w * raw_bump(r);
  }
  return s * h / 3.0;
}

std::size_t steps_for(double width, double spacing) {
  return static_cast<std::size_t>(std::floor(width / spacing * (1.0 - 1e-12)));
}

PdeParams solver_params(std::size_t J, double dt, std::size_t frames) {
  PdeParams p;
  p.J = J;
  p.dt = dt;
  p.frames = frames;
  return p;
}

/// 64-point Gauss-Legendre nodes and weights on [0, 1].
const std::pair<std::array<double, 64>, std::array<double, 64>>& gauss_legendre_64() {
  static const auto table = [] {
    std::pair<std::array<double, 64>, std::array<double, 64>> t;
    constexpr int n = 64;
    for (int i = 0; i < n; ++i) {
      double x = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
      double dp = 0.0;
      for (int it = 0; it < 100; ++it) {
        double p0 = 1.0, p1 = x;
        for (int k = 2; k <= n; ++k) {
          const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
          p0 = p1;
          p1 = p2;
        }
        dp = n * (x * p1 - p0) / (x * x - 1.0);
        const double dx = p1 / dp;
        x -= dx;
        if (std::abs(dx) < 1e-16) break;
      }
      t.first[static_cast<std::size_t>(i)] = 0.5 * (1.0 - x);
      t.second[static_cast<std::size_t>(i)] = 1.0 / ((1.0 - x * x) * dp * dp);
    }
    return t;
  }();
  return table;
}

}  // namespace

double bump_normalization() {
  static const double Z = compute_normalization();
  return Z;
}

double bump(double r) { return raw_bump(r) / bump_normalization(); }

std::vector<double> bump_weights(double width, double spacing) {
  if (!(width > 0.0) || !(spacing > 0.0)) throw DomainError("bump weights: bad width or spacing");
  const std::size_t m = steps_for(width, spacing);
  if (m < 3)
    throw DomainError("mollifier under-resolved: width " + std::to_string(width) +
                      " spans fewer than 3 grid steps of " + std::to_string(spacing));
  std::vector<double> w(2 * m + 1);
  double s = 0.0;
  for (std::size_t i = 0; i < w.size(); ++i) {
    const double r = (static_cast<double>(i) - static_cast<double>(m)) * spacing / width;
    w[i] = bump(r);
    s += w[i];
  }
  for (double& v : w) v /= s;
  return w;
}

MollifierSpec MollifierSpec::make(double eps, double delta) {
  if (!(eps > 0.0 && eps < 0.5)) throw DomainError("mollifier: eps must lie in (0, 1/2)");
  if (!(delta > 0.0 && delta < 0.5)) throw DomainError("mollifier: delta must lie in (0, 1/2)");
  return {eps, delta, bump_normalization()};
}

Trajectory mollify_spacetime(const Trajectory& pi, const MollifierSpec& spec) {
  pi.require_uniform("mollify");
  const std::size_t K = pi.steps(), J = pi.cells();
  if (K == 0) throw DomainError("mollify: trajectory needs at least two frames");
  const auto wt = bump_weights(spec.delta, pi.dt());
  const auto ws = bump_weights(spec.eps, 1.0 / static_cast<double>(J));
  const auto mt = static_cast<long>(wt.size() / 2);
  const auto ms = static_cast<long>(ws.size() / 2);
  if (static_cast<std::size_t>(ms) >= J) throw DomainError("mollify: eps wider than the torus");

  // time first (constant extension outside [0, T]), then space
  Trajectory tmp = pi;
  for (std::size_t n = 0; n <= K; ++n) {
    auto& out = tmp.frames[n].values;
    std::fill(out.begin(), out.end(), 0.0);
    for (long i = -mt; i <= mt; ++i) {
      const long src = std::clamp<long>(static_cast<long>(n) + i, 0, static_cast<long>(K));
      const double w = wt[static_cast<std::size_t>(i + mt)];
      const auto& f = pi.frames[static_cast<std::size_t>(src)].values;
      for (std::size_t j = 0; j < J; ++j) out[j] += w * f[j];
    }
  }
  Trajectory out = tmp;
  const long Jl = static_cast<long>(J);
  for (std::size_t n = 0; n <= K; ++n) {
    const auto& f = tmp.frames[n].values;
    auto& o = out.frames[n].values;
    for (long j = 0; j < Jl; ++j) {
      double s = 0.0;
      for (long i = -ms; i <= ms; ++i) s += ws[static_cast<std::size_t>(i + ms)] * f[static_cast<std::size_t>(((j - i) % Jl + Jl) % Jl)];
      o[static_cast<std::size_t>(j)] = s;
    }
  }
  return out;
}

SmoothingSchedule SmoothingSchedule::make(double delta, double n) {
  if (!(delta > 0.0)) throw DomainError("schedule: delta must be positive");
  if (!(n >= 1.0)) throw DomainError("schedule: n must be at least 1");
  return {delta, n};
}

double SmoothingSchedule::alpha(double t) const {
  const double x = (t - delta) / delta;
  if (x <= 0.0) return 0.0;
  if (x >= 1.0) return 1.0;
  const double a = std::exp(-1.0 / x), b = std::exp(-1.0 / (1.0 - x));
  return a / (a + b);
}

double SmoothingSchedule::phi_time(double s) { return 2.0 * bump(2.0 * s - 1.0); }

Trajectory splice_with_solution(const Trajectory& pi, const DensityField& gamma, const RateModel& m,
                                double delta, double solver_dt) {
  pi.require_uniform("splice");
  const std::size_t K = pi.steps();
  if (gamma.size() != pi.cells()) throw DomainError("splice: initial profile has the wrong grid");
  if (l1_distance(pi.frames.front(), gamma) > 1e-9)
    throw DomainError("splice: the path must start at gamma");
  const double h = pi.dt();
  const auto k = std::max<std::size_t>(4, static_cast<std::size_t>(std::llround(delta / h)));
  if (2 * k >= K) throw DomainError("splice: 2 delta must be shorter than the horizon");
  const auto lambda =
      solve_cauchy(gamma, m, h * static_cast<double>(k), solver_params(gamma.size(), std::min(solver_dt, h), k));
  Trajectory out = pi;
  for (std::size_t n = 0; n <= K; ++n) {
    if (n <= k)
      out.frames[n] = lambda.frames[n];
    else if (n < 2 * k)
      out.frames[n] = lambda.frames[2 * k - n];
    else
      out.frames[n] = pi.frames[n - 2 * k];
  }
  return out;
}

Trajectory interpolate_with_solution(const Trajectory& pi, const DensityField& gamma,
                                     const RateModel& m, double eps, double solver_dt) {
  pi.require_uniform("interpolate");
  if (!(eps >= 0.0 && eps <= 1.0)) throw DomainError("interpolate: eps must lie in [0, 1]");
  if (gamma.size() != pi.cells()) throw DomainError("interpolate: initial profile has the wrong grid");
  const std::size_t K = pi.steps(), J = pi.cells();
  if (eps == 0.0) return pi;
  const double T = pi.horizon();
  const auto lambda = solve_cauchy(gamma, m, T, solver_params(J, std::min(solver_dt, pi.dt()), K));
  if (eps == 1.0) return lambda;

  // Barrier paths: the homogeneous solutions from 0 and 1.
  const std::size_t ode_steps = std::max<std::size_t>(K * 20, 2000);
  const auto lo = solve_homogeneous_ode(0.0, m, T, ode_steps);
  const auto hi = solve_homogeneous_ode(1.0, m, T, ode_steps);
  auto at = [&](const std::vector<double>& v, double t) {
    const double x = t / T * static_cast<double>(ode_steps);
    const auto i = std::min<std::size_t>(static_cast<std::size_t>(x), ode_steps - 1);
    const double f = x - static_cast<double>(i);
    return (1.0 - f) * v[i] + f * v[i + 1];
  };
  Trajectory out = pi;
  for (std::size_t n = 0; n <= K; ++n) {
    const double below = eps * at(lo, pi.times[n]);
    const double above = (1.0 - eps) + eps * at(hi, pi.times[n]);
    for (std::size_t j = 0; j < J; ++j) {
      const double v = (1.0 - eps) * pi.frames[n][j] + eps * lambda.frames[n][j];
      if (v < below - 1e-6 || v > above + 1e-6)
        throw NumericalError("interpolate: value " + std::to_string(v) + " outside the barrier band [" +
                             std::to_string(below) + ", " + std::to_string(above) + "]");
      out.frames[n][j] = v;
    }
  }
  return out;
}

Trajectory heat_kernel_smooth(const Trajectory& pi, const SmoothingSchedule& schedule) {
  pi.require_uniform("heat smoothing");
  const std::size_t J = pi.cells();
  PeriodicSpectral fft(J);
  std::vector<double> mult(fft.modes());
  Trajectory out = pi;
  for (std::size_t n = 0; n < pi.frames.size(); ++n) {
    const double s = schedule.alpha_n(pi.times[n]);
    if (s == 0.0) continue;
    for (std::size_t k = 0; k < mult.size(); ++k) {
      const double w = 2.0 * std::numbers::pi * static_cast<double>(k);
      mult[k] = std::exp(-0.5 * w * w * s);
    }
    auto& f = out.frames[n];
    fft.apply_multiplier(f.values, mult);
    const double lo = pi.frames[n].min(), hi = pi.frames[n].max();
    for (double& v : f.values) v = std::clamp(v, lo, hi);
  }
  return out;
}

Trajectory time_average_smooth(const Trajectory& pi, const RateModel& m,
                               const SmoothingSchedule& schedule, double solver_dt) {
  pi.require_uniform("time averaging");
  const std::size_t K = pi.steps(), J = pi.cells();
  if (K == 0) throw DomainError("time averaging: trajectory needs at least two frames");
  const double h = pi.dt();
  const double reach = 1.0 / schedule.n;  // max alpha_n
  const auto ext_steps = static_cast<std::size_t>(std::ceil(reach / h - 1e-9)) + 1;
  const auto ext = solve_cauchy(pi.frames.back(), m, h * static_cast<double>(ext_steps),
                                solver_params(J, std::min(solver_dt, h), ext_steps));
  auto frame = [&](std::size_t i) -> const DensityField& {
    return i <= K ? pi.frames[i] : ext.frames[i - K];
  };
  const auto& [nodes, weights] = gauss_legendre_64();
  Trajectory out = pi;
  for (std::size_t n = 0; n <= K; ++n) {
    const double a = schedule.alpha_n(pi.times[n]);
    if (a == 0.0) continue;
    auto& o = out.frames[n].values;
    std::fill(o.begin(), o.end(), 0.0);
    double mass = 0.0;
    for (std::size_t q = 0; q < nodes.size(); ++q) {
      const double w = weights[q] * SmoothingSchedule::phi_time(nodes[q]);
      mass += w;
      const double x = static_cast<double>(n) + a * nodes[q] / h;
      const auto i = static_cast<std::size_t>(x);
      const double f = x - static_cast<double>(i);
      const auto& f0 = frame(i);
      const auto& f1 = frame(i + 1);
      for (std::size_t j = 0; j < J; ++j) o[j] += w * ((1.0 - f) * f0[j] + f * f1[j]);
    }
    for (double& v : o) v /= mass;
  }
  return out;
}

std::vector<IDensityLevel> default_levels(IDensityLevel first, std::size_t count,
                                          double n_factor) {
  std::vector<IDensityLevel> out;
  for (std::size_t i = 0; i < count; ++i) {
    out.push_back(first);
    first.delta *= 0.5;
    first.eps *= 0.5;
    first.n *= n_factor;
  }
  return out;
}

IDensityReport idensity_harness(const Trajectory& pi, const DensityField& gamma, const RateModel& m,
                                const std::vector<IDensityLevel>& levels, double solver_dt) {
  IDensityReport rep;
  rep.base_rate = rate_explicit_smooth(pi, m).value;
  if (!(rep.base_rate > 0.0)) throw DomainError("I-density harness: benchmark path has zero rate");
  for (const auto& lv : levels) {
    auto p = splice_with_solution(pi, gamma, m, lv.delta, solver_dt);
    p = interpolate_with_solution(p, gamma, m, lv.eps, solver_dt);
    const auto sched = SmoothingSchedule::make(lv.delta, lv.n);
    p = heat_kernel_smooth(p, sched);
    p = time_average_smooth(p, m, sched, solver_dt);
    IDensityRow row;
    row.level = lv;
    row.rate = rate_explicit_smooth(p, m).value;
    row.gap = std::abs(row.rate - rep.base_rate) / rep.base_rate;
    for (std::size_t n = 0; n < p.frames.size(); ++n)
      row.distance = std::max(row.distance, measure_distance(p.frames[n], pi.frames[n]));
    rep.rows.push_back(row);
  }
  rep.gap_decreasing = rep.distance_decreasing = !rep.rows.empty();
  for (std::size_t i = 1; i < rep.rows.size(); ++i) {
    if (rep.rows[i].gap > rep.rows[i - 1].gap) rep.gap_decreasing = false;
    if (rep.rows[i].distance > rep.rows[i - 1].distance) rep.distance_decreasing = false;
  }
  return rep;
}

}  // namespace gk
