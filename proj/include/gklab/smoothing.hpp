#pragma once

#include <cstddef>
#include <vector>

#include "gklab/field.hpp"
#include "gklab/rate_model.hpp"

namespace gk {

/// Z = int_{-1}^{1} exp(-1 / (1 - r^2)) dr, by composite Simpson on 4097 nodes.
double bump_normalization();
/// phi(r) = Z^{-1} exp(-1 / (1 - r^2)) on (-1, 1), zero elsewhere.
double bump(double r);

/// Symmetric discrete weights w_{-m..m} of phi^width(r) = phi(r / width) / width
/// sampled at multiples of `spacing`, normalized to unit sum. Throws DomainError
/// if the support spans fewer than 3 samples on each side.
std::vector<double> bump_weights(double width, double spacing);

struct MollifierSpec {
  double eps;    // spatial width
  double delta;  // temporal width
  double Z;

  /// Validates eps, delta in (0, 1/2).
  static MollifierSpec make(double eps, double delta);
};

/// rho^{eps, delta}: convolution with phi^delta in time (frames before 0 equal
/// rho_0, after T equal rho_T) and with the periodic phi^eps in space. Grid
/// unchanged.
Trajectory mollify_spacetime(const Trajectory& pi, const MollifierSpec& spec);

struct SmoothingSchedule {
  double delta;  // alpha = 0 on [0, delta], 1 on [2 delta, T]
  double n;      // smoothing index

  /// Validates delta > 0 and n >= 1.
  static SmoothingSchedule make(double delta, double n);

  /// C-infinity nondecreasing ramp.
  [[nodiscard]] double alpha(double t) const;
  [[nodiscard]] double alpha_n(double t) const { return alpha(t) / n; }
  /// Unit-mass bump on [0, 1]: Phi(s) = 2 phi(2 s - 1).
  static double phi_time(double s);
};

/// Lemma-style splice: lambda (the solution from gamma) on [0, delta], lambda
/// run backwards on [delta, 2 delta], then pi shifted by 2 delta. delta is
/// rounded to a whole number (>= 4) of trajectory steps. Requires
/// L1(pi_0, gamma) <= 1e-9 and 2 delta < T.
Trajectory splice_with_solution(const Trajectory& pi, const DensityField& gamma,
                                const RateModel& m, double delta, double solver_dt = 1e-4);

/// (1 - eps) pi + eps lambda frame by frame; the result is checked against
/// the barrier paths eps lambda^0 and (1 - eps) + eps lambda^1 (solutions from
/// 0 and 1). eps in [0, 1].
Trajectory interpolate_with_solution(const Trajectory& pi, const DensityField& gamma,
                                     const RateModel& m, double eps, double solver_dt = 1e-4);

/// rho^n_t = rho_t * psi(alpha(t) / n): heat kernel applied as the Fourier
/// multiplier exp(-(2 pi k)^2 s / 2). Frames with alpha = 0 are copied.
/// Output clamped to the input frame's range (the kernel's maximum principle).
Trajectory heat_kernel_smooth(const Trajectory& pi, const SmoothingSchedule& schedule);

/// rho^n(t) = int_0^1 rho(t + alpha_n(t) s) Phi(s) ds (64-point Gauss-Legendre
/// in s, linear interpolation in time), with the path extended past T by the
/// solution started from rho_T.
Trajectory time_average_smooth(const Trajectory& pi, const RateModel& m,
                               const SmoothingSchedule& schedule, double solver_dt = 1e-4);

struct IDensityLevel {
  double delta = 0.0;
  double eps = 0.0;
  double n = 0.0;
};

struct IDensityRow {
  IDensityLevel level;
  double rate = 0.0;
  double gap = 0.0;       // |I(pi^n) - I(pi)| / I(pi)
  double distance = 0.0;  // max over frames of the weak distance d(pi^n_t, pi_t)
};

struct IDensityReport {
  double base_rate = 0.0;
  std::vector<IDensityRow> rows;
  bool gap_decreasing = false;      // nonincreasing along the schedule
  bool distance_decreasing = false;
};

/// Levels halving delta and eps and multiplying n by `n_factor`, starting at `first`.
std::vector<IDensityLevel> default_levels(IDensityLevel first, std::size_t count,
                                          double n_factor = 4.0);

/// splice -> interpolate -> heat -> time average at each level; rates by the
/// explicit route, the base rate from the same route on pi.
IDensityReport idensity_harness(const Trajectory& pi, const DensityField& gamma,
                                const RateModel& m, const std::vector<IDensityLevel>& levels,
                                double solver_dt = 1e-4);

}  // namespace gk
