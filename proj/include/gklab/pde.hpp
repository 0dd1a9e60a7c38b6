#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "gklab/field.hpp"
#include "gklab/metric.hpp"
#include "gklab/rate_model.hpp"

namespace gk {

enum class Scheme { finite_difference_imex, mild_picard };

struct PdeParams {
  std::size_t J = 256;  // grid size used when a caller builds profiles from functions
  double dt = 1e-4;     // upper bound on the time step; the grid is T / ceil(T / dt)
  Scheme scheme = Scheme::finite_difference_imex;
  double tol = 1e-10;  // Picard and Newton tolerance (sup norm)
  std::size_t max_iter = 200;
  /// Number of record intervals over [0, T]; 0 records every time step.
  std::size_t frames = 0;
  /// Picard window as a fraction of 1 / max|F'|.
  double picard_window = 0.1;
};

/// H(t, u_j) at the cell centers of a J-cell grid; the callee fills `out`.
using ControlField = std::function<void(double t, std::span<double> out)>;

/// Largest admissible step for the explicit part given the control values at
/// one time: 0.5 / (L_react + L_drift) with
/// L_react = (max|B'| + max|D'|) e^{max|H|} and L_drift = 4 max|H_{j+1} - H_j| J^2.
double explicit_step_bound(const RateModel& m, std::span<const double> H);

/// d rho/dt = (1/2) Delta rho + F(rho) on the periodic grid of gamma.
/// Strang splitting: half step of the explicit reaction (SSP-RK3), a
/// backward-Euler diffusion step solved as a cyclic tridiagonal system, and a
/// second explicit half step. Throws NumericalError if dt violates the bound.
Trajectory solve_cauchy(const DensityField& gamma, const RateModel& m, double horizon,
                        const PdeParams& p);

/// Duhamel fixed point rho_t = P_t gamma + int_0^t P_{t-s} F(rho_s) ds with the
/// discrete heat semigroup applied spectrally, by Picard iteration over time
/// windows (halved when the iteration fails to contract).
Trajectory solve_mild_picard(const DensityField& gamma, const RateModel& m, double horizon,
                             const PdeParams& p);

/// Dispatch on p.scheme.
Trajectory solve(const DensityField& gamma, const RateModel& m, double horizon,
                 const PdeParams& p);

/// d rho/dt = (1/2) Delta rho - div(chi(rho) grad H) + B(rho) e^H - D(rho) e^{-H}
/// with the same splitting as solve_cauchy; the drift uses face fluxes with the
/// mean mobility limited by twice the smaller neighbouring mobility. A zero H
/// reproduces solve_cauchy bit for bit.
Trajectory solve_controlled(const DensityField& gamma, const RateModel& m, const ControlField& H,
                            double horizon, const PdeParams& p);

/// d lambda/dt = F(lambda) by classical RK4 with `steps` uniform steps; returns
/// steps + 1 values.
std::vector<double> solve_homogeneous_ode(double j, const RateModel& m, double horizon,
                                          std::size_t steps = 10000);

/// sup_j |(1/2)(Delta_h rho)_j + F(rho_j)|.
double stationary_residual(const DensityField& rho, const RateModel& m);

struct StationarySearchOptions {
  double relax_tol = 1e-6;  // sup-norm change over one unit of time
  double time_cap = 300.0;  // relaxation time budget per seed
  double dedup_eps = 1e-6;  // L1 distance below which profiles coincide
  std::size_t newton_max_iter = 50;
};

struct StationarySet {
  std::vector<DensityField> profiles;
  std::vector<double> residuals;
  std::vector<std::string> origins;   // "root" or "seed <i>"
  std::vector<std::string> failures;  // seeds that did not converge, with reasons
};

/// Constant roots of F (sign-change sweep plus bisection) together with the
/// long-time limits of the given seeds, each polished by Newton's method on
/// (1/2) Delta_h rho + F(rho) = 0; duplicates removed.
StationarySet stationary_set_search(const RateModel& m, const PdeParams& p,
                                    const std::vector<DensityField>& seeds,
                                    const StationarySearchOptions& opt = {});

/// min over E of measure_distance. Throws DomainError for an empty set.
double distance_to_stationary_set(const DensityField& pi, const StationarySet& E,
                                  std::size_t K = 16);
double distance_to_stationary_set(const EmpiricalMeasure& pi, const StationarySet& E,
                                  std::size_t K = 16);

}  // namespace gk
