#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "gklab/field.hpp"
#include "gklab/pde.hpp"
#include "gklab/rate_model.hpp"

namespace gk {

struct BasisSize {
  std::size_t spatial = 8;   // K_s: modes 1, cos 2 pi k u, sin 2 pi k u for k <= K_s
  std::size_t temporal = 16; // K_t: piecewise-linear hats on K_t uniform intervals
};

/// G(t, u) = sum_{i, s} theta_{i s} hat_i(t) psi_s(u) with psi_0 = 1,
/// psi_{2k-1} = cos(2 pi k u), psi_{2k} = sin(2 pi k u), and hat_i the
/// piecewise-linear hat at t_i = i T / K_t. Also serves as a control field H.
class TestFunction {
 public:
  TestFunction(double horizon, BasisSize basis);

  [[nodiscard]] double horizon() const { return horizon_; }
  [[nodiscard]] BasisSize basis() const { return basis_; }
  [[nodiscard]] std::size_t spatial_size() const { return 2 * basis_.spatial + 1; }
  [[nodiscard]] std::size_t temporal_size() const { return basis_.temporal + 1; }
  [[nodiscard]] std::size_t size() const { return spatial_size() * temporal_size(); }
  [[nodiscard]] std::size_t index(std::size_t time_node, std::size_t mode) const {
    return time_node * spatial_size() + mode;
  }

  [[nodiscard]] std::vector<double>& coefficients() { return theta_; }
  [[nodiscard]] const std::vector<double>& coefficients() const { return theta_; }

  /// Spatial basis function s and its first two derivatives at u.
  [[nodiscard]] double psi(std::size_t s, double u, int derivative = 0) const;
  /// Time hats active at t: G(t, .) = w0 P_{i0} + w1 P_{i0 + 1}.
  struct HatWeights {
    std::size_t node;
    double w0, w1;
    double d0, d1;  // time derivatives of the two hats
  };
  [[nodiscard]] HatWeights hats(double t) const;

  [[nodiscard]] double value(double t, double u) const;
  [[nodiscard]] double time_derivative(double t, double u) const;
  [[nodiscard]] double gradient(double t, double u) const;
  [[nodiscard]] double laplacian(double t, double u) const;

  /// G(t, .) at the centers of a J-cell grid.
  void evaluate(double t, std::span<double> out) const;
  [[nodiscard]] ControlField as_control() const;

  [[nodiscard]] double max_abs_coefficient() const;

 private:
  double horizon_;
  BasisSize basis_;
  std::vector<double> theta_;
};

/// int_0^T int |grad rho|^2 du dt: centered differences in space, trapezoid in time.
double energy_direct(const Trajectory& pi);

/// sup over G in the basis of 2 int <rho, grad G> - int <G, G> with the
/// discrete pairing <rho, grad G> := -<D_c rho, G>, solved exactly (Gram
/// system with a 1e-12 ridge when singular). Never exceeds energy_direct.
double energy_variational(const Trajectory& pi, BasisSize basis);

/// Discrete J_G: trapezoid in time, midpoint in space, face-based gradients
/// with the same limited mobility as the controlled equation.
double eval_JG(const Trajectory& pi, const TestFunction& G, const DensityField& gamma,
               const RateModel& m);

/// J_G and its coefficient gradient (and optionally the Hessian, row-major).
class JGFunctional {
 public:
  JGFunctional(const Trajectory& pi, const DensityField& gamma, const RateModel& m,
               BasisSize basis);

  [[nodiscard]] std::size_t size() const { return P_; }
  [[nodiscard]] const TestFunction& shape() const { return shape_; }
  double value(std::span<const double> theta) const;
  double value_gradient(std::span<const double> theta, std::span<double> grad) const;
  void hessian(std::span<const double> theta, std::vector<double>& hess) const;
  /// max_{n,j} |G(t_n, u_j)|
  double max_abs_node(std::span<const double> theta) const;

 private:
  void node_values(std::span<const double> theta, std::vector<double>& G) const;

  TestFunction shape_;
  std::size_t K_, J_, S_, T_, P_;
  std::vector<double> w_;          // trapezoid weights, K + 1
  std::vector<double> birth_, death_, mob_;  // (K + 1) x J
  std::vector<double> psi_, dpsi_; // J x S: basis at centers, face differences times J
  std::vector<std::size_t> node_;  // active hat per frame
  std::vector<double> a_, b_;      // hat weights per frame
  std::vector<double> linear_;     // linear part in coefficient space
};

enum class Route { variational, explicit_smooth, homogeneous };
const char* route_name(Route r);

struct RateReport {
  double value = 0.0;
  Route route = Route::variational;
  std::size_t iterations = 0;
  double gradient_norm = 0.0;
  bool converged = false;
  /// Coefficients of the maximizer (variational route).
  std::vector<double> maximizer;
  BasisSize basis{};
  /// Recovered control per frame (explicit route).
  std::vector<DensityField> control;
  /// Energy gate Q(pi) (always finite on grid data; recorded).
  double energy = 0.0;
  std::vector<std::string> notes;
};

struct OptimizerSettings {
  std::size_t max_iter = 100;
  double gtol = 1e-10;   // stop when the Newton decrement squared falls below this
  double box = 30.0;     // |G| bound at the quadrature nodes
};

/// sup_G J_G over the basis by Newton ascent with Armijo backtracking; steps
/// that leave the |G| <= box region are shortened. The value is a valid lower
/// bound on I_T even without convergence.
RateReport rate_variational(const Trajectory& pi, const DensityField& gamma, const RateModel& m,
                            BasisSize basis = {}, const OptimizerSettings& opt = {});

/// Explicit route: per frame, Newton for H on the discrete controlled
/// equation (residual sup norm < 1e-9), then the three-term formula with
/// f(a) = 1 - e^a + a e^a. Frames must lie in [0.01, 0.99].
RateReport rate_explicit_smooth(const Trajectory& pi, const RateModel& m);

/// Closed-form rate of a spatially homogeneous path r(t_k), k = 0..K on a
/// uniform grid over [0, horizon]; values must lie in (0, 1).
double rate_homogeneous(std::span<const double> path, double horizon, const RateModel& m);

/// f(a) = 1 - e^a + a e^a, series near 0.
double legendre_f(double a);

struct EnergyBound {
  double lhs = 0.0;
  double rate = 0.0;
  double ratio = 0.0;
};

/// lhs = int int (grad rho)^2 / chi_a(rho), chi_a(r) = (r + a)(1 - r + a);
/// rate from rate_variational; ratio = lhs / (rate + 1).
EnergyBound energy_bound_check(const Trajectory& pi, const DensityField& gamma,
                               const RateModel& m, double a, BasisSize basis = {});
/// The lhs alone.
double weighted_energy(const Trajectory& pi, double a);

/// d rho / dt on the frame grid: centered inside, second-order one-sided at
/// the two ends. Needs at least 3 frames.
std::vector<DensityField> time_derivative(const Trajectory& pi);

/// min(mean, 2 min) of the two neighbouring mobilities; face j sits between
/// cells j and j + 1.
void face_mobility(std::span<const double> rho, std::span<double> out);

}  // namespace gk
