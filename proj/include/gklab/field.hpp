#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace gk {

/// Grid function on J uniform cells of the unit torus; cell j has center
/// (j + 1/2) / J.
struct DensityField {
  std::vector<double> values;

  DensityField() = default;
  explicit DensityField(std::size_t cells, double fill = 0.0) : values(cells, fill) {}
  explicit DensityField(std::vector<double> v) : values(std::move(v)) {}

  template <class Fn>
  static DensityField from_function(std::size_t cells, Fn&& f) {
    DensityField d(cells);
    for (std::size_t j = 0; j < cells; ++j) d.values[j] = f(center(j, cells));
    return d;
  }

  static double center(std::size_t j, std::size_t cells) {
    return (static_cast<double>(j) + 0.5) / static_cast<double>(cells);
  }

  [[nodiscard]] std::size_t size() const { return values.size(); }
  double operator[](std::size_t j) const { return values[j]; }
  double& operator[](std::size_t j) { return values[j]; }
  [[nodiscard]] std::span<const double> span() const { return values; }
  [[nodiscard]] std::span<double> span() { return values; }

  [[nodiscard]] double mean() const;
  [[nodiscard]] double min() const;
  [[nodiscard]] double max() const;

  /// Throws DomainError naming `what` if any value lies outside [-tol, 1 + tol].
  void require_unit_interval(const char* what, double tol = 0.0) const;
};

/// (1/J) sum_j |a_j - b_j|
double l1_distance(const DensityField& a, const DensityField& b);
double sup_distance(const DensityField& a, const DensityField& b);

/// Frames on a time grid (uniform for everything produced by the solvers).
struct Trajectory {
  std::vector<double> times;
  std::vector<DensityField> frames;

  [[nodiscard]] std::size_t cells() const { return frames.empty() ? 0 : frames.front().size(); }
  /// Number of time steps K (frames - 1).
  [[nodiscard]] std::size_t steps() const { return frames.empty() ? 0 : frames.size() - 1; }
  [[nodiscard]] double horizon() const { return times.empty() ? 0.0 : times.back(); }
  [[nodiscard]] double dt() const {
    return steps() == 0 ? 0.0 : horizon() / static_cast<double>(steps());
  }
  [[nodiscard]] const DensityField& final_frame() const { return frames.back(); }

  /// Throws DomainError unless times are 0 = t_0 < ... < t_K uniformly spaced
  /// (relative tolerance 1e-9) and all frames share one cell count.
  void require_uniform(const char* what) const;
};

std::vector<double> uniform_times(double horizon, std::size_t steps);

/// Space-time L1 distance, trapezoid in time; grids must match.
double trajectory_l1(const Trajectory& a, const Trajectory& b);
/// max over frames of the sup-norm distance.
double trajectory_sup(const Trajectory& a, const Trajectory& b);

}  // namespace gk
