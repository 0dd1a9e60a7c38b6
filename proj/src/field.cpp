#include "gklab/field.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "gklab/errors.hpp"
#include "gklab/hash.hpp"

namespace gk {

double DensityField::mean() const {
  if (values.empty()) return 0.0;
  return std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(values.size());
}

double DensityField::min() const { return *std::min_element(values.begin(), values.end()); }
double DensityField::max() const { return *std::max_element(values.begin(), values.end()); }

void DensityField::require_unit_interval(const char* what, double tol) const {
  for (std::size_t j = 0; j < values.size(); ++j)
    if (!(values[j] >= -tol && values[j] <= 1.0 + tol))
      throw DomainError(std::string(what) + ": value " + exact(values[j]) + " in cell " +
                        std::to_string(j) + " lies outside [0, 1]");
}

double l1_distance(const DensityField& a, const DensityField& b) {
  if (a.size() != b.size()) throw DomainError("l1_distance: grid size mismatch");
  double s = 0.0;
  for (std::size_t j = 0; j < a.size(); ++j) s += std::abs(a[j] - b[j]);
  return s / static_cast<double>(a.size());
}

double sup_distance(const DensityField& a, const DensityField& b) {
  if (a.size() != b.size()) throw DomainError("sup_distance: grid size mismatch");
  double s = 0.0;
  for (std::size_t j = 0; j < a.size(); ++j) s = std::max(s, std::abs(a[j] - b[j]));
  return s;
}

void Trajectory::require_uniform(const char* what) const {
  if (frames.empty() || frames.size() != times.size())
    throw DomainError(std::string(what) + ": trajectory needs one time per frame");
  const std::size_t J = frames.front().size();
  for (const auto& f : frames)
    if (f.size() != J) throw DomainError(std::string(what) + ": frames differ in cell count");
  if (times.front() != 0.0) throw DomainError(std::string(what) + ": time grid must start at 0");
  if (steps() == 0) return;
  const double h = dt();
  for (std::size_t k = 0; k < times.size(); ++k)
    if (std::abs(times[k] - h * static_cast<double>(k)) > 1e-9 * std::max(1.0, horizon()))
      throw DomainError(std::string(what) + ": time grid is not uniform");
}

std::vector<double> uniform_times(double horizon, std::size_t steps) {
  std::vector<double> t(steps + 1);
  for (std::size_t k = 0; k <= steps; ++k)
    t[k] = steps == 0 ? 0.0 : horizon * static_cast<double>(k) / static_cast<double>(steps);
  if (steps > 0) t.back() = horizon;
  return t;
}

double trajectory_l1(const Trajectory& a, const Trajectory& b) {
  if (a.frames.size() != b.frames.size()) throw DomainError("trajectory_l1: frame count mismatch");
  double s = 0.0;
  for (std::size_t k = 0; k + 1 < a.frames.size(); ++k)
    s += 0.5 * (a.times[k + 1] - a.times[k]) *
         (l1_distance(a.frames[k], b.frames[k]) + l1_distance(a.frames[k + 1], b.frames[k + 1]));
  return s;
}

double trajectory_sup(const Trajectory& a, const Trajectory& b) {
  if (a.frames.size() != b.frames.size()) throw DomainError("trajectory_sup: frame count mismatch");
  double s = 0.0;
  for (std::size_t k = 0; k < a.frames.size(); ++k)
    s = std::max(s, sup_distance(a.frames[k], b.frames[k]));
  return s;
}

}  // namespace gk
