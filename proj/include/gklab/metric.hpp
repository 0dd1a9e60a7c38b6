#pragma once

#include <cstddef>
#include <vector>

#include "gklab/field.hpp"

namespace gk {

/// Atomic measure with mass 1/N at x/N for every occupied site x.
struct EmpiricalMeasure {
  std::size_t N = 0;
  std::vector<std::size_t> sites;

  [[nodiscard]] double mass() const {
    return N == 0 ? 0.0 : static_cast<double>(sites.size()) / static_cast<double>(N);
  }
};

/// Pairings <pi, f_k> for k = 0..K-1 with f_{2m} = cos(pi m u) and
/// f_{2m+1} = sin(pi m u). Fields use exact cell integrals of f_k against the
/// piecewise-constant density; measures sum over atoms.
std::vector<double> metric_moments(const DensityField& rho, std::size_t K);
std::vector<double> metric_moments(const EmpiricalMeasure& pi, std::size_t K);

/// d(pi1, pi2) = sum_{k<K} 2^{-k} |<pi1, f_k> - <pi2, f_k>|. Throws DomainError
/// for K = 0.
double measure_distance(const DensityField& a, const DensityField& b, std::size_t K = 16);
double measure_distance(const EmpiricalMeasure& a, const DensityField& b, std::size_t K = 16);
double measure_distance(const EmpiricalMeasure& a, const EmpiricalMeasure& b, std::size_t K = 16);
double moment_distance(const std::vector<double>& a, const std::vector<double>& b);

}  // namespace gk
