#include "gklab/metric.hpp"

#include <cmath>
#include <numbers>

#include "gklab/errors.hpp"

namespace gk {

namespace {

void require_terms(std::size_t K) {
  if (K == 0) throw DomainError("measure_distance: truncation K must be at least 1");
}

}  // namespace

std::vector<double> metric_moments(const DensityField& rho, std::size_t K) {
  require_terms(K);
  const std::size_t J = rho.size();
  std::vector<double> m(K, 0.0);
  const double h = 1.0 / static_cast<double>(J);
  for (std::size_t k = 0; k < K; ++k) {
    const double w = std::numbers::pi * static_cast<double>(k / 2);
    const bool is_sine = (k % 2) == 1;
    double s = 0.0;
    for (std::size_t j = 0; j < J; ++j) {
      const double a = static_cast<double>(j) * h, b = a + h;
      double integral;
      if (w == 0.0)
        integral = is_sine ? 0.0 : h;
      else if (is_sine)
        integral = (std::cos(w * a) - std::cos(w * b)) / w;
      else
        integral = (std::sin(w * b) - std::sin(w * a)) / w;
      s += rho[j] * integral;
    }
    m[k] = s;
  }
  return m;
}

std::vector<double> metric_moments(const EmpiricalMeasure& pi, std::size_t K) {
  require_terms(K);
  std::vector<double> m(K, 0.0);
  if (pi.N == 0) return m;
  const double inv = 1.0 / static_cast<double>(pi.N);
  for (std::size_t k = 0; k < K; ++k) {
    const double w = std::numbers::pi * static_cast<double>(k / 2);
    double s = 0.0;
    for (std::size_t x : pi.sites) {
      const double u = static_cast<double>(x) * inv;
      s += (k % 2) ? std::sin(w * u) : std::cos(w * u);
    }
    m[k] = s * inv;
  }
  return m;
}

double moment_distance(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size()) throw DomainError("measure_distance: truncation mismatch");
  double d = 0.0, weight = 1.0;
  for (std::size_t k = 0; k < a.size(); ++k, weight *= 0.5) d += weight * std::abs(a[k] - b[k]);
  return d;
}

double measure_distance(const DensityField& a, const DensityField& b, std::size_t K) {
  return moment_distance(metric_moments(a, K), metric_moments(b, K));
}

double measure_distance(const EmpiricalMeasure& a, const DensityField& b, std::size_t K) {
  return moment_distance(metric_moments(a, K), metric_moments(b, K));
}

double measure_distance(const EmpiricalMeasure& a, const EmpiricalMeasure& b, std::size_t K) {
  return moment_distance(metric_moments(a, K), metric_moments(b, K));
}

}  // namespace gk
