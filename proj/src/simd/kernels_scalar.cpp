#include <cmath>

#include "gklab/simd/kernels.hpp"

namespace gk::simd::detail {
namespace {

double dot_scalar(const double* a, const double* b, std::size_t n) {
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) s += a[i] * b[i];
  return s;
}

void axpy_scalar(double alpha, const double* x, double* y, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] += alpha * x[i];
}

void horner_scalar(const double* coeffs, std::size_t ncoef, const double* x,
                   double* out, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) {
    double acc = 0.0;
    for (std::size_t k = ncoef; k-- > 0;) acc = acc * x[i] + coeffs[k];
    out[i] = acc;
  }
}

void periodic_laplacian_scalar(const double* in, double* out, std::size_t n,
                               double scale) {
  if (n == 0) return;
  if (n == 1) {
    out[0] = 0.0;
    return;
  }
  out[0] = scale * (in[n - 1] - 2.0 * in[0] + in[1]);
  for (std::size_t j = 1; j + 1 < n; ++j)
    out[j] = scale * (in[j - 1] - 2.0 * in[j] + in[j + 1]);
  out[n - 1] = scale * (in[n - 2] - 2.0 * in[n - 1] + in[0]);
}

double gradient_energy_scalar(const double* in, std::size_t n, double inv_2h) {
  if (n < 2) return 0.0;
  double s = 0.0;
  for (std::size_t j = 0; j < n; ++j) {
    const double right = in[j + 1 == n ? 0 : j + 1];
    const double left = in[j == 0 ? n - 1 : j - 1];
    const double g = (right - left) * inv_2h;
    s += g * g;
  }
  return s;
}

double weighted_gradient_energy_scalar(const double* in, std::size_t n,
                                       double inv_2h, double a) {
  if (n < 2) return 0.0;
  double s = 0.0;
  for (std::size_t j = 0; j < n; ++j) {
    const double right = in[j + 1 == n ? 0 : j + 1];
    const double left = in[j == 0 ? n - 1 : j - 1];
    const double g = (right - left) * inv_2h;
    s += g * g / ((in[j] + a) * (1.0 - in[j] + a));
  }
  return s;
}

void exp_pm_scalar(const double* g, double* ep, double* em, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) {
    ep[i] = std::exp(g[i]);
    em[i] = std::exp(-g[i]);
  }
}

double reaction_cost_scalar(const double* B, const double* D, const double* G,
                            double* dG, std::size_t n) {
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double ep = std::exp(G[i]);
    const double em = std::exp(-G[i]);
    s += B[i] * (ep - 1.0) + D[i] * (em - 1.0);
    dG[i] = B[i] * ep - D[i] * em;
  }
  return s;
}

}  // namespace

const KernelTable& scalar_table() {
  static const KernelTable t{Isa::scalar,
                             dot_scalar,
                             axpy_scalar,
                             horner_scalar,
                             periodic_laplacian_scalar,
                             gradient_energy_scalar,
                             weighted_gradient_energy_scalar,
                             exp_pm_scalar,
                             reaction_cost_scalar};
  return t;
}

}  // namespace gk::simd::detail
