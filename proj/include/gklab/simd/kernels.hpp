#pragma once

// Data-parallel inner loops shared by the PDE solvers and the functional
// evaluators. Every kernel has a scalar reference implementation; wider
// variants are selected at runtime from the CPU feature set and must agree
// with the reference (see tests/test_simd.cpp).

#include <cstddef>
#include <span>
#include <string_view>
#include <vector>

namespace gk::simd {

enum class Isa { scalar, avx2 };

std::string_view isa_name(Isa isa);

struct KernelTable {
  Isa isa;

  // sum_i a[i] * b[i]
  double (*dot)(const double* a, const double* b, std::size_t n);

  // y[i] += alpha * x[i]
  void (*axpy)(double alpha, const double* x, double* y, std::size_t n);

  // out[i] = sum_k coeffs[k] * x[i]^k, coefficients low to high
  void (*horner)(const double* coeffs, std::size_t ncoef, const double* x,
                 double* out, std::size_t n);

  // out[j] = scale * (in[j-1] - 2 in[j] + in[j+1]), indices mod n
  void (*periodic_laplacian)(const double* in, double* out, std::size_t n,
                             double scale);

  // sum_j ((in[j+1] - in[j-1]) * inv_2h)^2, indices mod n
  double (*gradient_energy)(const double* in, std::size_t n, double inv_2h);

  // sum_j g_j^2 / ((in_j + a)(1 - in_j + a)) with g the centered difference
  double (*weighted_gradient_energy)(const double* in, std::size_t n,
                                     double inv_2h, double a);

  // ep[i] = exp(g[i]), em[i] = exp(-g[i])
  void (*exp_pm)(const double* g, double* ep, double* em, std::size_t n);

  // Returns sum_i B_i (e^{G_i} - 1) + D_i (e^{-G_i} - 1) and writes
  // dG[i] = B_i e^{G_i} - D_i e^{-G_i}.
  double (*reaction_cost)(const double* B, const double* D, const double* G,
                          double* dG, std::size_t n);
};

/// Kernels for the best ISA the running CPU supports. The choice is made once;
/// GKLAB_SIMD=scalar|avx2 in the environment overrides it.
const KernelTable& active();

/// Kernels for a specific ISA. Throws std::runtime_error if the CPU lacks it.
const KernelTable& table(Isa isa);

bool supported(Isa isa);
std::vector<Isa> supported_isas();

/// Force the table returned by active(); used by tests and the CLI.
void select(Isa isa);

namespace detail {
const KernelTable& scalar_table();
#if defined(GKLAB_HAVE_AVX2)
const KernelTable& avx2_table();
#endif
}  // namespace detail

// Convenience wrappers over the active table.
inline double dot(std::span<const double> a, std::span<const double> b) {
  return active().dot(a.data(), b.data(), a.size());
}
inline void axpy(double alpha, std::span<const double> x, std::span<double> y) {
  active().axpy(alpha, x.data(), y.data(), x.size());
}

}  // namespace gk::simd
