// AVX2 + FMA variants. This translation unit is compiled with -mavx2 -mfma and
// must only be entered after a runtime feature check.

#include <immintrin.h>

#include <cmath>

#include "gklab/simd/kernels.hpp"

namespace gk::simd::detail {
namespace {

inline double hsum(__m256d v) {
  const __m128d lo = _mm256_castpd256_pd128(v);
  const __m128d hi = _mm256_extractf128_pd(v, 1);
  const __m128d s = _mm_add_pd(lo, hi);
  return _mm_cvtsd_f64(_mm_add_sd(s, _mm_unpackhi_pd(s, s)));
}

// exp on [-708, 709]; inputs outside are clamped. Cody-Waite reduction by ln 2
// and a degree-13 Taylor polynomial on |r| <= ln2/2, max error ~1 ulp.
inline __m256d exp256(__m256d x) {
  const __m256d hi_lim = _mm256_set1_pd(709.0);
  const __m256d lo_lim = _mm256_set1_pd(-708.0);
  x = _mm256_max_pd(_mm256_min_pd(x, hi_lim), lo_lim);

  const __m256d log2e = _mm256_set1_pd(1.4426950408889634074);
  const __m256d ln2_hi = _mm256_set1_pd(6.93147180369123816490e-01);
  const __m256d ln2_lo = _mm256_set1_pd(1.90821492927058770002e-10);
  const __m256d n = _mm256_round_pd(_mm256_mul_pd(x, log2e),
                                    _MM_FROUND_TO_NEAREST_INT | _MM_FROUND_NO_EXC);
  __m256d r = _mm256_fnmadd_pd(n, ln2_hi, x);
  r = _mm256_fnmadd_pd(n, ln2_lo, r);

  static constexpr double c[14] = {1.0,
                                   1.0,
                                   1.0 / 2,
                                   1.0 / 6,
                                   1.0 / 24,
                                   1.0 / 120,
                                   1.0 / 720,
                                   1.0 / 5040,
                                   1.0 / 40320,
                                   1.0 / 362880,
                                   1.0 / 3628800,
                                   1.0 / 39916800,
                                   1.0 / 479001600,
                                   1.0 / 6227020800.0};
  __m256d p = _mm256_set1_pd(c[13]);
  for (int k = 12; k >= 0; --k) p = _mm256_fmadd_pd(p, r, _mm256_set1_pd(c[k]));

  const __m128i n32 = _mm256_cvtpd_epi32(n);
  __m256i n64 = _mm256_cvtepi32_epi64(n32);
  n64 = _mm256_add_epi64(n64, _mm256_set1_epi64x(1023));
  const __m256d scale = _mm256_castsi256_pd(_mm256_slli_epi64(n64, 52));
  return _mm256_mul_pd(p, scale);
}

double dot_avx2(const double* a, const double* b, std::size_t n) {
  __m256d acc0 = _mm256_setzero_pd();
  __m256d acc1 = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), acc0);
    acc1 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i + 4), _mm256_loadu_pd(b + i + 4),
                           acc1);
  }
  for (; i + 4 <= n; i += 4)
    acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), acc0);
  double s = hsum(_mm256_add_pd(acc0, acc1));
  for (; i < n; ++i) s += a[i] * b[i];
  return s;
}

void axpy_avx2(double alpha, const double* x, double* y, std::size_t n) {
  const __m256d va = _mm256_set1_pd(alpha);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    _mm256_storeu_pd(y + i, _mm256_fmadd_pd(va, _mm256_loadu_pd(x + i),
                                            _mm256_loadu_pd(y + i)));
  }
  for (; i < n; ++i) y[i] += alpha * x[i];
}

void horner_avx2(const double* coeffs, std::size_t ncoef, const double* x,
                 double* out, std::size_t n) {
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d vx = _mm256_loadu_pd(x + i);
    __m256d acc = _mm256_setzero_pd();
    for (std::size_t k = ncoef; k-- > 0;)
      acc = _mm256_fmadd_pd(acc, vx, _mm256_set1_pd(coeffs[k]));
    _mm256_storeu_pd(out + i, acc);
  }
  for (; i < n; ++i) {
    double acc = 0.0;
    for (std::size_t k = ncoef; k-- > 0;) acc = std::fma(acc, x[i], coeffs[k]);
    out[i] = acc;
  }
}

void periodic_laplacian_avx2(const double* in, double* out, std::size_t n,
                             double scale) {
  if (n < 3) {
    scalar_table().periodic_laplacian(in, out, n, scale);
    return;
  }
  out[0] = scale * (in[n - 1] - 2.0 * in[0] + in[1]);
  const __m256d vs = _mm256_set1_pd(scale);
  const __m256d two = _mm256_set1_pd(2.0);
  std::size_t j = 1;
  for (; j + 4 < n; j += 4) {
    const __m256d l = _mm256_loadu_pd(in + j - 1);
    const __m256d c = _mm256_loadu_pd(in + j);
    const __m256d r = _mm256_loadu_pd(in + j + 1);
    const __m256d s = _mm256_sub_pd(_mm256_add_pd(l, r), _mm256_mul_pd(two, c));
    _mm256_storeu_pd(out + j, _mm256_mul_pd(vs, s));
  }
  for (; j + 1 < n; ++j) out[j] = scale * (in[j - 1] - 2.0 * in[j] + in[j + 1]);
  out[n - 1] = scale * (in[n - 2] - 2.0 * in[n - 1] + in[0]);
}

double gradient_energy_avx2(const double* in, std::size_t n, double inv_2h) {
  if (n < 3) return scalar_table().gradient_energy(in, n, inv_2h);
  double s = 0.0;
  {
    const double g0 = (in[1] - in[n - 1]) * inv_2h;
    const double gl = (in[0] - in[n - 2]) * inv_2h;
    s = g0 * g0 + gl * gl;
  }
  const __m256d vh = _mm256_set1_pd(inv_2h);
  __m256d acc = _mm256_setzero_pd();
  std::size_t j = 1;
  for (; j + 4 < n; j += 4) {
    const __m256d g = _mm256_mul_pd(
        _mm256_sub_pd(_mm256_loadu_pd(in + j + 1), _mm256_loadu_pd(in + j - 1)), vh);
    acc = _mm256_fmadd_pd(g, g, acc);
  }
  s += hsum(acc);
  for (; j + 1 < n; ++j) {
    const double g = (in[j + 1] - in[j - 1]) * inv_2h;
    s += g * g;
  }
  return s;
}

double weighted_gradient_energy_avx2(const double* in, std::size_t n, double inv_2h,
                                     double a) {
  if (n < 3) return scalar_table().weighted_gradient_energy(in, n, inv_2h, a);
  auto edge = [&](std::size_t j, double left, double right) {
    const double g = (right - left) * inv_2h;
    return g * g / ((in[j] + a) * (1.0 - in[j] + a));
  };
  double s = edge(0, in[n - 1], in[1]) + edge(n - 1, in[n - 2], in[0]);
  const __m256d vh = _mm256_set1_pd(inv_2h);
  const __m256d va = _mm256_set1_pd(a);
  const __m256d one_a = _mm256_set1_pd(1.0 + a);
  __m256d acc = _mm256_setzero_pd();
  std::size_t j = 1;
  for (; j + 4 < n; j += 4) {
    const __m256d c = _mm256_loadu_pd(in + j);
    const __m256d g = _mm256_mul_pd(
        _mm256_sub_pd(_mm256_loadu_pd(in + j + 1), _mm256_loadu_pd(in + j - 1)), vh);
    const __m256d mob = _mm256_mul_pd(_mm256_add_pd(c, va), _mm256_sub_pd(one_a, c));
    acc = _mm256_add_pd(acc, _mm256_div_pd(_mm256_mul_pd(g, g), mob));
  }
  s += hsum(acc);
  for (; j + 1 < n; ++j) s += edge(j, in[j - 1], in[j + 1]);
  return s;
}

void exp_pm_avx2(const double* g, double* ep, double* em, std::size_t n) {
  std::size_t i = 0;
  const __m256d zero = _mm256_setzero_pd();
  for (; i + 4 <= n; i += 4) {
    const __m256d x = _mm256_loadu_pd(g + i);
    _mm256_storeu_pd(ep + i, exp256(x));
    _mm256_storeu_pd(em + i, exp256(_mm256_sub_pd(zero, x)));
  }
  for (; i < n; ++i) {
    ep[i] = std::exp(g[i]);
    em[i] = std::exp(-g[i]);
  }
}

double reaction_cost_avx2(const double* B, const double* D, const double* G,
                          double* dG, std::size_t n) {
  const __m256d one = _mm256_set1_pd(1.0);
  const __m256d zero = _mm256_setzero_pd();
  __m256d acc = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d x = _mm256_loadu_pd(G + i);
    const __m256d ep = exp256(x);
    const __m256d em = exp256(_mm256_sub_pd(zero, x));
    const __m256d b = _mm256_loadu_pd(B + i);
    const __m256d d = _mm256_loadu_pd(D + i);
    acc = _mm256_fmadd_pd(b, _mm256_sub_pd(ep, one), acc);
    acc = _mm256_fmadd_pd(d, _mm256_sub_pd(em, one), acc);
    _mm256_storeu_pd(dG + i, _mm256_fmsub_pd(b, ep, _mm256_mul_pd(d, em)));
  }
  double s = hsum(acc);
  for (; i < n; ++i) {
    const double ep = std::exp(G[i]);
    const double em = std::exp(-G[i]);
    s += B[i] * (ep - 1.0) + D[i] * (em - 1.0);
    dG[i] = B[i] * ep - D[i] * em;
  }
  return s;
}

}  // namespace

const KernelTable& avx2_table() {
  static const KernelTable t{Isa::avx2,
                             dot_avx2,
                             axpy_avx2,
                             horner_avx2,
                             periodic_laplacian_avx2,
                             gradient_energy_avx2,
                             weighted_gradient_energy_avx2,
                             exp_pm_avx2,
                             reaction_cost_avx2};
  return t;
}

}  // namespace gk::simd::detail
