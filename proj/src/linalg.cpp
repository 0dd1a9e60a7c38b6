#include "gklab/linalg.hpp"

#include <cmath>
#include <string>

#include "gklab/errors.hpp"

namespace gk {

namespace {

// Thomas algorithm for a non-periodic tridiagonal system; a[0] and c[n-1]
// are ignored.
std::vector<double> thomas(std::span<const double> a, std::span<const double> b,
                           std::span<const double> c, std::span<const double> d) {
  const std::size_t n = b.size();
  std::vector<double> cp(n), dp(n), x(n);
  double m = b[0];
  if (m == 0.0) throw NumericalError("tridiagonal solve: zero pivot");
  cp[0] = c[0] / m;
  dp[0] = d[0] / m;
  for (std::size_t i = 1; i < n; ++i) {
    m = b[i] - a[i] * cp[i - 1];
    if (m == 0.0 || !std::isfinite(m)) throw NumericalError("tridiagonal solve: zero pivot");
    cp[i] = c[i] / m;
    dp[i] = (d[i] - a[i] * dp[i - 1]) / m;
  }
  x[n - 1] = dp[n - 1];
  for (std::size_t i = n - 1; i-- > 0;) x[i] = dp[i] - cp[i] * x[i + 1];
  return x;
}

}  // namespace

std::vector<double> solve_cyclic_tridiagonal(std::span<const double> lower,
                                             std::span<const double> diag,
                                             std::span<const double> upper,
                                             std::span<const double> rhs) {
  const std::size_t n = diag.size();
  if (n < 3 || lower.size() != n || upper.size() != n || rhs.size() != n)
    throw DomainError("cyclic tridiagonal solve: need n >= 3 and matching sizes");
  // A = T + u v^T with u = (gamma, 0, ..., 0, lower[0])... standard form:
  // alpha = A(n-1, 0) = upper[n-1], beta = A(0, n-1) = lower[0].
  const double alpha = upper[n - 1], beta = lower[0];
  const double gamma = -diag[0];
  std::vector<double> b(diag.begin(), diag.end());
  b[0] = diag[0] - gamma;
  b[n - 1] = diag[n - 1] - alpha * beta / gamma;
  const auto x = thomas(lower, b, upper, rhs);
  std::vector<double> u(n, 0.0);
  u[0] = gamma;
  u[n - 1] = alpha;
  const auto z = thomas(lower, b, upper, u);
  const double fact = (x[0] + beta * x[n - 1] / gamma) / (1.0 + z[0] + beta * z[n - 1] / gamma);
  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i) out[i] = x[i] - fact * z[i];
  return out;
}

ImplicitDiffusion::ImplicitDiffusion(std::size_t n, double a) : n_(n), a_(a) {
  if (n < 3) throw DomainError("implicit diffusion needs at least 3 cells");
  if (!(a >= 0.0)) throw DomainError("implicit diffusion coefficient must be nonnegative");
  // Matrix: diag 1 + 2a, off-diagonals -a, corners -a.
  const double diag = 1.0 + 2.0 * a, off = -a;
  gamma_ = -diag;
  corner_ = off;
  std::vector<double> b(n, diag);
  b[0] = diag - gamma_;
  b[n - 1] = diag - off * off / gamma_;
  cprime_.resize(n);
  denom_.resize(n);
  double m = b[0];
  denom_[0] = m;
  cprime_[0] = off / m;
  for (std::size_t i = 1; i < n; ++i) {
    m = b[i] - off * cprime_[i - 1];
    denom_[i] = m;
    cprime_[i] = off / m;
  }
  // z solves T z = u with u = (gamma, 0, ..., 0, off).
  z_.assign(n, 0.0);
  std::vector<double> dp(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double rhs = i == 0 ? gamma_ : (i == n - 1 ? off : 0.0);
    dp[i] = (rhs - (i ? off * dp[i - 1] : 0.0)) / denom_[i];
  }
  z_[n - 1] = dp[n - 1];
  for (std::size_t i = n - 1; i-- > 0;) z_[i] = dp[i] - cprime_[i] * z_[i + 1];
  zfactor_ = 1.0 + z_[0] + off * z_[n - 1] / gamma_;
}

void ImplicitDiffusion::solve(std::span<double> x) const {
  if (x.size() != n_) throw DomainError("implicit diffusion: size mismatch");
  const double off = corner_;
  x[0] /= denom_[0];
  for (std::size_t i = 1; i < n_; ++i) x[i] = (x[i] - off * x[i - 1]) / denom_[i];
  for (std::size_t i = n_ - 1; i-- > 0;) x[i] -= cprime_[i] * x[i + 1];
  const double fact = (x[0] + off * x[n_ - 1] / gamma_) / zfactor_;
  for (std::size_t i = 0; i < n_; ++i) x[i] -= fact * z_[i];
}

}  // namespace gk
