#include "gklab/polynomial.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "gklab/simd/kernels.hpp"

namespace gk {

Polynomial::Polynomial(std::initializer_list<double> coeffs) : c_(coeffs) {}

Polynomial::Polynomial(std::vector<double> coeffs) : c_(std::move(coeffs)) {}

Polynomial Polynomial::binomial_power(double a, double b, std::size_t n) {
  std::vector<double> c(n + 1);
  for (std::size_t k = 0; k <= n; ++k)
    c[k] = binomial(n, k) * std::pow(a, static_cast<double>(n - k)) *
           std::pow(b, static_cast<double>(k));
  return Polynomial(std::move(c));
}

double Polynomial::operator()(double x) const {
  double acc = 0.0;
  for (std::size_t k = c_.size(); k-- > 0;) acc = acc * x + c_[k];
  return acc;
}

void Polynomial::evaluate(std::span<const double> xs, std::span<double> out) const {
  if (out.size() < xs.size()) throw std::invalid_argument("evaluate: output too small");
  simd::active().horner(c_.data(), c_.size(), xs.data(), out.data(), xs.size());
}

std::size_t Polynomial::degree() const {
  std::size_t d = c_.size();
  while (d > 1 && c_[d - 1] == 0.0) --d;
  return d == 0 ? 0 : d - 1;
}

Polynomial Polynomial::derivative() const {
  if (c_.size() <= 1) return Polynomial{0.0};
  std::vector<double> d(c_.size() - 1);
  for (std::size_t k = 1; k < c_.size(); ++k) d[k - 1] = static_cast<double>(k) * c_[k];
  return Polynomial(std::move(d));
}

Polynomial& Polynomial::operator+=(const Polynomial& o) {
  if (o.c_.size() > c_.size()) c_.resize(o.c_.size(), 0.0);
  for (std::size_t k = 0; k < o.c_.size(); ++k) c_[k] += o.c_[k];
  return *this;
}

Polynomial& Polynomial::operator-=(const Polynomial& o) {
  if (o.c_.size() > c_.size()) c_.resize(o.c_.size(), 0.0);
  for (std::size_t k = 0; k < o.c_.size(); ++k) c_[k] -= o.c_[k];
  return *this;
}

Polynomial& Polynomial::operator*=(double s) {
  for (double& v : c_) v *= s;
  return *this;
}

Polynomial operator*(const Polynomial& a, const Polynomial& b) {
  if (a.c_.empty() || b.c_.empty()) return Polynomial{0.0};
  std::vector<double> c(a.c_.size() + b.c_.size() - 1, 0.0);
  for (std::size_t i = 0; i < a.c_.size(); ++i)
    for (std::size_t j = 0; j < b.c_.size(); ++j) c[i + j] += a.c_[i] * b.c_[j];
  return Polynomial(std::move(c));
}

Polynomial::Division Polynomial::divide_linear(double root) const {
  if (c_.size() <= 1) return {Polynomial{0.0}, c_.empty() ? 0.0 : c_[0]};
  const std::size_t n = c_.size() - 1;
  std::vector<double> q(n);
  double carry = c_[n];
  for (std::size_t k = n; k-- > 0;) {
    q[k] = carry;
    carry = c_[k] + carry * root;
  }
  return {Polynomial(std::move(q)), carry};
}

void Polynomial::trim(double tol) {
  while (c_.size() > 1 && std::abs(c_.back()) <= tol) c_.pop_back();
}

double binomial(std::size_t n, std::size_t k) {
  if (k > n) return 0.0;
  k = std::min(k, n - k);
  double r = 1.0;
  for (std::size_t i = 1; i <= k; ++i)
    r = r * static_cast<double>(n - k + i) / static_cast<double>(i);
  return std::round(r);
}

std::vector<double> roots_in_interval(const Polynomial& p, double lo, double hi,
                                      std::size_t intervals, double zero_tol) {
  std::vector<double> roots;
  if (intervals == 0) intervals = 1;
  const double step = (hi - lo) / static_cast<double>(intervals);
  auto x_at = [&](std::size_t i) {
    return i == intervals ? hi : lo + step * static_cast<double>(i);
  };
  double x0 = x_at(0);
  double f0 = p(x0);
  if (std::abs(f0) <= zero_tol) roots.push_back(x0);
  for (std::size_t i = 1; i <= intervals; ++i) {
    const double x1 = x_at(i);
    const double f1 = p(x1);
    if (std::abs(f1) <= zero_tol) {
      roots.push_back(x1);
    } else if (std::abs(f0) > zero_tol && (f0 < 0.0) != (f1 < 0.0)) {
      double a = x0, b = x1, fa = f0;
      for (int it = 0; it < 200 && b - a > 1e-15 * std::max(1.0, std::abs(a)); ++it) {
        const double m = 0.5 * (a + b);
        const double fm = p(m);
        if (fm == 0.0) {
          a = b = m;
          break;
        }
        if ((fm < 0.0) == (fa < 0.0)) {
          a = m;
          fa = fm;
        } else {
          b = m;
        }
      }
      roots.push_back(0.5 * (a + b));
    }
    x0 = x1;
    f0 = f1;
  }
  std::sort(roots.begin(), roots.end());
  std::vector<double> out;
  for (double r : roots)
    if (out.empty() || r - out.back() > 1e-9) out.push_back(r);
  return out;
}

std::vector<double> bernstein_coefficients(const Polynomial& p, std::size_t degree) {
  const auto& a = p.coefficients();
  if (p.degree() > degree) throw std::invalid_argument("bernstein degree too low");
  std::vector<double> beta(degree + 1, 0.0);
  for (std::size_t i = 0; i <= degree; ++i) {
    double s = 0.0;
    for (std::size_t k = 0; k <= i && k < a.size(); ++k)
      s += a[k] * binomial(i, k) / binomial(degree, k);
    beta[i] = s;
  }
  return beta;
}

}  // namespace gk
