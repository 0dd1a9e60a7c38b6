#pragma once

#include <cstddef>
#include <initializer_list>
#include <span>
#include <vector>

namespace gk {

/// Dense polynomial in the monomial basis, coefficients ordered low to high.
class Polynomial {
 public:
  Polynomial() = default;
  Polynomial(std::initializer_list<double> coeffs);
  explicit Polynomial(std::vector<double> coeffs);

  static Polynomial constant(double c) { return Polynomial{c}; }
  /// (a + b x)^n expanded.
  static Polynomial binomial_power(double a, double b, std::size_t n);

  double operator()(double x) const;
  /// Evaluate at every point of xs into out (SIMD kernel).
  void evaluate(std::span<const double> xs, std::span<double> out) const;

  [[nodiscard]] std::size_t degree() const;
  [[nodiscard]] const std::vector<double>& coefficients() const { return c_; }
  [[nodiscard]] double coefficient(std::size_t k) const {
    return k < c_.size() ? c_[k] : 0.0;
  }

  [[nodiscard]] Polynomial derivative() const;

  Polynomial& operator+=(const Polynomial& o);
  Polynomial& operator-=(const Polynomial& o);
  Polynomial& operator*=(double s);
  friend Polynomial operator+(Polynomial a, const Polynomial& b) { return a += b; }
  friend Polynomial operator-(Polynomial a, const Polynomial& b) { return a -= b; }
  friend Polynomial operator*(Polynomial a, double s) { return a *= s; }
  friend Polynomial operator*(double s, Polynomial a) { return a *= s; }
  friend Polynomial operator*(const Polynomial& a, const Polynomial& b);

  struct Division;
  /// Synthetic division by (x - root).
  [[nodiscard]] Division divide_linear(double root) const;

  /// Drop trailing coefficients with |c| <= tol.
  void trim(double tol = 0.0);

 private:
  std::vector<double> c_;
};

struct Polynomial::Division {
  Polynomial quotient;
  double remainder;
};

/// Real roots of p in [lo, hi] found by a sign-change sweep over `intervals`
/// equal subintervals followed by bisection; grid points with |p| <= zero_tol
/// are reported as roots too. Sorted, deduplicated within 1e-9.
std::vector<double> roots_in_interval(const Polynomial& p, double lo, double hi,
                                      std::size_t intervals = 1000,
                                      double zero_tol = 1e-13);

/// Bernstein coefficients of p on [0,1] at the given degree (>= p.degree()).
std::vector<double> bernstein_coefficients(const Polynomial& p, std::size_t degree);

double binomial(std::size_t n, std::size_t k);

}  // namespace gk
