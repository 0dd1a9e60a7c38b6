#pragma once

#include <span>
#include <vector>

namespace gk {

/// Solve the periodic tridiagonal system
///   lower[j] x[j-1] + diag[j] x[j] + upper[j] x[j+1] = rhs[j]  (indices mod n)
/// by the Thomas algorithm with a Sherman-Morrison correction for the corner
/// entries. Intended for diagonally dominant or SPD systems; n >= 3.
std::vector<double> solve_cyclic_tridiagonal(std::span<const double> lower,
                                             std::span<const double> diag,
                                             std::span<const double> upper,
                                             std::span<const double> rhs);

/// Solve (I - a * L) x = rhs where L is the periodic second-difference matrix
/// (L x)_j = x_{j-1} - 2 x_j + x_{j+1}; a >= 0. Conserves sum(x) = sum(rhs).
/// The factorization is cached for repeated solves with the same (n, a).
class ImplicitDiffusion {
 public:
  ImplicitDiffusion(std::size_t n, double a);
  void solve(std::span<double> x) const;  // in place
  [[nodiscard]] std::size_t size() const { return n_; }
  [[nodiscard]] double coefficient() const { return a_; }

 private:
  std::size_t n_;
  double a_;
  // Thomas factors for the modified (non-periodic) system and the
  // Sherman-Morrison vector.
  std::vector<double> cprime_, denom_, z_;
  double gamma_ = 0.0, corner_ = 0.0, zfactor_ = 0.0;
};

}  // namespace gk
