#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "gklab/polynomial.hpp"

namespace gk {

/// Flip rate c(eta(x-M), ..., eta(x+M)) as a lookup table over the 2^{2M+1}
/// local windows. Bit i of a window index holds the occupation at offset i - M,
/// so the window string "010" (offsets -1, 0, +1) has index 2.
class CylinderRate {
 public:
  CylinderRate(int half_width, std::vector<double> table);

  static CylinderRate constant(double kappa, int half_width = 0);
  /// Keys are binary window strings of equal odd length; every window must be
  /// present exactly once.
  static CylinderRate from_windows(const std::map<std::string, double>& windows);

  [[nodiscard]] int half_width() const { return half_width_; }
  [[nodiscard]] int window_size() const { return 2 * half_width_ + 1; }
  [[nodiscard]] double rate(std::uint32_t window) const { return table_[window]; }
  [[nodiscard]] const std::vector<double>& table() const { return table_; }
  [[nodiscard]] double max_rate() const;

  [[nodiscard]] std::string window_string(std::uint32_t window) const;

 private:
  int half_width_;
  std::vector<double> table_;
};

/// Birth and death polynomials B, D of the macroscopic reaction term.
struct ReactionPolynomials {
  Polynomial birth;
  Polynomial death;
};

struct ReactionValues {
  double birth;
  double death;
  double reaction;
  double mobility;
};

/// Exact B(rho) = E_{nu_rho}[(1 - eta(0)) c] and D(rho) = E_{nu_rho}[eta(0) c]
/// by summing every window weighted by rho^{#1}(1 - rho)^{#0}.
ReactionPolynomials enumerate_reaction_polynomials(const CylinderRate& c);

/// Throws DomainError unless B(1) = 0, D(0) = 0 and B, D >= 0 on [0,1].
void validate(const ReactionPolynomials& p);

/// A cylinder rate whose reaction polynomials are exactly `p`, built from the
/// Bernstein coefficients of B~ and D~: an empty site with k occupied sites
/// among its first d neighbours is born at rate beta_k, an occupied one dies
/// at rate delta_k. Returns nullopt if no degree <= max_degree makes every
/// coefficient strictly positive.
std::optional<CylinderRate> realize_cylinder_rate(const ReactionPolynomials& p,
                                                  std::size_t max_degree = 16);

class RateModel {
 public:
  static RateModel from_cylinder(CylinderRate c, std::string name);
  static RateModel from_polynomials(ReactionPolynomials p, std::string name);

  [[nodiscard]] const std::string& name() const { return name_; }
  [[nodiscard]] const ReactionPolynomials& polynomials() const { return poly_; }
  [[nodiscard]] const Polynomial& birth() const { return poly_.birth; }
  [[nodiscard]] const Polynomial& death() const { return poly_.death; }
  [[nodiscard]] const Polynomial& reaction() const { return reaction_; }
  [[nodiscard]] const Polynomial& birth_factor() const { return birth_factor_; }
  [[nodiscard]] const Polynomial& death_factor() const { return death_factor_; }

  [[nodiscard]] bool concave() const { return concave_; }
  /// True when the model was specified by polynomials, not by a flip rate.
  [[nodiscard]] bool polynomial_source() const { return polynomial_source_; }
  [[nodiscard]] bool simulable() const { return cylinder_.has_value(); }
  /// The flip rate used by the particle simulator. Throws DomainError for
  /// polynomial models without a strictly positive realization.
  [[nodiscard]] const CylinderRate& cylinder() const;

  [[nodiscard]] double B(double r) const { return poly_.birth(r); }
  [[nodiscard]] double D(double r) const { return poly_.death(r); }
  [[nodiscard]] double F(double r) const { return reaction_(r); }
  [[nodiscard]] double dF(double r) const { return reaction_slope_(r); }

  /// Grid evaluation of B and D, no range checks.
  void birth_death(std::span<const double> rho, std::span<double> b,
                   std::span<double> d) const;

  /// max over [0,1] of |B'| and |D'|, from a 1001-point grid.
  [[nodiscard]] double max_birth_slope() const { return max_birth_slope_; }
  [[nodiscard]] double max_death_slope() const { return max_death_slope_; }
  [[nodiscard]] double max_reaction_slope() const { return max_reaction_slope_; }

  /// Stable 64-bit FNV-1a hash of the canonical description, hex encoded.
  [[nodiscard]] std::string hash() const;
  [[nodiscard]] std::string describe() const;

 private:
  RateModel() = default;
  void finish();

  std::string name_;
  ReactionPolynomials poly_;
  Polynomial reaction_, reaction_slope_, birth_factor_, death_factor_;
  std::optional<CylinderRate> cylinder_;
  bool polynomial_source_ = false;
  bool concave_ = false;
  double max_birth_slope_ = 0.0;
  double max_death_slope_ = 0.0;
  double max_reaction_slope_ = 0.0;
};

/// B, D, F = B - D and chi = r(1 - r) at one density. Throws DomainError
/// outside [0,1].
ReactionValues eval_reaction(const RateModel& m, double r);

/// F(rho) = a(2 rho - 1) - b(2 rho - 1)^3 split as B = (1 - rho)(4 b rho^2 + b - a),
/// D(rho) = B(1 - rho). Requires 0 < a <= b.
RateModel make_double_well(double a, double b);

/// c == kappa: B = kappa (1 - rho), D = kappa rho.
RateModel make_constant(double kappa = 1.0);

/// c(w) = 1 + beta w(-1) w(+1) with M = 1.
RateModel make_pair_interaction(double beta = 2.0);

/// B = D = rho (1 - rho), so F == 0. Polynomial only (not simulable).
RateModel make_neutral();

}  // namespace gk
