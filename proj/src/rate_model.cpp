#include "gklab/rate_model.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <sstream>

#include "gklab/errors.hpp"
#include "gklab/hash.hpp"

namespace gk {

namespace {

constexpr int kMaxHalfWidth = 8;
constexpr std::size_t kGrid = 1001;

double grid_point(std::size_t i) { return static_cast<double>(i) / (kGrid - 1); }

double scale_of(const Polynomial& p) {
  double s = 1.0;
  for (double c : p.coefficients()) s = std::max(s, std::abs(c));
  return s;
}

}  // namespace

// ---------------------------------------------------------------- CylinderRate

CylinderRate::CylinderRate(int half_width, std::vector<double> table)
    : half_width_(half_width), table_(std::move(table)) {
  if (half_width < 0 || half_width > kMaxHalfWidth)
    throw DomainError("cylinder rate: half width must lie in [0, " +
                      std::to_string(kMaxHalfWidth) + "]");
  const std::size_t expected = std::size_t{1} << (2 * half_width + 1);
  if (table_.size() != expected)
    throw DomainError("cylinder rate: table has " + std::to_string(table_.size()) +
                      " entries, expected " + std::to_string(expected));
  for (std::size_t w = 0; w < table_.size(); ++w)
    if (!std::isfinite(table_[w]) || table_[w] <= 0.0)
      throw DomainError("cylinder rate: rate for window " +
                        window_string(static_cast<std::uint32_t>(w)) +
                        " must be finite and strictly positive");
}

CylinderRate CylinderRate::constant(double kappa, int half_width) {
  const std::size_t n = std::size_t{1} << (2 * std::max(half_width, 0) + 1);
  return CylinderRate(half_width, std::vector<double>(n, kappa));
}

CylinderRate CylinderRate::from_windows(const std::map<std::string, double>& windows) {
  if (windows.empty()) throw DomainError("cylinder rate: empty window table");
  const std::size_t len = windows.begin()->first.size();
  if (len % 2 == 0) throw DomainError("cylinder rate: window length must be odd");
  const int m = static_cast<int>(len / 2);
  if (m > kMaxHalfWidth) throw DomainError("cylinder rate: window too wide");
  const std::size_t n = std::size_t{1} << len;
  std::vector<double> table(n, 0.0);
  std::vector<bool> seen(n, false);
  for (const auto& [key, rate] : windows) {
    if (key.size() != len)
      throw DomainError("cylinder rate: window '" + key + "' has the wrong length");
    std::uint32_t idx = 0;
    for (std::size_t i = 0; i < len; ++i) {
      if (key[i] == '1')
        idx |= 1u << i;
      else if (key[i] != '0')
        throw DomainError("cylinder rate: window '" + key + "' is not a binary string");
    }
    if (seen[idx]) throw DomainError("cylinder rate: duplicate window '" + key + "'");
    seen[idx] = true;
    table[idx] = rate;
  }
  for (std::size_t w = 0; w < n; ++w)
    if (!seen[w]) {
      std::string s(len, '0');
      for (std::size_t i = 0; i < len; ++i)
        if (w >> i & 1u) s[i] = '1';
      throw DomainError("cylinder rate: missing window '" + s + "'");
    }
  return CylinderRate(m, std::move(table));
}

double CylinderRate::max_rate() const {
  return *std::max_element(table_.begin(), table_.end());
}

std::string CylinderRate::window_string(std::uint32_t window) const {
  std::string s(static_cast<std::size_t>(window_size()), '0');
  for (int i = 0; i < window_size(); ++i)
    if (window >> i & 1u) s[static_cast<std::size_t>(i)] = '1';
  return s;
}

// ------------------------------------------------------------ reaction terms

ReactionPolynomials enumerate_reaction_polynomials(const CylinderRate& c) {
  const int n = c.window_size();
  const int m = c.half_width();
  std::vector<double> birth(static_cast<std::size_t>(n) + 1, 0.0);
  std::vector<double> death(static_cast<std::size_t>(n) + 1, 0.0);
  // rho^j (1 - rho)^{n - j} expanded: sum_i C(n-j, i) (-1)^i rho^{j+i}.
  for (std::uint32_t w = 0; w < (1u << n); ++w) {
    const int ones = std::popcount(w);
    const bool center = (w >> m) & 1u;
    auto& target = center ? death : birth;
    const double r = c.rate(w);
    for (int i = 0; i <= n - ones; ++i) {
      const double sign = (i % 2 == 0) ? 1.0 : -1.0;
      target[static_cast<std::size_t>(ones + i)] +=
          r * sign * binomial(static_cast<std::size_t>(n - ones), static_cast<std::size_t>(i));
    }
  }
  ReactionPolynomials p{Polynomial(std::move(birth)), Polynomial(std::move(death))};
  p.birth.trim(1e-12 * scale_of(p.birth));
  p.death.trim(1e-12 * scale_of(p.death));
  return p;
}

void validate(const ReactionPolynomials& p) {
  const double sb = scale_of(p.birth);
  const double sd = scale_of(p.death);
  if (std::abs(p.birth(1.0)) > 1e-10 * sb)
    throw DomainError("reaction polynomials: B(1) must vanish");
  if (std::abs(p.death(0.0)) > 1e-10 * sd)
    throw DomainError("reaction polynomials: D(0) must vanish");
  for (std::size_t i = 0; i < kGrid; ++i) {
    const double r = grid_point(i);
    if (p.birth(r) < -1e-10 * sb)
      throw DomainError("reaction polynomials: B is negative at rho = " + exact(r));
    if (p.death(r) < -1e-10 * sd)
      throw DomainError("reaction polynomials: D is negative at rho = " + exact(r));
  }
}

namespace {

// B = (1 - rho) B~  and  D = rho D~.
Polynomial birth_factor_of(const Polynomial& birth) {
  auto div = birth.divide_linear(1.0);
  Polynomial q = div.quotient * -1.0;
  q.trim();
  return q;
}

Polynomial death_factor_of(const Polynomial& death) {
  auto div = death.divide_linear(0.0);
  Polynomial q = div.quotient;
  q.trim();
  return q;
}

}  // namespace

std::optional<CylinderRate> realize_cylinder_rate(const ReactionPolynomials& p,
                                                  std::size_t max_degree) {
  const Polynomial bt = birth_factor_of(p.birth);
  const Polynomial dt = death_factor_of(p.death);
  const std::size_t d0 = std::max(bt.degree(), dt.degree());
  for (std::size_t d = d0; d <= max_degree; ++d) {
    const auto beta = bernstein_coefficients(bt, d);
    const auto delta = bernstein_coefficients(dt, d);
    const double scale = std::max(*std::max_element(beta.begin(), beta.end()),
                                  *std::max_element(delta.begin(), delta.end()));
    auto positive = [&](const std::vector<double>& v) {
      return std::all_of(v.begin(), v.end(), [&](double x) { return x > 1e-12 * scale; });
    };
    if (!positive(beta) || !positive(delta)) continue;
    const int m = static_cast<int>((d + 1) / 2);
    if (m > kMaxHalfWidth) return std::nullopt;
    // Neighbour offsets -1, +1, -2, +2, ...; the first d are counted.
    std::vector<int> bits;
    for (int j = 1; j <= m; ++j) {
      bits.push_back(m - j);
      bits.push_back(m + j);
    }
    bits.resize(d);
    const std::uint32_t n = 1u << (2 * m + 1);
    std::vector<double> table(n);
    for (std::uint32_t w = 0; w < n; ++w) {
      std::size_t k = 0;
      for (int b : bits) k += (w >> b) & 1u;
      table[w] = ((w >> m) & 1u) ? delta[k] : beta[k];
    }
    return CylinderRate(m, std::move(table));
  }
  return std::nullopt;
}

// ------------------------------------------------------------------ RateModel

RateModel RateModel::from_cylinder(CylinderRate c, std::string name) {
  RateModel m;
  m.name_ = std::move(name);
  m.poly_ = enumerate_reaction_polynomials(c);
  m.cylinder_ = std::move(c);
  m.polynomial_source_ = false;
  m.finish();
  return m;
}

RateModel RateModel::from_polynomials(ReactionPolynomials p, std::string name) {
  validate(p);
  RateModel m;
  m.name_ = std::move(name);
  m.poly_ = std::move(p);
  m.cylinder_ = realize_cylinder_rate(m.poly_);
  m.polynomial_source_ = true;
  m.finish();
  return m;
}

void RateModel::finish() {
  reaction_ = poly_.birth - poly_.death;
  reaction_slope_ = reaction_.derivative();
  birth_factor_ = birth_factor_of(poly_.birth);
  death_factor_ = death_factor_of(poly_.death);
  const Polynomial db = poly_.birth.derivative();
  const Polynomial dd = poly_.death.derivative();
  max_birth_slope_ = max_death_slope_ = max_reaction_slope_ = 0.0;
  for (std::size_t i = 0; i < kGrid; ++i) {
    const double r = grid_point(i);
    max_birth_slope_ = std::max(max_birth_slope_, std::abs(db(r)));
    max_death_slope_ = std::max(max_death_slope_, std::abs(dd(r)));
    max_reaction_slope_ = std::max(max_reaction_slope_, std::abs(reaction_slope_(r)));
  }
  concave_ = true;
  for (std::size_t i = 1; i + 1 < kGrid; ++i) {
    const double a = grid_point(i - 1), b = grid_point(i), c = grid_point(i + 1);
    const double sb = poly_.birth(a) - 2.0 * poly_.birth(b) + poly_.birth(c);
    const double sd = poly_.death(a) - 2.0 * poly_.death(b) + poly_.death(c);
    if (sb > 1e-9 || sd > 1e-9) {
      concave_ = false;
      break;
    }
  }
}

const CylinderRate& RateModel::cylinder() const {
  if (!cylinder_)
    throw DomainError("model '" + name_ +
                      "' has no strictly positive flip rate and cannot be simulated");
  return *cylinder_;
}

void RateModel::birth_death(std::span<const double> rho, std::span<double> b,
                            std::span<double> d) const {
  poly_.birth.evaluate(rho, b);
  poly_.death.evaluate(rho, d);
}

std::string RateModel::describe() const {
  std::ostringstream os;
  os << "name=" << name_ << ";source=" << (polynomial_source_ ? "polynomial" : "cylinder");
  os << ";B=";
  for (double c : poly_.birth.coefficients()) os << exact(c) << ',';
  os << ";D=";
  for (double c : poly_.death.coefficients()) os << exact(c) << ',';
  if (cylinder_) {
    os << ";M=" << cylinder_->half_width() << ";c=";
    for (double c : cylinder_->table()) os << exact(c) << ',';
  }
  return os.str();
}

std::string RateModel::hash() const { return hex64(fnv1a64(describe())); }

ReactionValues eval_reaction(const RateModel& m, double r) {
  if (!(r >= 0.0 && r <= 1.0))
    throw DomainError("eval_reaction: density " + exact(r) + " outside [0, 1]");
  const double b = m.B(r), d = m.D(r);
  return {b, d, b - d, r * (1.0 - r)};
}

// -------------------------------------------------------------------- presets

RateModel make_double_well(double a, double b) {
  if (!(a > 0.0)) throw DomainError("double well: a must be positive");
  if (!(b >= a)) throw DomainError("double well: requires a <= b");
  if (!std::isfinite(a) || !std::isfinite(b))
    throw DomainError("double well: parameters must be finite");
  // B~(rho) = 4 b rho^2 + b - a, B = (1 - rho) B~, D(rho) = B(1 - rho).
  const Polynomial bt{b - a, 0.0, 4.0 * b};
  const Polynomial one_minus{1.0, -1.0};
  const Polynomial birth = one_minus * bt;
  // D(rho) = rho (4 b (1 - rho)^2 + b - a)
  const Polynomial dt = Polynomial::binomial_power(1.0, -1.0, 2) * (4.0 * b) +
                        Polynomial{b - a};
  const Polynomial death = Polynomial{0.0, 1.0} * dt;
  return RateModel::from_polynomials({birth, death},
                                     "double-well(a=" + exact(a) + ",b=" + exact(b) + ")");
}

RateModel make_constant(double kappa) {
  if (!(kappa > 0.0) || !std::isfinite(kappa))
    throw DomainError("constant rate: kappa must be positive");
  return RateModel::from_cylinder(CylinderRate::constant(kappa), "constant(" + exact(kappa) + ")");
}

RateModel make_pair_interaction(double beta) {
  if (!(beta > -1.0) || !std::isfinite(beta))
    throw DomainError("pair interaction: beta must exceed -1");
  std::vector<double> table(8);
  for (std::uint32_t w = 0; w < 8; ++w) {
    const double left = w & 1u, right = (w >> 2) & 1u;
    table[w] = 1.0 + beta * left * right;
  }
  return RateModel::from_cylinder(CylinderRate(1, std::move(table)),
                                  "pair(" + exact(beta) + ")");
}

RateModel make_neutral() {
  const Polynomial p{0.0, 1.0, -1.0};
  return RateModel::from_polynomials({p, p}, "neutral");
}

}  // namespace gk
