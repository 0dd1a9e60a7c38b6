#include "gklab/functionals.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include <Eigen/Dense>

#include "gklab/errors.hpp"
#include "gklab/linalg.hpp"
#include "gklab/simd/kernels.hpp"

namespace gk {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

std::vector<double> trapezoid_weights(std::size_t frames, double dt) {
  std::vector<double> w(frames, dt);
  if (frames == 1) {
    w[0] = 0.0;
  } else {
    w.front() *= 0.5;
    w.back() *= 0.5;
  }
  return w;
}

void require_grid(const Trajectory& pi, const char* what, std::size_t min_frames) {
  if (pi.frames.size() < min_frames)
    throw DomainError(std::string(what) + ": trajectory needs at least " +
                      std::to_string(min_frames) + " frames");
  if (pi.cells() < 3) throw DomainError(std::string(what) + ": need at least 3 cells");
  pi.require_uniform(what);
}

/// (1/2)(Delta_h rho)_j
void half_laplacian(std::span<const double> rho, std::span<double> out) {
  const double J = static_cast<double>(rho.size());
  simd::active().periodic_laplacian(rho.data(), out.data(), rho.size(), 0.5 * J * J);
}

}  // namespace

// ---------------------------------------------------------------- TestFunction

TestFunction::TestFunction(double horizon, BasisSize basis)
    : horizon_(horizon), basis_(basis), theta_(0) {
  if (!(horizon > 0.0)) throw DomainError("test function: horizon must be positive");
  if (basis.temporal == 0) throw DomainError("test function: K_t must be at least 1");
  theta_.assign(size(), 0.0);
}

double TestFunction::psi(std::size_t s, double u, int derivative) const {
  if (s == 0) return derivative == 0 ? 1.0 : 0.0;
  const double k = static_cast<double>((s + 1) / 2);
  const double w = kTwoPi * k;
  const bool cosine = (s % 2) == 1;
  const double c = std::cos(w * u), sn = std::sin(w * u);
  switch (derivative) {
    case 0: return cosine ? c : sn;
    case 1: return cosine ? -w * sn : w * c;
    default: return cosine ? -w * w * c : -w * w * sn;
  }
}

TestFunction::HatWeights TestFunction::hats(double t) const {
  const double h = horizon_ / static_cast<double>(basis_.temporal);
  const double x = std::clamp(t, 0.0, horizon_) / h;
  std::size_t i = static_cast<std::size_t>(std::floor(x));
  if (i >= basis_.temporal) i = basis_.temporal - 1;
  const double f = x - static_cast<double>(i);
  return {i, 1.0 - f, f, -1.0 / h, 1.0 / h};
}

namespace {
double combine(const TestFunction& G, double t, double u, int derivative, bool time_derivative) {
  const auto hw = G.hats(t);
  const auto& th = G.coefficients();
  double s0 = 0.0, s1 = 0.0;
  for (std::size_t s = 0; s < G.spatial_size(); ++s) {
    const double p = G.psi(s, u, derivative);
    s0 += th[G.index(hw.node, s)] * p;
    s1 += th[G.index(hw.node + 1, s)] * p;
  }
  return time_derivative ? hw.d0 * s0 + hw.d1 * s1 : hw.w0 * s0 + hw.w1 * s1;
}
}  // namespace

double TestFunction::value(double t, double u) const { return combine(*this, t, u, 0, false); }
double TestFunction::time_derivative(double t, double u) const {
  return combine(*this, t, u, 0, true);
}
double TestFunction::gradient(double t, double u) const { return combine(*this, t, u, 1, false); }
double TestFunction::laplacian(double t, double u) const { return combine(*this, t, u, 2, false); }

void TestFunction::evaluate(double t, std::span<double> out) const {
  const std::size_t J = out.size();
  for (std::size_t j = 0; j < J; ++j) out[j] = value(t, DensityField::center(j, J));
}

ControlField TestFunction::as_control() const {
  return [copy = *this](double t, std::span<double> out) { copy.evaluate(t, out); };
}

double TestFunction::max_abs_coefficient() const {
  double m = 0.0;
  for (double v : theta_) m = std::max(m, std::abs(v));
  return m;
}

// ---------------------------------------------------------------- helpers

void face_mobility(std::span<const double> rho, std::span<double> out) {
  const std::size_t J = rho.size();
  for (std::size_t j = 0; j < J; ++j) {
    const std::size_t k = j + 1 == J ? 0 : j + 1;
    const double cj = std::max(0.0, rho[j] * (1.0 - rho[j]));
    const double ck = std::max(0.0, rho[k] * (1.0 - rho[k]));
    out[j] = std::min(0.5 * (cj + ck), 2.0 * std::min(cj, ck));
  }
}

std::vector<DensityField> time_derivative(const Trajectory& pi) {
  require_grid(pi, "time derivative", 3);
  const std::size_t K = pi.steps(), J = pi.cells();
  const double inv = 1.0 / (2.0 * pi.dt());
  std::vector<DensityField> out(K + 1, DensityField(J));
  for (std::size_t n = 0; n <= K; ++n) {
    auto& o = out[n].values;
    const auto& f = pi.frames;
    for (std::size_t j = 0; j < J; ++j) {
      if (n == 0)
        o[j] = (-3.0 * f[0][j] + 4.0 * f[1][j] - f[2][j]) * inv;
      else if (n == K)
        o[j] = (3.0 * f[K][j] - 4.0 * f[K - 1][j] + f[K - 2][j]) * inv;
      else
        o[j] = (f[n + 1][j] - f[n - 1][j]) * inv;
    }
  }
  return out;
}

double legendre_f(double a) {
  if (std::abs(a) < 0.1) {
    // sum_{k >= 2} (k - 1) a^k / k!
    double term = a * a / 2.0, sum = 0.0;
    for (int k = 2; k < 20; ++k) {
      sum += static_cast<double>(k - 1) * term;
      term *= a / static_cast<double>(k + 1);
    }
    return sum;
  }
  return a * std::exp(a) - std::expm1(a);
}

// ---------------------------------------------------------------- energies

double energy_direct(const Trajectory& pi) {
  require_grid(pi, "energy", 1);
  const std::size_t J = pi.cells();
  const auto w = trapezoid_weights(pi.frames.size(), pi.dt());
  const double inv_2h = 0.5 * static_cast<double>(J);
  double total = 0.0;
  for (std::size_t n = 0; n < pi.frames.size(); ++n) {
    if (w[n] == 0.0) continue;
    total += w[n] * simd::active().gradient_energy(pi.frames[n].values.data(), J, inv_2h) /
             static_cast<double>(J);
  }
  return total;
}

double weighted_energy(const Trajectory& pi, double a) {
  require_grid(pi, "weighted energy", 1);
  if (!(a > 0.0)) throw DomainError("weighted energy: a must be positive");
  const std::size_t J = pi.cells();
  const auto w = trapezoid_weights(pi.frames.size(), pi.dt());
  const double inv_2h = 0.5 * static_cast<double>(J);
  double total = 0.0;
  for (std::size_t n = 0; n < pi.frames.size(); ++n) {
    if (w[n] == 0.0) continue;
    total += w[n] *
             simd::active().weighted_gradient_energy(pi.frames[n].values.data(), J, inv_2h, a) /
             static_cast<double>(J);
  }
  return total;
}

double energy_variational(const Trajectory& pi, BasisSize basis) {
  require_grid(pi, "energy", 2);
  const std::size_t K = pi.steps(), J = pi.cells();
  TestFunction shape(pi.horizon(), basis);
  const std::size_t S = shape.spatial_size(), Tn = shape.temporal_size(), P = shape.size();
  const auto w = trapezoid_weights(K + 1, pi.dt());

  Eigen::MatrixXd psi(J, S);
  for (std::size_t j = 0; j < J; ++j)
    for (std::size_t s = 0; s < S; ++s) psi(j, s) = shape.psi(s, DensityField::center(j, J));
  const Eigen::MatrixXd gram_space = psi.transpose() * psi / static_cast<double>(J);

  Eigen::VectorXd b = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(P));
  Eigen::MatrixXd M = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(P), static_cast<Eigen::Index>(P));
  Eigen::VectorXd grad(J);
  const double inv_2h = 0.5 * static_cast<double>(J);
  for (std::size_t n = 0; n <= K; ++n) {
    if (w[n] == 0.0) continue;
    const auto& r = pi.frames[n].values;
    for (std::size_t j = 0; j < J; ++j)
      grad(static_cast<Eigen::Index>(j)) =
          (r[j + 1 == J ? 0 : j + 1] - r[j == 0 ? J - 1 : j - 1]) * inv_2h;
    // pairing -<D_c rho, psi_s>_h
    const Eigen::VectorXd q = -(psi.transpose() * grad) / static_cast<double>(J);
    const auto hw = shape.hats(pi.times[n]);
    const double a[2] = {hw.w0, hw.w1};
    for (int x = 0; x < 2; ++x) {
      if (a[x] == 0.0) continue;
      const auto ix = static_cast<Eigen::Index>((hw.node + x) * S);
      b.segment(ix, static_cast<Eigen::Index>(S)) += w[n] * a[x] * q;
      for (int y = 0; y < 2; ++y) {
        if (a[y] == 0.0) continue;
        const auto iy = static_cast<Eigen::Index>((hw.node + y) * S);
        M.block(ix, iy, static_cast<Eigen::Index>(S), static_cast<Eigen::Index>(S)) +=
            w[n] * a[x] * a[y] * gram_space;
      }
    }
  }
  (void)Tn;
  Eigen::LDLT<Eigen::MatrixXd> ldlt(M);
  Eigen::VectorXd x;
  if (ldlt.info() == Eigen::Success && ldlt.isPositive() &&
      ldlt.vectorD().minCoeff() > 1e-14 * std::max(1.0, ldlt.vectorD().maxCoeff())) {
    x = ldlt.solve(b);
  } else {
    const double ridge = 1e-12 * std::max(1.0, M.trace());
    M.diagonal().array() += ridge;
    x = M.ldlt().solve(b);
  }
  return std::max(0.0, b.dot(x));
}

// ---------------------------------------------------------------- J_G

JGFunctional::JGFunctional(const Trajectory& pi, const DensityField& gamma, const RateModel& m,
                           BasisSize basis)
    : shape_(pi.horizon() > 0.0 ? pi.horizon() : 1.0, basis) {
  require_grid(pi, "J_G", 2);
  if (gamma.size() != pi.cells()) throw DomainError("J_G: initial profile has the wrong grid");
  K_ = pi.steps();
  J_ = pi.cells();
  S_ = shape_.spatial_size();
  T_ = shape_.temporal_size();
  P_ = shape_.size();
  const double Jd = static_cast<double>(J_);
  w_ = trapezoid_weights(K_ + 1, pi.dt());

  birth_.resize((K_ + 1) * J_);
  death_.resize((K_ + 1) * J_);
  mob_.resize((K_ + 1) * J_);
  for (std::size_t n = 0; n <= K_; ++n) {
    const auto r = pi.frames[n].span();
    m.birth_death(r, std::span(birth_).subspan(n * J_, J_), std::span(death_).subspan(n * J_, J_));
    for (std::size_t j = 0; j < J_; ++j) {
      birth_[n * J_ + j] = std::max(0.0, birth_[n * J_ + j]);
      death_[n * J_ + j] = std::max(0.0, death_[n * J_ + j]);
    }
    face_mobility(r, std::span(mob_).subspan(n * J_, J_));
  }

  psi_.resize(J_ * S_);
  dpsi_.resize(J_ * S_);
  for (std::size_t j = 0; j < J_; ++j)
    for (std::size_t s = 0; s < S_; ++s) psi_[j * S_ + s] = shape_.psi(s, DensityField::center(j, J_));
  for (std::size_t j = 0; j < J_; ++j) {
    const std::size_t k = j + 1 == J_ ? 0 : j + 1;
    for (std::size_t s = 0; s < S_; ++s) dpsi_[j * S_ + s] = Jd * (psi_[k * S_ + s] - psi_[j * S_ + s]);
  }

  node_.resize(K_ + 1);
  a_.resize(K_ + 1);
  b_.resize(K_ + 1);
  for (std::size_t n = 0; n <= K_; ++n) {
    const auto hw = shape_.hats(pi.times[n]);
    node_[n] = hw.node;
    a_[n] = hw.w0;
    b_[n] = hw.w1;
  }

  // Linear part on the nodes: <rho_K, G_K> - <gamma, G_0>
  //   - sum_n <(rho_n + rho_{n+1})/2, G_{n+1} - G_n> - sum_n w_n <(1/2) Delta_h rho_n, G_n>
  std::vector<double> L((K_ + 1) * J_, 0.0), lap(J_);
  for (std::size_t n = 0; n <= K_; ++n) {
    double* Ln = &L[n * J_];
    const auto& r = pi.frames[n].values;
    if (n == K_)
      for (std::size_t j = 0; j < J_; ++j) Ln[j] += r[j];
    if (n == 0)
      for (std::size_t j = 0; j < J_; ++j) Ln[j] -= gamma[j];
    if (n > 0) {
      const auto& p = pi.frames[n - 1].values;
      for (std::size_t j = 0; j < J_; ++j) Ln[j] -= 0.5 * (p[j] + r[j]);
    }
    if (n < K_) {
      const auto& q = pi.frames[n + 1].values;
      for (std::size_t j = 0; j < J_; ++j) Ln[j] += 0.5 * (r[j] + q[j]);
    }
    half_laplacian(r, lap);
    for (std::size_t j = 0; j < J_; ++j) Ln[j] = (Ln[j] - w_[n] * lap[j]) / Jd;
  }
  linear_.assign(P_, 0.0);
  std::vector<double> q(S_);
  for (std::size_t n = 0; n <= K_; ++n) {
    std::fill(q.begin(), q.end(), 0.0);
    for (std::size_t j = 0; j < J_; ++j) {
      const double l = L[n * J_ + j];
      for (std::size_t s = 0; s < S_; ++s) q[s] += l * psi_[j * S_ + s];
    }
    for (std::size_t s = 0; s < S_; ++s) {
      linear_[node_[n] * S_ + s] += a_[n] * q[s];
      linear_[(node_[n] + 1) * S_ + s] += b_[n] * q[s];
    }
  }
}

void JGFunctional::node_values(std::span<const double> theta, std::vector<double>& G) const {
  if (theta.size() != P_) throw DomainError("J_G: coefficient vector has the wrong size");
  std::vector<double> prof(T_ * J_, 0.0);
  for (std::size_t i = 0; i < T_; ++i)
    for (std::size_t j = 0; j < J_; ++j) {
      double v = 0.0;
      for (std::size_t s = 0; s < S_; ++s) v += psi_[j * S_ + s] * theta[i * S_ + s];
      prof[i * J_ + j] = v;
    }
  G.resize((K_ + 1) * J_);
  for (std::size_t n = 0; n <= K_; ++n) {
    const double* p0 = &prof[node_[n] * J_];
    const double* p1 = &prof[(node_[n] + 1) * J_];
    for (std::size_t j = 0; j < J_; ++j) G[n * J_ + j] = a_[n] * p0[j] + b_[n] * p1[j];
  }
}

double JGFunctional::max_abs_node(std::span<const double> theta) const {
  std::vector<double> G;
  node_values(theta, G);
  double m = 0.0;
  for (double v : G) m = std::max(m, std::abs(v));
  return m;
}

double JGFunctional::value(std::span<const double> theta) const {
  std::vector<double> G;
  node_values(theta, G);
  double val = 0.0;
  for (std::size_t c = 0; c < P_; ++c) val += linear_[c] * theta[c];
  const double Jd = static_cast<double>(J_);
  std::vector<double> cost(J_);
  for (std::size_t n = 0; n <= K_; ++n) {
    if (w_[n] == 0.0) continue;
    const double* g = &G[n * J_];
    const double react =
        simd::active().reaction_cost(&birth_[n * J_], &death_[n * J_], g, cost.data(), J_);
    double quad = 0.0;
    for (std::size_t j = 0; j < J_; ++j) {
      const std::size_t k = j + 1 == J_ ? 0 : j + 1;
      const double d = Jd * (g[k] - g[j]);
      quad += mob_[n * J_ + j] * d * d;
    }
    val -= w_[n] * (0.5 * quad + react) / Jd;
  }
  return val;
}

double JGFunctional::value_gradient(std::span<const double> theta, std::span<double> grad) const {
  std::vector<double> G;
  node_values(theta, G);
  double val = 0.0;
  for (std::size_t c = 0; c < P_; ++c) {
    val += linear_[c] * theta[c];
    grad[c] = linear_[c];
  }
  const double Jd = static_cast<double>(J_);
  std::vector<double> cost(J_), gn(J_), flux(J_), q(S_);
  for (std::size_t n = 0; n <= K_; ++n) {
    if (w_[n] == 0.0) continue;
    const double* g = &G[n * J_];
    const double* B = &birth_[n * J_];
    const double* D = &death_[n * J_];
    // cost[j] = B e^{G} - D e^{-G}
    const double react = simd::active().reaction_cost(B, D, g, cost.data(), J_);
    double quad = 0.0;
    for (std::size_t j = 0; j < J_; ++j) {
      const std::size_t k = j + 1 == J_ ? 0 : j + 1;
      const double d = Jd * (g[k] - g[j]);
      quad += mob_[n * J_ + j] * d * d;
      flux[j] = mob_[n * J_ + j] * d;
    }
    val -= w_[n] * (0.5 * quad + react) / Jd;
    // d/dG_j of the node cost, scaled by w_n / J
    for (std::size_t j = 0; j < J_; ++j) {
      const double left = flux[j == 0 ? J_ - 1 : j - 1];
      gn[j] = -w_[n] / Jd * (Jd * (left - flux[j]) + cost[j]);
    }
    std::fill(q.begin(), q.end(), 0.0);
    for (std::size_t j = 0; j < J_; ++j)
      for (std::size_t s = 0; s < S_; ++s) q[s] += gn[j] * psi_[j * S_ + s];
    for (std::size_t s = 0; s < S_; ++s) {
      grad[node_[n] * S_ + s] += a_[n] * q[s];
      grad[(node_[n] + 1) * S_ + s] += b_[n] * q[s];
    }
  }
  return val;
}

void JGFunctional::hessian(std::span<const double> theta, std::vector<double>& hess) const {
  std::vector<double> G;
  node_values(theta, G);
  const double Jd = static_cast<double>(J_);
  const auto S = static_cast<Eigen::Index>(S_);
  Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>> psi(
      psi_.data(), static_cast<Eigen::Index>(J_), S);
  Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>> dpsi(
      dpsi_.data(), static_cast<Eigen::Index>(J_), S);
  const auto P = static_cast<Eigen::Index>(P_);
  Eigen::MatrixXd H = Eigen::MatrixXd::Zero(P, P);
  Eigen::VectorXd curv(static_cast<Eigen::Index>(J_)), mob(static_cast<Eigen::Index>(J_));
  for (std::size_t n = 0; n <= K_; ++n) {
    if (w_[n] == 0.0) continue;
    for (std::size_t j = 0; j < J_; ++j) {
      const double e = std::exp(G[n * J_ + j]);
      curv(static_cast<Eigen::Index>(j)) = birth_[n * J_ + j] * e + death_[n * J_ + j] / e;
      mob(static_cast<Eigen::Index>(j)) = mob_[n * J_ + j];
    }
    const Eigen::MatrixXd local =
        -(w_[n] / Jd) * (psi.transpose() * curv.asDiagonal() * psi +
                         dpsi.transpose() * mob.asDiagonal() * dpsi);
    const double a[2] = {a_[n], b_[n]};
    for (int x = 0; x < 2; ++x) {
      if (a[x] == 0.0) continue;
      for (int y = 0; y < 2; ++y) {
        if (a[y] == 0.0) continue;
        H.block(static_cast<Eigen::Index>((node_[n] + x) * S_),
                static_cast<Eigen::Index>((node_[n] + y) * S_), S, S) += a[x] * a[y] * local;
      }
    }
  }
  hess.resize(P_ * P_);
  for (Eigen::Index r = 0; r < P; ++r)
    for (Eigen::Index c = 0; c < P; ++c) hess[static_cast<std::size_t>(r * P + c)] = H(r, c);
}

double eval_JG(const Trajectory& pi, const TestFunction& G, const DensityField& gamma,
               const RateModel& m) {
  if (std::abs(G.horizon() - pi.horizon()) > 1e-12 * std::max(1.0, pi.horizon()))
    throw DomainError("J_G: test function and trajectory horizons differ");
  JGFunctional f(pi, gamma, m, G.basis());
  return f.value(G.coefficients());
}

// ---------------------------------------------------------------- rates

const char* route_name(Route r) {
  switch (r) {
    case Route::variational: return "variational";
    case Route::explicit_smooth: return "explicit_smooth";
    case Route::homogeneous: return "homogeneous";
  }
  return "?";
}

namespace {
void finish_value(RateReport& rep) {
  if (rep.value < 0.0) {
    if (rep.value > -1e-9) {
      rep.value = 0.0;
    } else {
      rep.notes.push_back("defect: negative rate " + std::to_string(rep.value));
    }
  }
}
}  // namespace

RateReport rate_variational(const Trajectory& pi, const DensityField& gamma, const RateModel& m,
                            BasisSize basis, const OptimizerSettings& opt) {
  JGFunctional f(pi, gamma, m, basis);
  const std::size_t P = f.size();
  RateReport rep;
  rep.route = Route::variational;
  rep.basis = basis;
  rep.energy = energy_direct(pi);

  std::vector<double> theta(P, 0.0), grad(P), trial(P), hess;
  double val = f.value_gradient(theta, grad);
  Eigen::VectorXd step(static_cast<Eigen::Index>(P));
  for (std::size_t it = 0; it < opt.max_iter; ++it) {
    f.hessian(theta, hess);
    // Solve (-H) s = g; -H is positive definite away from degenerate data.
    Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>> Hm(
        hess.data(), static_cast<Eigen::Index>(P), static_cast<Eigen::Index>(P));
    Eigen::Map<const Eigen::VectorXd> g(grad.data(), static_cast<Eigen::Index>(P));
    Eigen::MatrixXd A = -Hm;
    const double ridge = 1e-13 * std::max(1.0, A.diagonal().maxCoeff());
    A.diagonal().array() += ridge;
    Eigen::LLT<Eigen::MatrixXd> llt(A);
    if (llt.info() == Eigen::Success) {
      step = llt.solve(g);
    } else {
      step = g;
      rep.notes.push_back("hessian not definite; gradient step");
    }
    const double decrement = g.dot(step);
    rep.gradient_norm = g.norm();
    rep.iterations = it;
    if (decrement < opt.gtol) {
      rep.converged = true;
      break;
    }
    double alpha = 1.0;
    bool accepted = false;
    for (int bt = 0; bt < 60; ++bt, alpha *= 0.5) {
      for (std::size_t c = 0; c < P; ++c)
        trial[c] = theta[c] + alpha * step(static_cast<Eigen::Index>(c));
      if (f.max_abs_node(trial) > opt.box) continue;
      const double tv = f.value(trial);
      if (std::isfinite(tv) && tv >= val + 1e-4 * alpha * decrement) {
        accepted = true;
        break;
      }
    }
    if (!accepted) {
      rep.notes.push_back("line search stalled");
      break;
    }
    theta = trial;
    val = f.value_gradient(theta, grad);
    rep.iterations = it + 1;
  }
  rep.value = val;
  rep.maximizer = theta;
  finish_value(rep);
  return rep;
}

RateReport rate_explicit_smooth(const Trajectory& pi, const RateModel& m) {
  require_grid(pi, "explicit rate", 3);
  for (const auto& f : pi.frames)
    if (f.min() < 0.01 || f.max() > 0.99)
      throw DomainError("explicit rate: profile leaves [0.01, 0.99]");
  const std::size_t K = pi.steps(), J = pi.cells();
  const double Jd = static_cast<double>(J), J2 = Jd * Jd;
  const auto rdot = time_derivative(pi);
  const auto w = trapezoid_weights(K + 1, pi.dt());

  RateReport rep;
  rep.route = Route::explicit_smooth;
  rep.energy = energy_direct(pi);
  rep.converged = true;
  rep.control.assign(K + 1, DensityField(J));

  std::vector<double> B(J), D(J), mob(J), lap(J), target(J), H(J, 0.0), res(J), trial(J),
      lower(J), diag(J), upper(J), rhs(J);
  auto residual = [&](std::span<const double> h, std::span<double> out) {
    double worst = 0.0;
    for (std::size_t j = 0; j < J; ++j) {
      const std::size_t k = j + 1 == J ? 0 : j + 1;
      const std::size_t l = j == 0 ? J - 1 : j - 1;
      const double div = J2 * (mob[j] * (h[k] - h[j]) - mob[l] * (h[j] - h[l]));
      out[j] = -div + B[j] * std::exp(h[j]) - D[j] * std::exp(-h[j]) - target[j];
      worst = std::max(worst, std::abs(out[j]));
    }
    return worst;
  };

  double total = 0.0;
  for (std::size_t n = 0; n <= K; ++n) {
    const auto r = pi.frames[n].span();
    m.birth_death(r, B, D);
    face_mobility(r, mob);
    half_laplacian(r, lap);
    for (std::size_t j = 0; j < J; ++j) target[j] = rdot[n][j] - lap[j];
    double err = residual(H, res);
    std::size_t it = 0;
    for (; it < 100 && err >= 1e-9; ++it) {
      for (std::size_t j = 0; j < J; ++j) {
        const std::size_t l = j == 0 ? J - 1 : j - 1;
        lower[j] = -J2 * mob[l];
        upper[j] = -J2 * mob[j];
        diag[j] = J2 * (mob[j] + mob[l]) + B[j] * std::exp(H[j]) + D[j] * std::exp(-H[j]);
        rhs[j] = res[j];
      }
      const auto delta = solve_cyclic_tridiagonal(lower, diag, upper, rhs);
      double alpha = 1.0, next = err;
      for (int bt = 0; bt < 40; ++bt, alpha *= 0.5) {
        for (std::size_t j = 0; j < J; ++j) trial[j] = H[j] - alpha * delta[j];
        next = residual(trial, res);
        if (std::isfinite(next) && next < err) break;
      }
      if (!(next < err)) break;
      H = trial;
      err = next;
    }
    // residual() left `res` at the last trial; refresh for the accepted H
    err = residual(H, res);
    if (err >= 1e-9) {
      rep.converged = false;
      rep.notes.push_back("frame " + std::to_string(n) + ": residual " + std::to_string(err));
    }
    rep.iterations = std::max(rep.iterations, it);
    rep.control[n].values = H;

    double quad = 0.0, react = 0.0;
    for (std::size_t j = 0; j < J; ++j) {
      const std::size_t k = j + 1 == J ? 0 : j + 1;
      const double d = Jd * (H[k] - H[j]);
      quad += mob[j] * d * d;
      react += B[j] * legendre_f(H[j]) + D[j] * legendre_f(-H[j]);
    }
    total += w[n] * (0.5 * quad + react) / Jd;
  }
  rep.value = total;
  finish_value(rep);
  return rep;
}

double rate_homogeneous(std::span<const double> path, double horizon, const RateModel& m) {
  if (path.size() < 3) throw DomainError("homogeneous rate: need at least 3 path values");
  if (!(horizon > 0.0)) throw DomainError("homogeneous rate: horizon must be positive");
  for (double r : path)
    if (!(r > 0.0 && r < 1.0)) throw DomainError("homogeneous rate: path must stay in (0, 1)");
  const std::size_t K = path.size() - 1;
  const double dt = horizon / static_cast<double>(K);
  const auto w = trapezoid_weights(K + 1, dt);
  double total = 0.0;
  for (std::size_t n = 0; n <= K; ++n) {
    double rd;
    if (n == 0)
      rd = (-3.0 * path[0] + 4.0 * path[1] - path[2]) / (2.0 * dt);
    else if (n == K)
      rd = (3.0 * path[K] - 4.0 * path[K - 1] + path[K - 2]) / (2.0 * dt);
    else
      rd = (path[n + 1] - path[n - 1]) / (2.0 * dt);
    const double B = m.B(path[n]), D = m.D(path[n]);
    const double s = std::sqrt(rd * rd + 4.0 * B * D);
    // e^{g} = (rd + s) / (2B) = 2D / (s - rd); pick the cancellation-free form.
    const double e = rd >= 0.0 ? (rd + s) / (2.0 * B) : 2.0 * D / (s - rd);
    const double g = std::log(e);
    total += w[n] * (rd * g - B * (e - 1.0) - D * (1.0 / e - 1.0));
  }
  return total;
}

EnergyBound energy_bound_check(const Trajectory& pi, const DensityField& gamma,
                               const RateModel& m, double a, BasisSize basis) {
  EnergyBound out;
  out.lhs = weighted_energy(pi, a);
  out.rate = rate_variational(pi, gamma, m, basis).value;
  out.ratio = out.lhs / (out.rate + 1.0);
  return out;
}

}  // namespace gk
