#include "gklab/pde.hpp"

#include <Eigen/Sparse>
#include <Eigen/SparseLU>
#include <algorithm>
#include <cmath>
#include <complex>

#include "gklab/errors.hpp"
#include "gklab/hash.hpp"
#include "gklab/linalg.hpp"
#include "gklab/polynomial.hpp"
#include "gklab/simd/kernels.hpp"
#include "gklab/spectral.hpp"

namespace gk {

namespace {

struct StepPlan {
  std::size_t steps = 0;
  std::size_t per_frame = 1;
  double dt = 0.0;
};

StepPlan plan_steps(double horizon, const PdeParams& p) {
  if (!(horizon >= 0.0) || !std::isfinite(horizon))
    throw DomainError("pde: horizon must be finite and nonnegative");
  if (!(p.dt > 0.0)) throw DomainError("pde: dt must be positive");
  StepPlan s;
  if (horizon == 0.0) return s;
  if (p.frames == 0) {
    s.steps = static_cast<std::size_t>(std::ceil(horizon / p.dt - 1e-9));
    s.per_frame = 1;
  } else {
    s.per_frame = static_cast<std::size_t>(
        std::ceil(horizon / (static_cast<double>(p.frames) * p.dt) - 1e-9));
    s.per_frame = std::max<std::size_t>(s.per_frame, 1);
    s.steps = s.per_frame * p.frames;
  }
  s.steps = std::max<std::size_t>(s.steps, 1);
  s.dt = horizon / static_cast<double>(s.steps);
  return s;
}

double step_time(double horizon, std::size_t n, std::size_t steps) {
  return n == steps ? horizon : horizon * static_cast<double>(n) / static_cast<double>(steps);
}

void require_profile(const DensityField& gamma, const char* what) {
  if (gamma.size() < 3) throw DomainError(std::string(what) + ": need at least 3 cells");
  gamma.require_unit_interval(what);
}

/// Explicit part of the (controlled) equation:
/// R(rho)_j = B e^{H} - D e^{-H} - J^2 [m_{j+1/2}(H_{j+1} - H_j) - m_{j-1/2}(H_j - H_{j-1})].
class ExplicitPart {
 public:
  ExplicitPart(const RateModel& m, std::size_t J)
      : m_(m), J_(J), J2_(static_cast<double>(J) * static_cast<double>(J)),
        b_(J), d_(J), ep_(J), em_(J), flux_(J) {}

  void evaluate(std::span<const double> rho, std::span<const double> H, bool zero_h,
                std::span<double> out) {
    m_.birth_death(rho, b_, d_);
    if (zero_h) {
      for (std::size_t j = 0; j < J_; ++j) out[j] = b_[j] - d_[j];
      return;
    }
    simd::active().exp_pm(H.data(), ep_.data(), em_.data(), J_);
    // flux_[j] lives on the face between j and j + 1.
    for (std::size_t j = 0; j < J_; ++j) {
      const std::size_t k = j + 1 == J_ ? 0 : j + 1;
      const double cj = rho[j] * (1.0 - rho[j]);
      const double ck = rho[k] * (1.0 - rho[k]);
      const double mob = std::min(0.5 * (cj + ck), 2.0 * std::min(cj, ck));
      flux_[j] = mob * (H[k] - H[j]);
    }
    for (std::size_t j = 0; j < J_; ++j) {
      const double left = flux_[j == 0 ? J_ - 1 : j - 1];
      out[j] = b_[j] * ep_[j] - d_[j] * em_[j] - J2_ * (flux_[j] - left);
    }
  }

 private:
  const RateModel& m_;
  std::size_t J_;
  double J2_;
  std::vector<double> b_, d_, ep_, em_, flux_;
};

class ControlledStepper {
 public:
  ControlledStepper(const RateModel& m, std::size_t J, const ControlField& H, double dt)
      : m_(m), J_(J), H_(H), dt_(dt), op_(m, J), h_(J), k_(J), y1_(J), y2_(J),
        diffusion_(J, 0.5 * dt * static_cast<double>(J) * static_cast<double>(J)) {}

  void step(std::vector<double>& rho, double t0) {
    explicit_half(rho, t0);
    diffusion_.solve(rho);
    explicit_half(rho, t0 + 0.5 * dt_);
  }

 private:
  // SSP-RK3 over [t, t + dt/2].
  void explicit_half(std::vector<double>& y, double t) {
    const double tau = 0.5 * dt_;
    rhs(y, t, k_);
    for (std::size_t j = 0; j < J_; ++j) y1_[j] = y[j] + tau * k_[j];
    rhs(y1_, t + tau, k_);
    for (std::size_t j = 0; j < J_; ++j) y2_[j] = 0.75 * y[j] + 0.25 * (y1_[j] + tau * k_[j]);
    rhs(y2_, t + 0.5 * tau, k_);
    for (std::size_t j = 0; j < J_; ++j)
      y[j] = (1.0 / 3.0) * y[j] + (2.0 / 3.0) * (y2_[j] + tau * k_[j]);
  }

  void rhs(std::span<const double> y, double t, std::span<double> out) {
    H_(t, h_);
    bool zero = true;
    for (double v : h_) {
      if (!std::isfinite(v)) throw NumericalError("controlled equation: non-finite control");
      if (v != 0.0) zero = false;
    }
    const double bound = zero ? explicit_step_bound_zero() : explicit_step_bound(m_, h_);
    if (dt_ > bound)
      throw NumericalError("pde: time step dt=" + exact(dt_) + " violates the explicit bound " +
                           exact(bound) + " at t=" + exact(t));
    op_.evaluate(y, h_, zero, out);
  }

  double explicit_step_bound_zero() const {
    const double L = m_.max_birth_slope() + m_.max_death_slope();
    return L > 0.0 ? 0.5 / L : INFINITY;
  }

  const RateModel& m_;
  std::size_t J_;
  const ControlField& H_;
  double dt_;
  ExplicitPart op_;
  std::vector<double> h_, k_, y1_, y2_;
  ImplicitDiffusion diffusion_;
};

}  // namespace

double explicit_step_bound(const RateModel& m, std::span<const double> H) {
  double hmax = 0.0, gmax = 0.0;
  const std::size_t J = H.size();
  for (std::size_t j = 0; j < J; ++j) {
    hmax = std::max(hmax, std::abs(H[j]));
    gmax = std::max(gmax, std::abs(H[j + 1 == J ? 0 : j + 1] - H[j]));
  }
  const double Lr = (m.max_birth_slope() + m.max_death_slope()) * std::exp(hmax);
  const double Ld = 4.0 * gmax * static_cast<double>(J) * static_cast<double>(J);
  const double L = Lr + Ld;
  return L > 0.0 ? 0.5 / L : INFINITY;
}

Trajectory solve_controlled(const DensityField& gamma, const RateModel& m, const ControlField& H,
                            double horizon, const PdeParams& p) {
  require_profile(gamma, "solve_controlled");
  const StepPlan plan = plan_steps(horizon, p);
  const std::size_t J = gamma.size();
  Trajectory out;
  std::vector<double> rho = gamma.values;
  out.times.push_back(0.0);
  out.frames.push_back(gamma);
  if (plan.steps == 0) return out;
  ControlledStepper stepper(m, J, H, plan.dt);
  for (std::size_t n = 0; n < plan.steps; ++n) {
    stepper.step(rho, step_time(horizon, n, plan.steps));
    if ((n + 1) % plan.per_frame == 0) {
      for (double v : rho)
        if (!std::isfinite(v)) throw NumericalError("pde: solution became non-finite");
      out.times.push_back(step_time(horizon, n + 1, plan.steps));
      out.frames.emplace_back(rho);
    }
  }
  return out;
}

Trajectory solve_cauchy(const DensityField& gamma, const RateModel& m, double horizon,
                        const PdeParams& p) {
  const ControlField zero = [](double, std::span<double> h) { std::fill(h.begin(), h.end(), 0.0); };
  return solve_controlled(gamma, m, zero, horizon, p);
}

// ------------------------------------------------------------- mild Picard

namespace {

using Spectrum = std::vector<std::complex<double>>;

struct MildCoefficients {
  std::vector<double> decay, w0, w1;  // e^z, dt (phi1 - phi2), dt phi2
};

MildCoefficients mild_coefficients(const PeriodicSpectral& S, double dt) {
  MildCoefficients c;
  const std::size_t K = S.modes();
  c.decay.resize(K);
  c.w0.resize(K);
  c.w1.resize(K);
  for (std::size_t k = 0; k < K; ++k) {
    const double z = 0.5 * S.laplacian_eigenvalue(k) * dt;
    double phi1, phi2;
    if (std::abs(z) < 1e-4) {
      phi1 = 1.0 + z / 2.0 + z * z / 6.0 + z * z * z / 24.0;
      phi2 = 0.5 + z / 6.0 + z * z / 24.0 + z * z * z / 120.0;
    } else {
      const double em1 = std::expm1(z);
      phi1 = em1 / z;
      phi2 = (em1 - z) / (z * z);
    }
    c.decay[k] = std::exp(z);
    c.w0[k] = dt * (phi1 - phi2);
    c.w1[k] = dt * phi2;
  }
  return c;
}

}  // namespace

Trajectory solve_mild_picard(const DensityField& gamma, const RateModel& m, double horizon,
                             const PdeParams& p) {
  require_profile(gamma, "solve_mild_picard");
  const StepPlan plan = plan_steps(horizon, p);
  const std::size_t J = gamma.size();
  Trajectory out;
  out.times.push_back(0.0);
  out.frames.push_back(gamma);
  if (plan.steps == 0) return out;

  PeriodicSpectral S(J);
  const auto coef = mild_coefficients(S, plan.dt);
  const std::size_t K = S.modes();
  const double L = m.max_reaction_slope();
  constexpr std::size_t kMaxWindow = 2000;
  std::size_t window =
      L > 0.0 ? static_cast<std::size_t>(std::floor(p.picard_window / (L * plan.dt))) : kMaxWindow;
  window = std::clamp<std::size_t>(window, 1, kMaxWindow);

  std::vector<double> start = gamma.values;
  std::vector<std::vector<double>> prev, next;
  std::vector<Spectrum> fhat;
  Spectrum hat(K);
  std::vector<double> fvals(J);

  std::size_t n = 0;
  while (n < plan.steps) {
    const std::size_t w = std::min(window, plan.steps - n);
    // Initial guess: free heat flow from the window start.
    prev.assign(w + 1, start);
    S.forward(start, hat);
    for (std::size_t i = 1; i <= w; ++i) {
      for (std::size_t k = 0; k < K; ++k) hat[k] *= coef.decay[k];
      S.backward(hat, prev[i]);
    }
    bool converged = false;
    double last_diff = INFINITY;
    for (std::size_t it = 0; it < p.max_iter; ++it) {
      fhat.resize(w + 1);
      for (std::size_t i = 0; i <= w; ++i) {
        m.reaction().evaluate(prev[i], fvals);
        S.forward(fvals, fhat[i]);
      }
      next.assign(w + 1, start);
      S.forward(start, hat);
      double diff = 0.0;
      for (std::size_t i = 0; i < w; ++i) {
        for (std::size_t k = 0; k < K; ++k)
          hat[k] = coef.decay[k] * hat[k] + coef.w0[k] * fhat[i][k] + coef.w1[k] * fhat[i + 1][k];
        S.backward(hat, next[i + 1]);
        diff = std::max(diff, sup_distance(DensityField(next[i + 1]), DensityField(prev[i + 1])));
      }
      std::swap(prev, next);
      if (!std::isfinite(diff)) break;
      if (diff < p.tol) {
        converged = true;
        break;
      }
      if (it >= 3 && diff > last_diff) break;  // not contracting
      last_diff = diff;
    }
    if (!converged) {
      if (w == 1)
        throw NumericalError("mild Picard iteration failed to converge within " +
                             std::to_string(p.max_iter) + " iterations at t=" +
                             exact(step_time(horizon, n, plan.steps)));
      window = std::max<std::size_t>(1, w / 2);
      continue;
    }
    for (std::size_t i = 1; i <= w; ++i) {
      const std::size_t step = n + i;
      if (step % plan.per_frame == 0) {
        out.times.push_back(step_time(horizon, step, plan.steps));
        out.frames.emplace_back(prev[i]);
      }
    }
    start = prev[w];
    n += w;
  }
  return out;
}

Trajectory solve(const DensityField& gamma, const RateModel& m, double horizon,
                 const PdeParams& p) {
  return p.scheme == Scheme::mild_picard ? solve_mild_picard(gamma, m, horizon, p)
                                         : solve_cauchy(gamma, m, horizon, p);
}

std::vector<double> solve_homogeneous_ode(double j, const RateModel& m, double horizon,
                                          std::size_t steps) {
  if (!(j >= 0.0 && j <= 1.0)) throw DomainError("homogeneous ODE: initial value outside [0, 1]");
  if (!(horizon >= 0.0)) throw DomainError("homogeneous ODE: horizon must be nonnegative");
  if (steps == 0) steps = 1;
  const double h = horizon / static_cast<double>(steps);
  std::vector<double> path(steps + 1);
  path[0] = j;
  double y = j;
  const auto& F = m.reaction();
  for (std::size_t n = 0; n < steps; ++n) {
    const double k1 = F(y);
    const double k2 = F(y + 0.5 * h * k1);
    const double k3 = F(y + 0.5 * h * k2);
    const double k4 = F(y + h * k3);
    y += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    path[n + 1] = y;
  }
  return path;
}

// ------------------------------------------------------------ stationary set

double stationary_residual(const DensityField& rho, const RateModel& m) {
  const std::size_t J = rho.size();
  std::vector<double> lap(J), f(J);
  simd::active().periodic_laplacian(rho.values.data(), lap.data(), J,
                                    0.5 * static_cast<double>(J) * static_cast<double>(J));
  m.reaction().evaluate(rho.values, f);
  double r = 0.0;
  for (std::size_t j = 0; j < J; ++j) r = std::max(r, std::abs(lap[j] + f[j]));
  return r;
}

namespace {

// Newton's method on (1/2) Delta_h rho + F(rho) = 0. Returns false if the
// iteration fails to reach tol.
bool newton_polish(std::vector<double>& rho, const RateModel& m, double tol, std::size_t max_iter,
                   std::string& why) {
  const std::size_t J = rho.size();
  const double c = 0.5 * static_cast<double>(J) * static_cast<double>(J);
  const Polynomial& F = m.reaction();
  const Polynomial dF = F.derivative();
  using Sp = Eigen::SparseMatrix<double>;
  for (std::size_t it = 0; it <= max_iter; ++it) {
    const double res = stationary_residual(DensityField(rho), m);
    if (res < tol) return true;
    if (it == max_iter) break;
    std::vector<Eigen::Triplet<double>> trip;
    Eigen::VectorXd r(static_cast<int>(J));
    for (std::size_t j = 0; j < J; ++j) {
      const std::size_t l = j == 0 ? J - 1 : j - 1, k = j + 1 == J ? 0 : j + 1;
      r[static_cast<int>(j)] = c * (rho[l] - 2.0 * rho[j] + rho[k]) + F(rho[j]);
      trip.emplace_back(static_cast<int>(j), static_cast<int>(j), -2.0 * c + dF(rho[j]));
      trip.emplace_back(static_cast<int>(j), static_cast<int>(l), c);
      trip.emplace_back(static_cast<int>(j), static_cast<int>(k), c);
    }
    Sp A(static_cast<int>(J), static_cast<int>(J));
    A.setFromTriplets(trip.begin(), trip.end());
    A.makeCompressed();
    Eigen::SparseLU<Sp> lu;
    lu.compute(A);
    if (lu.info() != Eigen::Success) {
      why = "singular Newton Jacobian";
      return false;
    }
    const Eigen::VectorXd delta = lu.solve(r);
    for (std::size_t j = 0; j < J; ++j) rho[j] -= delta[static_cast<int>(j)];
  }
  why = "Newton iteration did not reach the residual tolerance";
  return false;
}

}  // namespace

StationarySet stationary_set_search(const RateModel& m, const PdeParams& p,
                                    const std::vector<DensityField>& seeds,
                                    const StationarySearchOptions& opt) {
  StationarySet E;
  const std::size_t J = seeds.empty() ? p.J : seeds.front().size();
  if (J < 3) throw DomainError("stationary_set_search: need at least 3 cells");
  auto add = [&](DensityField f, std::string origin) {
    for (const auto& g : E.profiles)
      if (l1_distance(f, g) < opt.dedup_eps) return;
    E.residuals.push_back(stationary_residual(f, m));
    E.profiles.push_back(std::move(f));
    E.origins.push_back(std::move(origin));
  };
  for (double r : roots_in_interval(m.reaction(), 0.0, 1.0)) add(DensityField(J, r), "root");

  PdeParams relax = p;
  relax.frames = 1;
  for (std::size_t i = 0; i < seeds.size(); ++i) {
    const auto& seed = seeds[i];
    if (seed.size() != J) throw DomainError("stationary_set_search: seeds differ in grid size");
    seed.require_unit_interval("stationary_set_search seed");
    std::vector<double> rho = seed.values;
    double t = 0.0;
    bool settled = false;
    while (t < opt.time_cap) {
      const auto traj = solve_cauchy(DensityField(rho), m, 1.0, relax);
      const double change = sup_distance(traj.final_frame(), DensityField(rho));
      rho = traj.final_frame().values;
      t += 1.0;
      if (change < opt.relax_tol) {
        settled = true;
        break;
      }
    }
    const std::string label = "seed " + std::to_string(i);
    if (!settled) {
      E.failures.push_back(label + ": relaxation did not settle by t=" + exact(opt.time_cap));
      continue;
    }
    std::string why;
    if (!newton_polish(rho, m, p.tol, opt.newton_max_iter, why)) {
      E.failures.push_back(label + ": " + why);
      continue;
    }
    add(DensityField(std::move(rho)), label);
  }
  return E;
}

double distance_to_stationary_set(const DensityField& pi, const StationarySet& E, std::size_t K) {
  if (E.profiles.empty()) throw DomainError("distance_to_stationary_set: empty stationary set");
  const auto mp = metric_moments(pi, K);
  double best = INFINITY;
  for (const auto& e : E.profiles) best = std::min(best, moment_distance(mp, metric_moments(e, K)));
  return best;
}

double distance_to_stationary_set(const EmpiricalMeasure& pi, const StationarySet& E,
                                  std::size_t K) {
  if (E.profiles.empty()) throw DomainError("distance_to_stationary_set: empty stationary set");
  const auto mp = metric_moments(pi, K);
  double best = INFINITY;
  for (const auto& e : E.profiles) best = std::min(best, moment_distance(mp, metric_moments(e, K)));
  return best;
}

}  // namespace gk
