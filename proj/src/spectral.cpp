#include "gklab/spectral.hpp"

#include <fftw3.h>

#include <cmath>
#include <mutex>
#include <numbers>

#include "gklab/errors.hpp"

namespace gk {

namespace {
std::mutex& planner_lock() {
  static std::mutex m;
  return m;
}
}  // namespace

PeriodicSpectral::PeriodicSpectral(std::size_t n) : n_(n) {
  if (n < 2) throw DomainError("spectral transform needs at least 2 points");
  std::lock_guard<std::mutex> lock(planner_lock());
  real_ = fftw_alloc_real(n);
  auto* spec = fftw_alloc_complex(n / 2 + 1);
  spec_ = spec;
  plan_fwd_ = fftw_plan_dft_r2c_1d(static_cast<int>(n), real_, spec, FFTW_ESTIMATE);
  plan_bwd_ = fftw_plan_dft_c2r_1d(static_cast<int>(n), spec, real_, FFTW_ESTIMATE);
  if (!plan_fwd_ || !plan_bwd_) throw NumericalError("FFTW plan creation failed");
}

PeriodicSpectral::~PeriodicSpectral() {
  std::lock_guard<std::mutex> lock(planner_lock());
  fftw_destroy_plan(static_cast<fftw_plan>(plan_fwd_));
  fftw_destroy_plan(static_cast<fftw_plan>(plan_bwd_));
  fftw_free(real_);
  fftw_free(spec_);
}

void PeriodicSpectral::forward(std::span<const double> x, std::vector<std::complex<double>>& out) {
  if (x.size() != n_) throw DomainError("spectral forward: size mismatch");
  std::copy(x.begin(), x.end(), real_);
  fftw_execute(static_cast<fftw_plan>(plan_fwd_));
  auto* spec = static_cast<fftw_complex*>(spec_);
  out.resize(modes());
  for (std::size_t k = 0; k < modes(); ++k) out[k] = {spec[k][0], spec[k][1]};
}

void PeriodicSpectral::backward(const std::vector<std::complex<double>>& in, std::span<double> x) {
  if (in.size() != modes() || x.size() != n_) throw DomainError("spectral backward: size mismatch");
  auto* spec = static_cast<fftw_complex*>(spec_);
  for (std::size_t k = 0; k < modes(); ++k) {
    spec[k][0] = in[k].real();
    spec[k][1] = in[k].imag();
  }
  fftw_execute(static_cast<fftw_plan>(plan_bwd_));
  const double inv = 1.0 / static_cast<double>(n_);
  for (std::size_t j = 0; j < n_; ++j) x[j] = real_[j] * inv;
}

void PeriodicSpectral::apply_multiplier(std::span<double> x, std::span<const double> mult) {
  if (x.size() != n_ || mult.size() != modes())
    throw DomainError("spectral multiplier: size mismatch");
  std::copy(x.begin(), x.end(), real_);
  fftw_execute(static_cast<fftw_plan>(plan_fwd_));
  auto* spec = static_cast<fftw_complex*>(spec_);
  for (std::size_t k = 0; k < modes(); ++k) {
    spec[k][0] *= mult[k];
    spec[k][1] *= mult[k];
  }
  fftw_execute(static_cast<fftw_plan>(plan_bwd_));
  const double inv = 1.0 / static_cast<double>(n_);
  for (std::size_t j = 0; j < n_; ++j) x[j] = real_[j] * inv;
}

double PeriodicSpectral::laplacian_eigenvalue(std::size_t k) const {
  const double n = static_cast<double>(n_);
  const double s = std::sin(std::numbers::pi * static_cast<double>(k) / n);
  return -4.0 * n * n * s * s;
}

}  // namespace gk
