#pragma once

#include <complex>
#include <cstddef>
#include <span>
#include <vector>

namespace gk {

/// Real-to-complex FFT pair on n points (FFTW, estimate plans). Plans are
/// created under a process-wide lock; execution on distinct objects is
/// thread safe.
class PeriodicSpectral {
 public:
  explicit PeriodicSpectral(std::size_t n);
  ~PeriodicSpectral();
  PeriodicSpectral(const PeriodicSpectral&) = delete;
  PeriodicSpectral& operator=(const PeriodicSpectral&) = delete;

  [[nodiscard]] std::size_t size() const { return n_; }
  [[nodiscard]] std::size_t modes() const { return n_ / 2 + 1; }

  /// Unnormalized forward transform into out (modes() entries).
  void forward(std::span<const double> x, std::vector<std::complex<double>>& out);
  /// Inverse transform including the 1/n normalization.
  void backward(const std::vector<std::complex<double>>& in, std::span<double> x);
  /// x <- IFFT(mult .* FFT(x)); mult has modes() real entries.
  void apply_multiplier(std::span<double> x, std::span<const double> mult);

  /// Eigenvalue of the periodic second difference divided by h^2 = 1/n^2 on
  /// mode k: -4 n^2 sin^2(pi k / n).
  [[nodiscard]] double laplacian_eigenvalue(std::size_t k) const;

 private:
  std::size_t n_;
  double* real_ = nullptr;
  void* spec_ = nullptr;  // fftw_complex*
  void* plan_fwd_ = nullptr;
  void* plan_bwd_ = nullptr;
};

}  // namespace gk
