#include <doctest.h>

#include <cmath>
#include <random>
#include <vector>

#include "gklab/simd/kernels.hpp"

namespace {

using gk::simd::Isa;

std::vector<double> random_vec(std::size_t n, double lo, double hi, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> U(lo, hi);
  std::vector<double> v(n);
  for (double& x : v) x = U(rng);
  return v;
}

void check_close(double a, double b, double rel) {
  CHECK(std::abs(a - b) <= rel * std::max(1.0, std::abs(b)));
}

}  // namespace

TEST_CASE("every supported ISA agrees with the scalar reference") {
  const auto& ref = gk::simd::table(Isa::scalar);
  for (Isa isa : gk::simd::supported_isas()) {
    CAPTURE(gk::simd::isa_name(isa));
    const auto& k = gk::simd::table(isa);
    for (std::size_t n : {0u, 1u, 2u, 3u, 4u, 5u, 7u, 8u, 13u, 64u, 257u, 1000u}) {
      CAPTURE(n);
      const auto a = random_vec(n, 0.01, 0.99, 1 + n);
      const auto b = random_vec(n, -2.0, 2.0, 2 + n);
      const auto g = random_vec(n, -30.0, 30.0, 3 + n);

      check_close(k.dot(a.data(), b.data(), n), ref.dot(a.data(), b.data(), n), 1e-13);

      auto y1 = b, y2 = b;
      k.axpy(0.37, a.data(), y1.data(), n);
      ref.axpy(0.37, a.data(), y2.data(), n);
      for (std::size_t i = 0; i < n; ++i) CHECK(y1[i] == doctest::Approx(y2[i]).epsilon(1e-15));

      const double coeffs[] = {0.5, -1.0, 3.0, 0.25, -2.0};
      std::vector<double> h1(n), h2(n);
      k.horner(coeffs, 5, a.data(), h1.data(), n);
      ref.horner(coeffs, 5, a.data(), h2.data(), n);
      for (std::size_t i = 0; i < n; ++i) check_close(h1[i], h2[i], 1e-14);

      std::vector<double> l1(n), l2(n);
      k.periodic_laplacian(a.data(), l1.data(), n, 17.0);
      ref.periodic_laplacian(a.data(), l2.data(), n, 17.0);
      for (std::size_t i = 0; i < n; ++i) check_close(l1[i], l2[i], 1e-13);

      check_close(k.gradient_energy(a.data(), n, 3.5), ref.gradient_energy(a.data(), n, 3.5),
                  1e-12);
      check_close(k.weighted_gradient_energy(a.data(), n, 3.5, 0.01),
                  ref.weighted_gradient_energy(a.data(), n, 3.5, 0.01), 1e-12);

      std::vector<double> ep1(n), em1(n), ep2(n), em2(n);
      k.exp_pm(g.data(), ep1.data(), em1.data(), n);
      ref.exp_pm(g.data(), ep2.data(), em2.data(), n);
      for (std::size_t i = 0; i < n; ++i) {
        CHECK(ep1[i] == doctest::Approx(ep2[i]).epsilon(1e-14));
        CHECK(em1[i] == doctest::Approx(em2[i]).epsilon(1e-14));
      }

      std::vector<double> d1(n), d2(n);
      const auto B = random_vec(n, 0.0, 2.0, 4 + n);
      const auto D = random_vec(n, 0.0, 2.0, 5 + n);
      const auto G = random_vec(n, -3.0, 3.0, 6 + n);
      const double c1 = k.reaction_cost(B.data(), D.data(), G.data(), d1.data(), n);
      const double c2 = ref.reaction_cost(B.data(), D.data(), G.data(), d2.data(), n);
      check_close(c1, c2, 1e-12);
      for (std::size_t i = 0; i < n; ++i) check_close(d1[i], d2[i], 1e-13);
    }
  }
}

TEST_CASE("vector exponential is accurate across its range") {
  for (Isa isa : gk::simd::supported_isas()) {
    const auto& k = gk::simd::table(isa);
    std::vector<double> g;
    for (double x = -700.0; x <= 700.0; x += 0.731) g.push_back(x);
    g.push_back(0.0);
    g.push_back(1e-300);
    std::vector<double> ep(g.size()), em(g.size());
    k.exp_pm(g.data(), ep.data(), em.data(), g.size());
    for (std::size_t i = 0; i < g.size(); ++i) {
      CHECK(ep[i] == doctest::Approx(std::exp(g[i])).epsilon(2e-15));
      CHECK(em[i] == doctest::Approx(std::exp(-g[i])).epsilon(2e-15));
    }
  }
}

TEST_CASE("ISA selection round trip") {
  const Isa before = gk::simd::active().isa;
  gk::simd::select(Isa::scalar);
  CHECK(gk::simd::active().isa == Isa::scalar);
  gk::simd::select(before);
  CHECK(gk::simd::active().isa == before);
  CHECK(gk::simd::isa_name(Isa::avx2) == "avx2");
}
