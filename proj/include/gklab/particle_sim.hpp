#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "gklab/fenwick.hpp"
#include "gklab/field.hpp"
#include "gklab/metric.hpp"
#include "gklab/random.hpp"
#include "gklab/rate_model.hpp"

namespace gk {

/// Occupation variables on the discrete torus {0, ..., N-1}; indices are taken
/// modulo N.
class Configuration {
 public:
  Configuration() = default;
  explicit Configuration(std::size_t N, bool fill = false);
  /// "0110..." with site 0 first.
  static Configuration from_string(const std::string& bits);
  /// Bit x of `index` is the occupation of site x (N <= 63).
  static Configuration from_index(std::uint64_t index, std::size_t N);

  [[nodiscard]] std::size_t size() const { return occ_.size(); }
  [[nodiscard]] std::size_t particle_count() const { return count_; }
  [[nodiscard]] bool operator[](std::ptrdiff_t x) const { return occ_[wrap(x)] != 0; }
  [[nodiscard]] std::size_t wrap(std::ptrdiff_t x) const {
    const auto n = static_cast<std::ptrdiff_t>(occ_.size());
    if (x < 0) x += n;
    else if (x >= n) x -= n;
    if (x < 0 || x >= n) x = ((x % n) + n) % n;  // far outside: full reduction
    return static_cast<std::size_t>(x);
  }

  void set(std::ptrdiff_t x, bool v);
  void flip(std::ptrdiff_t x);

  [[nodiscard]] std::uint64_t to_index() const;
  [[nodiscard]] std::string to_string() const;
  [[nodiscard]] EmpiricalMeasure empirical() const;
  /// Mean occupation on cells [floor(jN/J), floor((j+1)N/J)), 1 <= J <= N.
  [[nodiscard]] DensityField block_average(std::size_t cells) const;
  /// Window index at site x for half width M (bit i = site x + i - M).
  [[nodiscard]] std::uint32_t window(std::ptrdiff_t x, int M) const;

  bool operator==(const Configuration& o) const { return occ_ == o.occ_; }

 private:
  std::vector<std::uint8_t> occ_;
  std::size_t count_ = 0;
};

struct KmcOptions {
  bool exchange = true;  // Kawasaki part (diagnostic switch)
  bool flips = true;     // Glauber part (diagnostic switch)
  /// Events between audits of the cached flip-rate total against a fresh sum.
  std::uint64_t audit_interval = 1'000'000;
};

struct KmcEvent {
  enum class Kind { exchange, flip, none };
  Kind kind = Kind::none;
  std::size_t site = 0;  // bond (site, site+1) for exchanges
  double wait = 0.0;
};

/// Rates of the 2N elementary events of the speeded-up generator: entries
/// 0..N-1 are the bonds (x, x+1) with rate N^2/2 when discordant, entries
/// N..2N-1 are the flips with rate c(x, eta).
std::vector<double> elementary_rates(const Configuration& eta, const RateModel& m,
                                     const KmcOptions& opt = {});

/// Reference single step: recomputes every rate, draws the exponential waiting
/// time and applies one event chosen proportionally to its rate. O(N).
KmcEvent kmc_step(Configuration& eta, const RateModel& m, Rng& rng,
                  const KmcOptions& opt = {});

/// Continuous-time simulator. Exchanges are drawn uniformly from the set of
/// discordant bonds (all share the rate N^2/2); flips are drawn from a
/// binary indexed tree over the N site rates.
class KmcSimulator {
 public:
  KmcSimulator(Configuration eta, const RateModel& m, std::uint64_t seed, KmcOptions opt = {});

  /// One event; returns the event and its waiting time.
  KmcEvent step();
  /// Run until macroscopic time t; the configuration is the state at t.
  void advance_to(double t);

  [[nodiscard]] double time() const { return time_; }
  /// Current state (materialized from the simulator's padded buffer).
  [[nodiscard]] const Configuration& configuration() const;
  /// Configuration::to_index() of the current state without materializing it.
  [[nodiscard]] std::uint64_t state_index() const;
  [[nodiscard]] std::size_t particle_count() const { return count_; }
  [[nodiscard]] std::uint64_t events() const { return events_; }
  [[nodiscard]] std::size_t discordant_bonds() const { return bonds_.size(); }
  [[nodiscard]] double total_rate() const;
  /// Total rate recomputed from the configuration alone.
  [[nodiscard]] double recomputed_total_rate() const;
  /// Largest relative gap between cached and recomputed totals over all audits.
  [[nodiscard]] double max_audit_error() const { return max_audit_error_; }
  [[nodiscard]] std::uint64_t audits() const { return audits_; }
  /// Compare cached and recomputed totals, record the gap, rebuild the tree.
  void audit();

 private:
  // Site x lives at ext_[x + pad_]; pad_ ghost cells on each side mirror the
  // opposite end of the torus so windows and bonds read contiguous memory.
  [[nodiscard]] std::uint8_t at(std::ptrdiff_t x) const {
    return ext_[static_cast<std::size_t>(x + pad_)];
  }
  void put(std::size_t x, std::uint8_t v);
  [[nodiscard]] std::size_t wrap(std::ptrdiff_t x) const {
    const auto n = static_cast<std::ptrdiff_t>(N_);
    if (x < 0) x += n;
    else if (x >= n) x -= n;
    return static_cast<std::size_t>(x);
  }
  void fire(double u);
  void refresh_bond(std::size_t b);
  void refresh_sites(std::ptrdiff_t lo, std::ptrdiff_t hi);
  [[nodiscard]] double site_rate(std::size_t x) const;

  const CylinderRate* c_;
  KmcOptions opt_;
  Rng rng_;
  std::size_t N_;
  std::ptrdiff_t M_;
  std::ptrdiff_t pad_;
  double bond_rate_;
  double inv_bond_rate_;
  bool constant_rate_;  // every window has the same rate: flips never need refreshing
  std::vector<std::uint8_t> ext_;
  std::size_t count_ = 0;
  std::vector<std::uint32_t> bonds_;     // discordant bonds
  std::vector<std::int64_t> bond_slot_;  // position in bonds_ or -1
  FenwickTree flips_;
  double time_ = 0.0;
  std::uint64_t events_ = 0;
  std::uint64_t since_audit_ = 0;
  std::uint64_t audits_ = 0;
  double max_audit_error_ = 0.0;
  mutable Configuration view_;
  mutable bool view_stale_ = true;
};

struct SimParams {
  std::size_t N = 0;
  double horizon = 0.0;
  std::uint64_t seed = 0;
  std::vector<double> record_times;
  std::size_t cells = 1;  // block-average cells of recorded frames
  KmcOptions options{};

  /// frames + 1 equally spaced record times over [0, horizon].
  static SimParams uniform(std::size_t N, double horizon, std::size_t frames, std::size_t cells,
                           std::uint64_t seed);
  /// Throws DomainError on inconsistent parameters for model half width M.
  void validate(int M) const;
};

/// Independent Bernoulli(gamma(x/N)) occupations; gamma given on cells is
/// read piecewise constant.
Configuration sample_profile_configuration(const DensityField& gamma, std::size_t N, Rng& rng);
Configuration sample_profile_configuration(const std::function<double(double)>& gamma,
                                           std::size_t N, Rng& rng);

/// Block-averaged frames at every record time; deterministic given the seed.
Trajectory simulate_trajectory(const Configuration& eta0, const RateModel& m, const SimParams& p);

/// Configurations after `burn_in`, then every `thin` time units, started from
/// a Bernoulli(1/2) product configuration.
std::vector<Configuration> stationary_configurations(const RateModel& m, const SimParams& p,
                                                     double burn_in, std::size_t count,
                                                     double thin);
std::vector<DensityField> stationary_samples(const RateModel& m, const SimParams& p,
                                             double burn_in, std::size_t count, double thin);

struct ExactStationary {
  std::vector<double> probabilities;  // indexed by Configuration::to_index()
  double residual = 0.0;              // max |(mu^T L)_s|
};

/// Unique invariant law of the chain for N <= 12 by a sparse LU solve of the
/// transposed generator with the normalization row. Throws NumericalError if
/// the residual exceeds 1e-10 or the vector has a negative entry.
ExactStationary exact_stationary_small(const RateModel& m, std::size_t N);

/// Time-weighted occupation frequencies of every configuration along one
/// simulated run of `events` events (after `burn_events` discarded events).
std::vector<double> occupation_histogram(const RateModel& m, std::size_t N,
                                         std::uint64_t events, std::uint64_t seed,
                                         std::uint64_t burn_events = 10'000);

double total_variation(const std::vector<double>& p, const std::vector<double>& q);

}  // namespace gk
