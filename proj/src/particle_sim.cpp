#include "gklab/particle_sim.hpp"

#include <Eigen/Sparse>
#include <Eigen/SparseLU>
#include <algorithm>
#include <cmath>

#include "gklab/errors.hpp"
#include "gklab/hash.hpp"

namespace gk {

// ------------------------------------------------------------- Configuration

Configuration::Configuration(std::size_t N, bool fill)
    : occ_(N, fill ? 1 : 0), count_(fill ? N : 0) {}

Configuration Configuration::from_string(const std::string& bits) {
  Configuration c(bits.size());
  for (std::size_t x = 0; x < bits.size(); ++x) {
    if (bits[x] != '0' && bits[x] != '1')
      throw DomainError("configuration string must be binary: '" + bits + "'");
    c.set(static_cast<std::ptrdiff_t>(x), bits[x] == '1');
  }
  return c;
}

Configuration Configuration::from_index(std::uint64_t index, std::size_t N) {
  if (N > 63) throw DomainError("configuration index needs N <= 63");
  Configuration c(N);
  for (std::size_t x = 0; x < N; ++x)
    if ((index >> x) & 1u) c.set(static_cast<std::ptrdiff_t>(x), true);
  return c;
}

void Configuration::set(std::ptrdiff_t x, bool v) {
  auto& cell = occ_[wrap(x)];
  if ((cell != 0) == v) return;
  cell = v ? 1 : 0;
  if (v)
    ++count_;
  else
    --count_;
}

void Configuration::flip(std::ptrdiff_t x) { set(x, !(*this)[x]); }

std::uint64_t Configuration::to_index() const {
  std::uint64_t idx = 0;
  for (std::size_t x = 0; x < occ_.size() && x < 64; ++x)
    idx |= static_cast<std::uint64_t>(occ_[x]) << x;
  return idx;
}

std::string Configuration::to_string() const {
  std::string s(occ_.size(), '0');
  for (std::size_t x = 0; x < occ_.size(); ++x)
    if (occ_[x]) s[x] = '1';
  return s;
}

EmpiricalMeasure Configuration::empirical() const {
  EmpiricalMeasure pi;
  pi.N = occ_.size();
  pi.sites.reserve(count_);
  for (std::size_t x = 0; x < occ_.size(); ++x)
    if (occ_[x]) pi.sites.push_back(x);
  return pi;
}

DensityField Configuration::block_average(std::size_t cells) const {
  const std::size_t N = occ_.size();
  if (cells == 0 || cells > N)
    throw DomainError("block_average: need 1 <= cells <= N (cells=" + std::to_string(cells) +
                      ", N=" + std::to_string(N) + ")");
  DensityField f(cells);
  for (std::size_t j = 0; j < cells; ++j) {
    const std::size_t lo = j * N / cells, hi = (j + 1) * N / cells;
    std::size_t s = 0;
    for (std::size_t x = lo; x < hi; ++x) s += occ_[x];
    f[j] = static_cast<double>(s) / static_cast<double>(hi - lo);
  }
  return f;
}

std::uint32_t Configuration::window(std::ptrdiff_t x, int M) const {
  std::uint32_t w = 0;
  for (int i = 0; i <= 2 * M; ++i)
    if ((*this)[x + i - M]) w |= 1u << i;
  return w;
}

// ------------------------------------------------------------ reference step

std::vector<double> elementary_rates(const Configuration& eta, const RateModel& m,
                                     const KmcOptions& opt) {
  const std::size_t N = eta.size();
  const CylinderRate& c = m.cylinder();
  const double bond = 0.5 * static_cast<double>(N) * static_cast<double>(N);
  std::vector<double> r(2 * N, 0.0);
  for (std::size_t x = 0; x < N; ++x) {
    const auto sx = static_cast<std::ptrdiff_t>(x);
    if (opt.exchange && eta[sx] != eta[sx + 1]) r[x] = bond;
    if (opt.flips) r[N + x] = c.rate(eta.window(sx, c.half_width()));
  }
  return r;
}

KmcEvent kmc_step(Configuration& eta, const RateModel& m, Rng& rng, const KmcOptions& opt) {
  const auto rates = elementary_rates(eta, m, opt);
  double total = 0.0;
  for (double r : rates) total += r;
  KmcEvent ev;
  if (total <= 0.0) return ev;
  ev.wait = rng.exponential(total);
  double u = rng.uniform() * total;
  std::size_t k = 0;
  for (; k + 1 < rates.size(); ++k) {
    if (u < rates[k]) break;
    u -= rates[k];
  }
  while (rates[k] == 0.0) --k;  // rounding at the top end
  const std::size_t N = eta.size();
  if (k < N) {
    ev.kind = KmcEvent::Kind::exchange;
    ev.site = k;
    const auto x = static_cast<std::ptrdiff_t>(k);
    eta.flip(x);
    eta.flip(x + 1);
  } else {
    ev.kind = KmcEvent::Kind::flip;
    ev.site = k - N;
    eta.flip(static_cast<std::ptrdiff_t>(k - N));
  }
  return ev;
}

// -------------------------------------------------------------- KmcSimulator

KmcSimulator::KmcSimulator(Configuration eta, const RateModel& m, std::uint64_t seed,
                           KmcOptions opt)
    : c_(&m.cylinder()),
      opt_(opt),
      rng_(seed),
      N_(eta.size()),
      M_(c_->half_width()),
      pad_(c_->half_width() + 1),
      bond_rate_(0.5 * static_cast<double>(N_) * static_cast<double>(N_)),
      inv_bond_rate_(1.0 / bond_rate_),
      constant_rate_(std::all_of(c_->table().begin(), c_->table().end(),
                                 [&](double r) { return r == c_->table().front(); })) {
  if (N_ < static_cast<std::size_t>(c_->window_size()) || N_ < static_cast<std::size_t>(pad_))
    throw DomainError("simulator: N=" + std::to_string(N_) + " is smaller than the rate window");
  ext_.assign(N_ + 2 * static_cast<std::size_t>(pad_), 0);
  for (std::size_t x = 0; x < N_; ++x) put(x, eta[static_cast<std::ptrdiff_t>(x)] ? 1 : 0);
  count_ = eta.particle_count();
  bond_slot_.assign(N_, -1);
  for (std::size_t b = 0; b < N_; ++b) refresh_bond(b);
  std::vector<double> w(N_);
  for (std::size_t x = 0; x < N_; ++x) w[x] = site_rate(x);
  flips_.assign(std::move(w));
}

void KmcSimulator::put(std::size_t x, std::uint8_t v) {
  const auto p = static_cast<std::size_t>(pad_);
  ext_[x + p] = v;
  if (x < p) ext_[x + p + N_] = v;
  if (x + p >= N_) ext_[x + p - N_] = v;
}

const Configuration& KmcSimulator::configuration() const {
  if (view_stale_) {
    view_ = Configuration(N_);
    for (std::size_t x = 0; x < N_; ++x)
      if (at(static_cast<std::ptrdiff_t>(x))) view_.set(static_cast<std::ptrdiff_t>(x), true);
    view_stale_ = false;
  }
  return view_;
}

std::uint64_t KmcSimulator::state_index() const {
  std::uint64_t idx = 0;
  for (std::size_t x = 0; x < N_ && x < 64; ++x)
    idx |= static_cast<std::uint64_t>(at(static_cast<std::ptrdiff_t>(x))) << x;
  return idx;
}

double KmcSimulator::site_rate(std::size_t x) const {
  if (!opt_.flips) return 0.0;
  const std::uint8_t* w = &ext_[x + static_cast<std::size_t>(pad_ - M_)];
  std::uint32_t idx = 0;
  for (std::ptrdiff_t i = 0; i <= 2 * M_; ++i) idx |= static_cast<std::uint32_t>(w[i]) << i;
  return c_->rate(idx);
}

void KmcSimulator::refresh_bond(std::size_t b) {
  const auto x = static_cast<std::ptrdiff_t>(b);
  const bool want = opt_.exchange && at(x) != at(x + 1);
  const bool have = bond_slot_[b] >= 0;
  if (want == have) return;
  if (want) {
    bond_slot_[b] = static_cast<std::int64_t>(bonds_.size());
    bonds_.push_back(static_cast<std::uint32_t>(b));
  } else {
    const auto slot = static_cast<std::size_t>(bond_slot_[b]);
    const std::uint32_t last = bonds_.back();
    bonds_[slot] = last;
    bond_slot_[last] = static_cast<std::int64_t>(slot);
    bonds_.pop_back();
    bond_slot_[b] = -1;
  }
}

void KmcSimulator::refresh_sites(std::ptrdiff_t lo, std::ptrdiff_t hi) {
  if (!opt_.flips || constant_rate_) return;
  if (hi - lo + 1 >= static_cast<std::ptrdiff_t>(N_)) {
    lo = 0;
    hi = static_cast<std::ptrdiff_t>(N_) - 1;
  }
  for (std::ptrdiff_t x = lo; x <= hi; ++x) {
    const std::size_t s = wrap(x);
    flips_.set(s, site_rate(s));
  }
}

double KmcSimulator::total_rate() const {
  return bond_rate_ * static_cast<double>(bonds_.size()) + flips_.total();
}

double KmcSimulator::recomputed_total_rate() const {
  double bonds = 0.0, flips = 0.0;
  for (std::size_t x = 0; x < N_; ++x) {
    const auto sx = static_cast<std::ptrdiff_t>(x);
    if (opt_.exchange && at(sx) != at(sx + 1)) bonds += bond_rate_;
    flips += site_rate(x);
  }
  return bonds + flips;
}

void KmcSimulator::audit() {
  const double fresh = recomputed_total_rate();
  const double cached = total_rate();
  if (fresh > 0.0) max_audit_error_ = std::max(max_audit_error_, std::abs(cached - fresh) / fresh);
  flips_.rebuild();
  since_audit_ = 0;
  ++audits_;
}

void KmcSimulator::fire(double u) {
  const double exchange_total = bond_rate_ * static_cast<double>(bonds_.size());
  if (u < exchange_total) {
    auto slot = static_cast<std::size_t>(u * inv_bond_rate_);
    if (slot >= bonds_.size()) slot = bonds_.size() - 1;
    const std::size_t b = bonds_[slot];
    const auto x = static_cast<std::ptrdiff_t>(b);
    const std::size_t y = wrap(x + 1);
    const std::uint8_t vx = at(x);
    put(b, at(x + 1));
    put(y, vx);
    refresh_bond(wrap(x - 1));
    refresh_bond(y);
    refresh_sites(x - M_, x + 1 + M_);
  } else {
    const std::size_t s = flips_.find(u - exchange_total);
    const auto x = static_cast<std::ptrdiff_t>(s);
    const std::uint8_t v = at(x) ^ 1u;
    put(s, v);
    if (v)
      ++count_;
    else
      --count_;
    refresh_bond(wrap(x - 1));
    refresh_bond(s);
    refresh_sites(x - M_, x + M_);
  }
  view_stale_ = true;
  ++events_;
  if (++since_audit_ >= opt_.audit_interval) audit();
}

KmcEvent KmcSimulator::step() {
  KmcEvent ev;
  const double total = total_rate();
  if (total <= 0.0) return ev;
  ev.wait = rng_.exponential(total);
  const double u = rng_.uniform() * total;
  const double exchange_total = bond_rate_ * static_cast<double>(bonds_.size());
  if (u < exchange_total) {
    ev.kind = KmcEvent::Kind::exchange;
    const auto slot = static_cast<std::size_t>(u * inv_bond_rate_);
    ev.site = bonds_[std::min(slot, bonds_.size() - 1)];
  } else {
    ev.kind = KmcEvent::Kind::flip;
    ev.site = flips_.find(u - exchange_total);
  }
  time_ += ev.wait;
  fire(u);
  return ev;
}

void KmcSimulator::advance_to(double t) {
  while (time_ < t) {
    const double total = total_rate();
    if (total <= 0.0) {
      time_ = t;
      return;
    }
    const double wait = rng_.exponential(total);
    if (time_ + wait > t) {
      // Memorylessness: the pending event is simply redrawn after t.
      time_ = t;
      return;
    }
    time_ += wait;
    fire(rng_.uniform() * total);
  }
}

// ------------------------------------------------------------------ drivers

SimParams SimParams::uniform(std::size_t N, double horizon, std::size_t frames, std::size_t cells,
                             std::uint64_t seed) {
  SimParams p;
  p.N = N;
  p.horizon = horizon;
  p.seed = seed;
  p.record_times = uniform_times(horizon, frames);
  p.cells = cells;
  return p;
}

void SimParams::validate(int M) const {
  if (N < static_cast<std::size_t>(2 * M + 1))
    throw DomainError("simulation: N=" + std::to_string(N) + " is smaller than the rate window " +
                      std::to_string(2 * M + 1));
  if (!(horizon >= 0.0)) throw DomainError("simulation: horizon must be nonnegative");
  if (cells == 0 || cells > N) throw DomainError("simulation: need 1 <= cells <= N");
  double prev = 0.0;
  for (double t : record_times) {
    if (t < prev || t > horizon * (1.0 + 1e-12))
      throw DomainError("simulation: record times must be sorted within [0, horizon]");
    prev = t;
  }
}

Configuration sample_profile_configuration(const DensityField& gamma, std::size_t N, Rng& rng) {
  gamma.require_unit_interval("sample_profile_configuration");
  const std::size_t J = gamma.size();
  Configuration c(N);
  for (std::size_t x = 0; x < N; ++x) {
    const std::size_t j = std::min(J - 1, x * J / N);
    c.set(static_cast<std::ptrdiff_t>(x), rng.bernoulli(gamma[j]));
  }
  return c;
}

Configuration sample_profile_configuration(const std::function<double(double)>& gamma,
                                           std::size_t N, Rng& rng) {
  Configuration c(N);
  for (std::size_t x = 0; x < N; ++x) {
    const double g = gamma(static_cast<double>(x) / static_cast<double>(N));
    if (!(g >= 0.0 && g <= 1.0))
      throw DomainError("sample_profile_configuration: profile value outside [0, 1]");
    c.set(static_cast<std::ptrdiff_t>(x), rng.bernoulli(g));
  }
  return c;
}

Trajectory simulate_trajectory(const Configuration& eta0, const RateModel& m, const SimParams& p) {
  p.validate(m.cylinder().half_width());
  if (eta0.size() != p.N) throw DomainError("simulate_trajectory: configuration size differs from N");
  KmcSimulator sim(eta0, m, p.seed, p.options);
  Trajectory out;
  for (double t : p.record_times) {
    sim.advance_to(t);
    out.times.push_back(t);
    out.frames.push_back(sim.configuration().block_average(p.cells));
  }
  return out;
}

std::vector<Configuration> stationary_configurations(const RateModel& m, const SimParams& p,
                                                     double burn_in, std::size_t count,
                                                     double thin) {
  p.validate(m.cylinder().half_width());
  if (!(burn_in > 0.0) || !(thin > 0.0))
    throw DomainError("stationary_samples: burn_in and thin must be positive");
  Rng init(derive_seed(p.seed, 0x5eed));
  Configuration eta(p.N);
  for (std::size_t x = 0; x < p.N; ++x) eta.set(static_cast<std::ptrdiff_t>(x), init.bernoulli(0.5));
  KmcSimulator sim(std::move(eta), m, p.seed, p.options);
  std::vector<Configuration> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    sim.advance_to(burn_in + thin * static_cast<double>(i));
    out.push_back(sim.configuration());
  }
  return out;
}

std::vector<DensityField> stationary_samples(const RateModel& m, const SimParams& p,
                                             double burn_in, std::size_t count, double thin) {
  std::vector<DensityField> out;
  for (const auto& c : stationary_configurations(m, p, burn_in, count, thin))
    out.push_back(c.block_average(p.cells));
  return out;
}

// ---------------------------------------------------------------- exact law

ExactStationary exact_stationary_small(const RateModel& m, std::size_t N) {
  const CylinderRate& c = m.cylinder();
  if (N > 12) throw DomainError("exact_stationary_small: N must be at most 12");
  if (N < static_cast<std::size_t>(c.window_size()))
    throw DomainError("exact_stationary_small: N is smaller than the rate window");
  const std::size_t S = std::size_t{1} << N;
  using Sp = Eigen::SparseMatrix<double>;
  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve(S * (2 * N + 1));
  // Column s of L^T holds the rates out of s: L^T(s', s) = q(s -> s').
  for (std::size_t s = 0; s < S; ++s) {
    const Configuration eta = Configuration::from_index(s, N);
    const auto rates = elementary_rates(eta, m);
    double out = 0.0;
    for (std::size_t k = 0; k < 2 * N; ++k) {
      if (rates[k] == 0.0) continue;
      std::uint64_t target;
      if (k < N)
        target = s ^ (std::uint64_t{1} << k) ^ (std::uint64_t{1} << ((k + 1) % N));
      else
        target = s ^ (std::uint64_t{1} << (k - N));
      trip.emplace_back(static_cast<int>(target), static_cast<int>(s), rates[k]);
      out += rates[k];
    }
    trip.emplace_back(static_cast<int>(s), static_cast<int>(s), -out);
  }
  Sp LT(static_cast<int>(S), static_cast<int>(S));
  LT.setFromTriplets(trip.begin(), trip.end());

  std::vector<Eigen::Triplet<double>> trip2;
  trip2.reserve(trip.size() + S);
  for (const auto& t : trip)
    if (t.row() != 0) trip2.push_back(t);
  for (std::size_t s = 0; s < S; ++s) trip2.emplace_back(0, static_cast<int>(s), 1.0);
  Sp A(static_cast<int>(S), static_cast<int>(S));
  A.setFromTriplets(trip2.begin(), trip2.end());
  A.makeCompressed();

  Eigen::SparseLU<Sp> lu;
  lu.compute(A);
  if (lu.info() != Eigen::Success)
    throw NumericalError("exact_stationary_small: generator is singular (reducible chain)");
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(static_cast<int>(S));
  rhs[0] = 1.0;
  Eigen::VectorXd mu = lu.solve(rhs);

  ExactStationary res;
  const Eigen::VectorXd r = LT * mu;
  res.residual = r.cwiseAbs().maxCoeff();
  if (res.residual > 1e-10)
    throw NumericalError("exact_stationary_small: residual " + exact(res.residual) +
                         " exceeds 1e-10");
  res.probabilities.assign(mu.data(), mu.data() + S);
  for (double& p : res.probabilities) {
    if (p < -1e-12)
      throw NumericalError("exact_stationary_small: negative stationary mass " + exact(p));
    p = std::max(p, 0.0);
  }
  return res;
}

std::vector<double> occupation_histogram(const RateModel& m, std::size_t N, std::uint64_t events,
                                         std::uint64_t seed, std::uint64_t burn_events) {
  if (N > 20) throw DomainError("occupation_histogram: N must be at most 20");
  Rng init(derive_seed(seed, 0x0cc));
  Configuration eta(N);
  for (std::size_t x = 0; x < N; ++x) eta.set(static_cast<std::ptrdiff_t>(x), init.bernoulli(0.5));
  KmcSimulator sim(std::move(eta), m, seed);
  for (std::uint64_t i = 0; i < burn_events; ++i) sim.step();
  std::vector<double> hist(std::size_t{1} << N, 0.0);
  double total = 0.0;
  for (std::uint64_t i = 0; i < events; ++i) {
    const std::uint64_t idx = sim.state_index();
    const KmcEvent ev = sim.step();
    hist[idx] += ev.wait;
    total += ev.wait;
  }
  if (total > 0.0)
    for (double& h : hist) h /= total;
  return hist;
}

double total_variation(const std::vector<double>& p, const std::vector<double>& q) {
  if (p.size() != q.size()) throw DomainError("total_variation: size mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) s += std::abs(p[i] - q[i]);
  return 0.5 * s;
}

}  // namespace gk
