// Acceptance run: one PASS/FAIL line per criterion. Criteria can be selected
// by number on the command line (default: all nine). The exit status is
// non-zero when any selected criterion fails.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <numbers>
#include <set>
#include <stdexcept>
#include <sstream>
#include <string>
#include <vector>

#include "gklab/functionals.hpp"
#include "gklab/lab.hpp"
#include "gklab/particle_sim.hpp"
#include "gklab/pde.hpp"
#include "gklab/random.hpp"
#include "gklab/smoothing.hpp"

namespace {

constexpr double kPi = std::numbers::pi;

struct Outcome {
  bool pass = false;
  std::string detail;
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4g", v);
  return buf;
}

std::string fmt_list(const std::vector<double>& v) {
  std::string s = "[";
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? ", " : "") + fmt(v[i]);
  return s + "]";
}

gk::PdeParams params(std::size_t J, double dt, std::size_t frames) {
  gk::PdeParams p;
  p.J = J;
  p.dt = dt;
  p.frames = frames;
  return p;
}

gk::ExperimentConfig base_config(const std::string& experiment) {
  gk::ExperimentConfig cfg;
  cfg.experiment = experiment;
  cfg.output_dir = "acceptance_out/" + experiment;
  return cfg;
}

std::vector<gk::ResultRecord> run_and_store(const gk::ExperimentConfig& cfg, const std::string& tag) {
  gk::RunOptions opt;
  opt.log = [](const std::string& s) { std::fprintf(stderr, "  %s\n", s.c_str()); };
  auto records = gk::run_experiment(cfg, opt);
  gk::write_records(records, cfg, "acceptance_out/" + tag);
  return records;
}

const gk::Json& summary(const std::vector<gk::ResultRecord>& records, const std::string& type) {
  for (const auto& r : records)
    if (r.type == type) return r.payload;
  throw std::runtime_error("no " + type + " record");
}

// 1. Simulation vs PDE at T = 1 for c = 1 from the bump profile.
Outcome criterion_hydro() {
  const auto t0 = Clock::now();
  auto cfg = base_config("hydro");
  cfg.model.preset = "constant";
  cfg.N = {128, 256, 512, 1024};
  cfg.seeds = {1, 2, 3};
  cfg.J = 256;
  cfg.T = 1.0;
  cfg.cells = 4;
  cfg.gamma_profile = "bump";
  const auto records = run_and_store(cfg, "hydro");
  const auto& s = summary(records, "hydro_summary");
  std::vector<double> med;
  for (const auto& v : s["median_l1"]) med.push_back(v.is_null() ? NAN : v.get<double>());
  const double wall = seconds_since(t0);
  const bool decreasing = s["strictly_decreasing"].get<bool>();
  const bool small = med.size() == 4 && med.back() < 0.03;
  return {decreasing && small && wall < 600.0,
          "median L1 over N=128..1024 " + fmt_list(med) + " (strictly decreasing, last < 0.03), wall " + fmt(wall) +
              " s (< 600)"};
}

// 2. Stationary snapshots at N = 512 for c = 1 and the double well.
Outcome criterion_hydrostatics() {
  const auto t0 = Clock::now();
  auto cfg = base_config("hydrostatic");
  cfg.N = {512};
  cfg.seeds = {1};
  cfg.burn_in = 50.0;
  cfg.snapshots = 200;
  cfg.thin = 0.05;
  cfg.model.preset = "constant";
  const auto flat = run_and_store(cfg, "hydrostatic_constant");
  cfg.model.preset = "double_well";
  cfg.model.a = 1.0;
  cfg.model.b = 4.0;
  const auto well = run_and_store(cfg, "hydrostatic_double_well");
  const double dE = summary(flat, "hydrostatic_summary")["median_distance_E"].get<double>();
  const double dC = summary(well, "hydrostatic_summary")["median_distance_constants"].get<double>();
  const double wall = seconds_since(t0);
  return {dE < 0.05 && dC < 0.1 && wall < 1200.0,
          "c=1 median d(snapshot, E) " + fmt(dE) + " (< 0.05); double well median distance to {1/4,1/2,3/4} " +
              fmt(dC) + " (< 0.1); wall " + fmt(wall) + " s (< 1200)"};
}

// 3. The rate vanishes on a hydrodynamic solution and not on a perturbed one.
Outcome criterion_rate_zero() {
  const auto m = gk::make_double_well(1.0, 4.0);
  const std::size_t J = 64;
  const double T = 1.0;
  const auto gamma = gk::control_initial(J);
  const auto sol = gk::solve_cauchy(gamma, m, T, params(J, 1e-4, 200));
  const double zero = gk::rate_variational(sol, gamma, m, {8, 16}).value;
  auto bumped = sol;
  for (std::size_t n = 0; n < bumped.frames.size(); ++n) {
    if (bumped.times[n] <= 0.5 * T) continue;
    for (std::size_t j = 0; j < J; ++j) {
      const double u = gk::DensityField::center(j, J);
      bumped.frames[n][j] = std::clamp(bumped.frames[n][j] + 0.1 * std::sin(2 * kPi * u), 0.0, 1.0);
    }
  }
  const double pos = gk::rate_variational(bumped, gamma, m, {8, 16}).value;
  return {zero < 1e-4 && pos > 1e-2,
          "I(solution) " + fmt(zero) + " (< 1e-4), I(perturbed) " + fmt(pos) + " (> 1e-2)"};
}

// 4. Variational, explicit and homogeneous routes agree.
Outcome criterion_routes() {
  auto cfg = base_config("rate-consistency");
  cfg.model.preset = "double_well";
  cfg.J = 64;
  cfg.dt = 1e-5;
  cfg.T = 1.0;
  cfg.basis = {8, 16};
  const auto records = run_and_store(cfg, "rate_consistency");
  const auto& s = summary(records, "rate_summary");
  const double gap = s["max_relative_gap"].get<double>();
  const double rt = s["max_roundtrip_sup"].get<double>();
  const double held = s["max_held_relative_error"].get<double>();
  // The closed form at c = 1, r = 1/4, T = 1 through both general routes.
  const auto c1 = gk::make_constant();
  gk::Trajectory quarter;
  quarter.times = gk::uniform_times(1.0, 100);
  quarter.frames.assign(101, gk::DensityField(16, 0.25));
  const double oracle = 0.13397459621556135;
  const double v = gk::rate_variational(quarter, quarter.frames[0], c1).value;
  const double e = gk::rate_explicit_smooth(quarter, c1).value;
  const double q = std::max(std::abs(v - oracle), std::abs(e - oracle)) / oracle;
  return {gap < 0.03 && rt < 1e-3 && held < 0.02 && q < 0.02,
          "max |var-exp|/exp " + fmt(gap) + " (< 0.03), round-trip sup " + fmt(rt) + " (< 1e-3), held paths " +
              fmt(held) + " (< 0.02), c=1 r=1/4 variational " + fmt(v) + " explicit " + fmt(e) + " vs 0.13397"};
}

std::vector<std::pair<gk::Trajectory, gk::DensityField>> energy_paths(std::size_t J, std::size_t K,
                                                                       const gk::RateModel& m) {
  std::vector<std::pair<gk::Trajectory, gk::DensityField>> out;
  const auto gamma = gk::control_initial(J);
  for (const auto& H : gk::control_family())
    out.emplace_back(gk::solve_controlled(gamma, m, H, 1.0, params(J, 1e-4, K)), gamma);
  for (double jump : {0.1, 0.2, 0.3}) {
    gk::Trajectory step;
    step.times = gk::uniform_times(1.0, K);
    for (double t : step.times)
      step.frames.push_back(gk::DensityField::from_function(J, [&](double u) {
        const double h = t < 0.5 ? jump : 0.5 * jump;
        return (u >= 0.25 && u < 0.75) ? 0.5 + h : 0.5 - h;
      }));
    auto smooth = gk::mollify_spacetime(step, gk::MollifierSpec::make(0.1, 0.05));
    gk::DensityField g0 = smooth.frames.front();
    out.emplace_back(std::move(smooth), g0);
  }
  return out;
}

// 5. Weighted energy over (rate + 1) stays bounded under refinement.
Outcome criterion_energy() {
  const auto m = gk::make_double_well(1.0, 4.0);
  auto max_ratio = [&](std::size_t J, std::size_t K) {
    double worst = 0.0;
    bool finite = true;
    for (const auto& [path, gamma] : energy_paths(J, K, m)) {
      const auto eb = gk::energy_bound_check(path, gamma, m, 0.01, {8, 16});
      finite = finite && std::isfinite(eb.ratio);
      worst = std::max(worst, eb.ratio);
    }
    return std::pair{worst, finite};
  };
  const auto [coarse, f1] = max_ratio(64, 200);
  const auto [fine, f2] = max_ratio(128, 400);
  const double change = std::abs(fine - coarse) / coarse;
  return {f1 && f2 && change < 0.1,
          "max ratio " + fmt(coarse) + " at (J,K)=(64,200), " + fmt(fine) + " at (128,400), change " + fmt(change) +
              " (< 0.1)"};
}

// 6. Long-run occupation frequencies against the exact invariant law.
Outcome criterion_exact() {
  bool pass = true;
  std::string detail;
  double uniform_err = 0.0;
  for (std::size_t N : {6, 8, 10}) {
    const auto e = gk::exact_stationary_small(gk::make_constant(), N);
    const double u = 1.0 / static_cast<double>(e.probabilities.size());
    for (double p : e.probabilities) uniform_err = std::max(uniform_err, std::abs(p - u));
  }
  pass = pass && uniform_err < 1e-10;
  detail = "c=1 exact law uniform to " + fmt(uniform_err) + " (< 1e-10); TV";
  for (const auto& m : {gk::make_constant(), gk::make_pair_interaction(2.0)}) {
    for (std::size_t N : {6, 8, 10}) {
      const auto e = gk::exact_stationary_small(m, N);
      const auto h = gk::occupation_histogram(m, N, 20'000'000, 100 + N);
      const double tv = gk::total_variation(e.probabilities, h);
      pass = pass && tv < 0.02;
      detail += " " + m.name() + "/N=" + std::to_string(N) + " " + fmt(tv);
    }
  }
  return {pass, detail + " (each < 0.02)"};
}

// 7. The composed smoothing pipeline recovers the rate of a finite-rate path.
Outcome criterion_idensity() {
  auto cfg = base_config("idensity");
  cfg.model.preset = "double_well";
  cfg.J = 64;
  cfg.T = 1.0;
  const auto records = run_and_store(cfg, "idensity");
  for (const auto& r : records) {
    if (r.type != "idensity_summary" || r.payload["path"] != "controlled") continue;
    const double gap = r.payload["final_gap"].get<double>();
    const bool mono = r.payload["distance_decreasing"].get<bool>();
    return {gap < 0.1 && mono, "controlled benchmark (I = " + fmt(r.payload["base_rate"].get<double>()) +
                                   "): finest relative gap " + fmt(gap) + " (< 0.1), distance monotone " +
                                   (mono ? "yes" : "no")};
  }
  return {false, "no summary for the controlled benchmark"};
}

// 8. Concavity and gradient of J_G; finite-difference vs mild scheme.
Outcome criterion_hygiene() {
  gk::Rng rng(2024);
  const auto dw = gk::make_double_well(1.0, 4.0);
  std::size_t concave_fail = 0, grad_fail = 0;
  double worst_grad = 0.0;
  for (int inst = 0; inst < 100; ++inst) {
    gk::Trajectory p;
    p.times = gk::uniform_times(1.0, 6);
    for (std::size_t n = 0; n <= 6; ++n) {
      gk::DensityField f(12);
      for (std::size_t j = 0; j < 12; ++j) f[j] = rng.uniform();
      p.frames.push_back(f);
    }
    gk::DensityField gamma(12);
    for (std::size_t j = 0; j < 12; ++j) gamma[j] = rng.uniform();
    gk::JGFunctional f(p, gamma, dw, {2, 3});
    std::vector<double> a(f.size()), b(f.size()), mix(f.size()), g(f.size());
    for (auto& v : a) v = 2.0 * rng.uniform() - 1.0;
    for (auto& v : b) v = 2.0 * rng.uniform() - 1.0;
    const double th = rng.uniform();
    for (std::size_t c = 0; c < f.size(); ++c) mix[c] = th * a[c] + (1 - th) * b[c];
    if (f.value(mix) < th * f.value(a) + (1 - th) * f.value(b) - 1e-9) ++concave_fail;
    (void)f.value_gradient(a, g);
    for (std::size_t c = 0; c < f.size(); ++c) {
      const double h = 1e-5;
      auto up = a, dn = a;
      up[c] += h;
      dn[c] -= h;
      const double err = std::abs((f.value(up) - f.value(dn)) / (2 * h) - g[c]) / std::max(1.0, std::abs(g[c]));
      worst_grad = std::max(worst_grad, err);
      if (err > 1e-5) ++grad_fail;
    }
  }
  double worst_scheme = 0.0;
  const auto gamma = gk::DensityField::from_function(64, [](double u) { return 0.5 + 0.3 * std::sin(2 * kPi * u); });
  for (const auto& m : {gk::make_constant(), gk::make_double_well(1.0, 4.0), gk::make_pair_interaction(2.0),
                        gk::make_neutral()}) {
    auto p = params(64, 2.5e-5, 10);
    const auto fd = gk::solve_cauchy(gamma, m, 0.5, p);
    const auto mild = gk::solve_mild_picard(gamma, m, 0.5, p);
    worst_scheme = std::max(worst_scheme, gk::trajectory_sup(fd, mild));
  }
  return {concave_fail == 0 && grad_fail == 0 && worst_scheme < 1e-4,
          "concavity violations " + std::to_string(concave_fail) + "/100, gradient mismatches " +
              std::to_string(grad_fail) + " (worst rel " + fmt(worst_grad) + ", tol 1e-5), fd vs mild sup " +
              fmt(worst_scheme) + " over 4 presets (< 1e-4)"};
}

// 9. Monte Carlo tail of the mean density against the homogeneous rate.
Outcome criterion_ldp() {
  const auto t0 = Clock::now();
  auto cfg = base_config("ldp-scan");
  cfg.model.preset = "constant";
  cfg.T = 0.5;
  cfg.ldp_threshold = 0.6;
  cfg.N = {64, 128};
  cfg.seeds = {1};
  cfg.replicas = 8000;
  const auto records = run_and_store(cfg, "ldp_scan");
  const auto& s = summary(records, "ldp_summary");
  std::vector<double> scaled;
  for (const auto& r : records)
    if (r.type == "ldp_point") scaled.push_back(r.payload["scaled"].is_null() ? NAN : r.payload["scaled"].get<double>());
  const double wall = seconds_since(t0);
  const bool factor = s["factor_two"].get<bool>();
  const bool stable = s["stable_25"].get<bool>();
  const double change = s["max_relative_change"].is_null() ? NAN : s["max_relative_change"].get<double>();
  return {factor && stable && wall < 1800.0,
          "-log(p)/N at N=64,128 " + fmt_list(scaled) + " vs rate " + fmt(s["rate"].get<double>()) +
              " (within factor 2: " + (factor ? "yes" : "no") + "), relative change " + fmt(change) +
              " (< 0.25), wall " + fmt(wall) + " s (< 1800)"};
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"hydrodynamic limit", criterion_hydro},  {"hydrostatics", criterion_hydrostatics},
      {"rate zero set", criterion_rate_zero},   {"three-route consistency", criterion_routes},
      {"energy bound", criterion_energy},       {"exact stationary oracle", criterion_exact},
      {"I-density harness", criterion_idensity}, {"numerical hygiene", criterion_hygiene},
      {"LDP trend", criterion_ldp}};
  std::set<std::size_t> selected;
  for (int i = 1; i < argc; ++i) selected.insert(static_cast<std::size_t>(std::atoi(argv[i])));
  int failures = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    if (!selected.empty() && !selected.contains(i + 1)) continue;
    const auto t0 = Clock::now();
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("error: ") + e.what()};
    }
    if (!o.pass) ++failures;
    std::printf("%s %zu %s: %s [%.1f s]\n", o.pass ? "PASS" : "FAIL", i + 1, criteria[i].first.c_str(),
                o.detail.c_str(), seconds_since(t0));
    std::fflush(stdout);
  }
  return failures == 0 ? 0 : 1;
}
