#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <numbers>

#include "gklab/errors.hpp"
#include "gklab/lab.hpp"
#include "gklab/metric.hpp"
#include "gklab/particle_sim.hpp"
#include "gklab/pde.hpp"
#include "gklab/random.hpp"
#include "gklab/smoothing.hpp"

namespace gk {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

double median(std::vector<double> v) {
  std::erase_if(v, [](double x) { return std::isnan(x); });
  if (v.empty()) return kNaN;
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

DensityField block_mean(const DensityField& f, std::size_t cells) {
  const std::size_t per = f.size() / cells;
  DensityField out(cells);
  for (std::size_t c = 0; c < cells; ++c) {
    double s = 0.0;
    for (std::size_t j = c * per; j < (c + 1) * per; ++j) s += f[j];
    out[c] = s / static_cast<double>(per);
  }
  return out;
}

PdeParams pde_params(std::size_t J, double dt, std::size_t frames) {
  PdeParams p;
  p.J = J;
  p.dt = dt;
  p.frames = frames;
  return p;
}

Json nan_to_null(double v) { return std::isfinite(v) ? Json(v) : Json(nullptr); }

ResultRecord make_record(const ExperimentConfig& cfg, const std::string& hash, std::string type,
                         std::uint64_t seed, Json payload) {
  ResultRecord r;
  r.type = std::move(type);
  r.experiment = cfg.experiment;
  r.config_hash = hash;
  r.seed = seed;
  r.payload = std::move(payload);
  return r;
}

ResultRecord failure_record(const ExperimentConfig& cfg, const std::string& hash,
                            std::uint64_t seed, const std::string& what, const std::string& msg) {
  return make_record(cfg, hash, "failure", seed, Json{{"task", what}, {"error", msg}});
}

void log_line(const RunOptions& opt, const std::string& s) {
  if (opt.log) opt.log(s);
}

}  // namespace

// ---------------------------------------------------------------- building blocks

std::vector<HydroPoint> hydro_errors(const RateModel& m, const std::function<double(double)>& gamma,
                                     const std::vector<std::size_t>& Ns,
                                     const std::vector<std::uint64_t>& seeds, double T,
                                     std::size_t J, double dt, std::size_t cells,
                                     std::size_t workers, std::vector<std::string>* errors) {
  if (cells == 0 || J % cells != 0) throw DomainError("hydro: cells must divide J");
  for (std::size_t N : Ns)
    if (N % cells != 0) throw DomainError("hydro: cells must divide every N");
  const auto pde = solve_cauchy(DensityField::from_function(J, gamma), m, T, pde_params(J, dt, 1));
  const DensityField target = block_mean(pde.final_frame(), cells);
  std::vector<HydroPoint> pts;
  for (std::size_t N : Ns)
    for (std::uint64_t s : seeds) pts.push_back({N, s, kNaN});
  // Largest systems first so the pool stays busy.
  std::vector<std::size_t> order(pts.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return pts[a].N > pts[b].N; });
  std::vector<std::string> errs;
  parallel_for(
      pts.size(), workers,
      [&](std::size_t k) {
        auto& pt = pts[order[k]];
        Rng rng(derive_seed(pt.seed, pt.N));
        const auto eta0 = sample_profile_configuration(gamma, pt.N, rng);
        SimParams p;
        p.N = pt.N;
        p.horizon = T;
        p.seed = derive_seed(pt.seed, pt.N + 1);
        p.record_times = {T};
        p.cells = cells;
        const auto sim = simulate_trajectory(eta0, m, p);
        pt.l1 = l1_distance(sim.final_frame(), target);
      },
      &errs);
  if (errors) {
    errors->assign(pts.size(), "");
    for (std::size_t k = 0; k < pts.size(); ++k) (*errors)[order[k]] = errs[k];
  }
  return pts;
}

std::vector<double> hydro_medians(const std::vector<HydroPoint>& pts,
                                  const std::vector<std::size_t>& Ns) {
  std::vector<double> out;
  for (std::size_t N : Ns) {
    std::vector<double> v;
    for (const auto& p : pts)
      if (p.N == N) v.push_back(p.l1);
    out.push_back(median(v));
  }
  return out;
}

std::vector<ControlField> control_family() {
  auto field = [](std::function<double(double, double)> h) -> ControlField {
    return [h = std::move(h)](double t, std::span<double> out) {
      const std::size_t J = out.size();
      for (std::size_t j = 0; j < J; ++j) out[j] = h(t, DensityField::center(j, J));
    };
  };
  return {
      field([](double t, double u) { return 0.6 * std::sin(kTwoPi * u) * std::cos(std::numbers::pi * t); }),
      field([](double t, double u) { return 0.5 * std::cos(kTwoPi * u) + 0.3 * t; }),
      field([](double t, double u) { return 0.4 * std::sin(2 * kTwoPi * u) * t + 0.2; }),
      field([](double, double u) { return -0.8 * std::cos(kTwoPi * u) * std::exp(-std::cos(kTwoPi * u)) / std::exp(1.0); }),
      field([](double t, double u) {
        return 0.5 * std::sin(kTwoPi * (u - 0.3 * t)) + 0.3 * std::cos(2 * kTwoPi * u) * std::sin(std::numbers::pi * t);
      }),
  };
}

DensityField control_initial(std::size_t J) {
  return DensityField::from_function(J, [](double u) { return 0.5 + 0.3 * std::sin(kTwoPi * u); });
}

std::vector<double> optimal_homogeneous_path(const RateModel& m, double r0, double r1, double T,
                                             std::size_t K) {
  if (!(r0 > 0.0 && r1 < 1.0 && r1 > r0)) throw DomainError("optimal path: need 0 < r0 < r1 < 1");
  if (!(T > 0.0) || K < 2) throw DomainError("optimal path: need T > 0 and K >= 2");
  // Along an optimal path H(r, p) = B(e^p - 1) + D(e^{-p} - 1) = E, and the
  // increasing branch moves at speed sqrt((B + D + E)^2 - 4 B D).
  constexpr std::size_t panels = 4000;
  static const double gx[4] = {0.0694318442029737, 0.3300094782075719, 0.6699905217924281,
                               0.9305681557970263};
  static const double gw[4] = {0.1739274225837481, 0.3260725774162519, 0.3260725774162519,
                               0.1739274225837481};
  const double h = (r1 - r0) / static_cast<double>(panels);
  auto speed = [&](double r, double E) {
    const double B = m.B(r), D = m.D(r);
    const double s = B + D + E;
    return s > 0.0 ? std::sqrt(std::max(0.0, s * s - 4.0 * B * D)) : 0.0;
  };
  auto duration = [&](double E) {
    double t = 0.0;
    for (std::size_t i = 0; i < panels; ++i)
      for (int q = 0; q < 4; ++q) {
        const double v = speed(r0 + h * (static_cast<double>(i) + gx[q]), E);
        if (v <= 0.0) return std::numeric_limits<double>::infinity();
        t += h * gw[q] / v;
      }
    return t;
  };
  double lo = 0.0;
  for (std::size_t i = 0; i <= panels; ++i) {
    const double r = r0 + h * static_cast<double>(i);
    const double g = std::sqrt(m.B(r)) - std::sqrt(m.D(r));
    lo = std::min(lo, -g * g);
  }
  if (duration(lo + 1e-14) < T)
    throw DomainError("optimal path: no monotone path reaches the target in time T");
  double hi = 1.0;
  while (duration(hi) > T) hi *= 2.0;
  for (int it = 0; it < 200 && hi - lo > 1e-15 * std::max(1.0, std::abs(hi)); ++it) {
    const double mid = 0.5 * (lo + hi);
    (duration(mid) > T ? lo : hi) = mid;
  }
  const double E = hi;
  // Cumulative time at panel edges, then invert on the uniform time grid.
  std::vector<double> tr(panels + 1, 0.0);
  for (std::size_t i = 0; i < panels; ++i) {
    double dt = 0.0;
    for (int q = 0; q < 4; ++q) dt += h * gw[q] / speed(r0 + h * (static_cast<double>(i) + gx[q]), E);
    tr[i + 1] = tr[i] + dt;
  }
  const double scale = T / tr.back();
  for (double& t : tr) t *= scale;
  std::vector<double> path(K + 1);
  std::size_t i = 0;
  for (std::size_t k = 0; k <= K; ++k) {
    const double t = T * static_cast<double>(k) / static_cast<double>(K);
    while (i + 1 < panels && tr[i + 1] < t) ++i;
    const double f = std::clamp((t - tr[i]) / (tr[i + 1] - tr[i]), 0.0, 1.0);
    path[k] = r0 + h * (static_cast<double>(i) + f);
  }
  path.front() = r0;
  path.back() = r1;
  return path;
}

LdpRow ldp_estimate(const RateModel& m, std::size_t N, double T, double threshold,
                    std::size_t replicas, std::uint64_t seed, std::size_t workers) {
  if (N % 2 != 0) throw DomainError("ldp: N must be even");
  const auto need = static_cast<std::size_t>(std::ceil(threshold * static_cast<double>(N) - 1e-9));
  std::vector<unsigned char> hit(replicas, 0);
  parallel_for(replicas, workers, [&](std::size_t i) {
    Configuration eta(N);
    for (std::size_t x = 0; x < N; x += 2) eta.set(static_cast<std::ptrdiff_t>(x), true);
    KmcSimulator sim(std::move(eta), m, derive_seed(seed, i));
    sim.advance_to(T);
    hit[i] = sim.particle_count() >= need;
  });
  LdpRow row;
  row.N = N;
  row.replicas = replicas;
  for (auto h : hit) row.hits += h;
  row.p_hat = static_cast<double>(row.hits) / static_cast<double>(replicas);
  row.scaled = row.hits ? -std::log(row.p_hat) / static_cast<double>(N) : kNaN;
  return row;
}

double ldp_exact_constant(std::size_t N, double T, double threshold, double kappa) {
  if (N % 2 != 0) throw DomainError("ldp: N must be even");
  const std::size_t half = N / 2;
  const double e = std::exp(-2.0 * kappa * T);
  const double p1 = 0.5 * (1.0 + e), p0 = 0.5 * (1.0 - e);
  auto pmf = [&](double p) {
    std::vector<double> out(half + 1);
    for (std::size_t k = 0; k <= half; ++k)
      out[k] = std::exp(std::lgamma(half + 1.0) - std::lgamma(k + 1.0) - std::lgamma(half - k + 1.0) +
                        k * std::log(p) + (half - k) * std::log1p(-p));
    return out;
  };
  const auto a = pmf(p1), b = pmf(p0);
  const auto need = static_cast<std::size_t>(std::ceil(threshold * static_cast<double>(N) - 1e-9));
  double tail = 0.0;
  for (std::size_t i = 0; i <= half; ++i)
    for (std::size_t j = 0; j <= half; ++j)
      if (i + j >= need) tail += a[i] * b[j];
  return tail;
}

// ---------------------------------------------------------------- experiments

namespace {

std::vector<ResultRecord> run_hydro(const ExperimentConfig& cfg, const std::string& hash,
                                    std::size_t workers, const RunOptions& opt) {
  const auto m = make_model(cfg.model);
  const auto gamma = gamma_function(cfg.gamma_profile);
  std::vector<std::string> errors;
  const auto t0 = std::chrono::steady_clock::now();
  const auto pts = hydro_errors(m, gamma, cfg.N, cfg.seeds, cfg.T, cfg.J, cfg.dt, cfg.cells, workers, &errors);
  std::vector<ResultRecord> out;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    if (!errors[i].empty()) {
      out.push_back(failure_record(cfg, hash, pts[i].seed, "hydro N=" + std::to_string(pts[i].N), errors[i]));
      continue;
    }
    out.push_back(make_record(cfg, hash, "hydro_point", pts[i].seed, Json{{"N", pts[i].N}, {"l1", pts[i].l1}}));
  }
  const auto med = hydro_medians(pts, cfg.N);
  bool decreasing = true;
  for (std::size_t i = 1; i < med.size(); ++i)
    if (!(med[i] < med[i - 1])) decreasing = false;
  Json meds = Json::array();
  for (double v : med) meds.push_back(nan_to_null(v));
  auto summary = make_record(cfg, hash, "hydro_summary", cfg.seeds.front(),
                             Json{{"N", cfg.N}, {"median_l1", meds}, {"strictly_decreasing", decreasing},
                                  {"cells", cfg.cells}});
  summary.wall_seconds = seconds_since(t0);
  const auto pde = solve_cauchy(DensityField::from_function(cfg.J, gamma), m, cfg.T, pde_params(cfg.J, cfg.dt, 1));
  summary.fields["pde_final"] = {pde.final_frame().values};
  out.push_back(std::move(summary));
  std::vector<std::vector<double>> rows;
  for (std::size_t i = 0; i < cfg.N.size(); ++i) rows.push_back({static_cast<double>(cfg.N[i]), med[i]});
  out.push_back(plot_record(cfg.experiment, hash, "error_vs_N.dat", {"N", "median_l1"}, rows));
  log_line(opt, "hydro: done");
  return out;
}

StationarySet search_stationary(const RateModel& m, std::size_t J) {
  std::vector<DensityField> seeds;
  for (double c : {0.05, 0.3, 0.5, 0.7, 0.95}) seeds.emplace_back(J, c);
  for (int k = 1; k <= 2; ++k)
    seeds.push_back(DensityField::from_function(J, [k](double u) { return 0.5 + 0.4 * std::sin(kTwoPi * k * u); }));
  seeds.push_back(DensityField::from_function(J, [](double u) { return u < 0.5 ? 0.15 : 0.85; }));
  return stationary_set_search(m, pde_params(J, 1e-3, 0), seeds);
}

std::vector<ResultRecord> run_hydrostatic(const ExperimentConfig& cfg, const std::string& hash,
                                          std::size_t workers, const RunOptions& opt) {
  const auto m = make_model(cfg.model);
  const auto t0 = std::chrono::steady_clock::now();
  const StationarySet E = search_stationary(m, std::min<std::size_t>(cfg.J, 128));
  StationarySet constants;
  for (double r : roots_in_interval(m.reaction(), 0.0, 1.0)) {
    constants.profiles.emplace_back(8, r);
    constants.residuals.push_back(0.0);
    constants.origins.emplace_back("root");
  }
  std::vector<ResultRecord> out;
  Json eset = Json::array();
  for (std::size_t i = 0; i < E.profiles.size(); ++i)
    eset.push_back(Json{{"origin", E.origins[i]}, {"mean", E.profiles[i].mean()},
                        {"min", E.profiles[i].min()}, {"max", E.profiles[i].max()},
                        {"residual", E.residuals[i]}});
  out.push_back(make_record(cfg, hash, "stationary_set", 0, Json{{"profiles", eset}, {"failures", E.failures}}));

  struct Task {
    std::size_t N;
    std::uint64_t seed;
    std::vector<double> dE, dC;
  };
  std::vector<Task> tasks;
  for (std::size_t N : cfg.N)
    for (std::uint64_t s : cfg.seeds) tasks.push_back({N, s, {}, {}});
  std::vector<std::string> errors;
  parallel_for(
      tasks.size(), workers,
      [&](std::size_t i) {
        auto& t = tasks[i];
        SimParams p;
        p.N = t.N;
        p.seed = t.seed;
        p.cells = 1;
        for (const auto& c : stationary_configurations(m, p, cfg.burn_in, cfg.snapshots, cfg.thin)) {
          const auto em = c.empirical();
          t.dE.push_back(distance_to_stationary_set(em, E));
          if (!constants.profiles.empty()) t.dC.push_back(distance_to_stationary_set(em, constants));
        }
      },
      &errors);
  for (std::size_t N : cfg.N) {
    std::vector<double> dE, dC;
    for (std::size_t i = 0; i < tasks.size(); ++i) {
      if (tasks[i].N != N) continue;
      if (!errors[i].empty()) {
        out.push_back(failure_record(cfg, hash, tasks[i].seed, "hydrostatic N=" + std::to_string(N), errors[i]));
        continue;
      }
      dE.insert(dE.end(), tasks[i].dE.begin(), tasks[i].dE.end());
      dC.insert(dC.end(), tasks[i].dC.begin(), tasks[i].dC.end());
    }
    auto rec = make_record(cfg, hash, "hydrostatic_summary", cfg.seeds.front(),
                           Json{{"N", N}, {"snapshots", dE.size()}, {"median_distance_E", nan_to_null(median(dE))},
                                {"median_distance_constants", nan_to_null(median(dC))}});
    rec.wall_seconds = seconds_since(t0);
    out.push_back(std::move(rec));
    // Histogram of distances to E (20 bins over [0, max]).
    if (!dE.empty()) {
      const double top = *std::max_element(dE.begin(), dE.end()) * (1.0 + 1e-12) + 1e-300;
      std::vector<double> count(20, 0.0);
      for (double d : dE) count[std::min<std::size_t>(19, static_cast<std::size_t>(d / top * 20.0))] += 1.0;
      std::vector<std::vector<double>> rows;
      for (std::size_t b = 0; b < 20; ++b) rows.push_back({(b + 0.5) * top / 20.0, count[b]});
      out.push_back(plot_record(cfg.experiment, hash, "distance_hist_N" + std::to_string(N) + ".dat",
                                {"distance", "count"}, rows));
    }
  }
  log_line(opt, "hydrostatic: done");
  return out;
}

std::vector<ResultRecord> run_rate_consistency(const ExperimentConfig& cfg, const std::string& hash,
                                               std::size_t workers, const RunOptions& opt) {
  const auto m = make_model(cfg.model);
  const auto controls = control_family();
  const std::vector<double> held{0.25, 0.4, 0.7};
  const std::size_t n = controls.size() + held.size();
  std::vector<Json> payload(n);
  std::vector<double> wall(n);
  std::vector<std::string> errors;
  const DensityField gamma = control_initial(cfg.J);
  parallel_for(
      n, workers,
      [&](std::size_t i) {
        const auto t0 = std::chrono::steady_clock::now();
        if (i < controls.size()) {
          // 2000 frames: the recovered control is limited by the frame spacing.
          const auto path = solve_controlled(gamma, m, controls[i], cfg.T, pde_params(cfg.J, cfg.dt, 2000));
          const auto va = rate_variational(path, gamma, m, cfg.basis);
          const auto ex = rate_explicit_smooth(path, m);
          double worst = 0.0;
          std::vector<double> h(cfg.J);
          for (std::size_t k = 0; k < path.frames.size(); ++k) {
            controls[i](path.times[k], h);
            for (std::size_t j = 0; j < cfg.J; ++j) worst = std::max(worst, std::abs(h[j] - ex.control[k][j]));
          }
          payload[i] = Json{{"kind", "controlled"}, {"index", i}, {"variational", va.value},
                            {"explicit", ex.value}, {"relative_gap", std::abs(va.value - ex.value) / ex.value},
                            {"roundtrip_sup", worst}, {"iterations", va.iterations},
                            {"converged", va.converged && ex.converged}, {"energy", va.energy}};
        } else {
          const double r = held[i - controls.size()];
          const std::size_t K = 100;
          Trajectory path;
          path.times = uniform_times(cfg.T, K);
          path.frames.assign(K + 1, DensityField(cfg.J, r));
          const double closed = cfg.T * std::pow(std::sqrt(m.B(r)) - std::sqrt(m.D(r)), 2);
          const auto va = rate_variational(path, path.frames[0], m, cfg.basis);
          const double ex = rate_explicit_smooth(path, m).value;
          const double ho = rate_homogeneous(std::vector<double>(K + 1, r), cfg.T, m);
          auto rel = [&](double v) { return closed > 0.0 ? std::abs(v - closed) / closed : std::abs(v); };
          payload[i] = Json{{"kind", "held"}, {"r", r}, {"closed_form", closed}, {"variational", va.value},
                            {"explicit", ex}, {"homogeneous", ho}, {"variational_rel", rel(va.value)},
                            {"explicit_rel", rel(ex)}, {"homogeneous_rel", rel(ho)}};
        }
        wall[i] = seconds_since(t0);
      },
      &errors);
  std::vector<ResultRecord> out;
  double gap = 0.0, roundtrip = 0.0, held_rel = 0.0;
  std::vector<std::vector<double>> rows;
  for (std::size_t i = 0; i < n; ++i) {
    if (!errors[i].empty()) {
      out.push_back(failure_record(cfg, hash, 0, "rate path " + std::to_string(i), errors[i]));
      gap = roundtrip = held_rel = kNaN;
      continue;
    }
    auto rec = make_record(cfg, hash, "rate_route", 0, payload[i]);
    rec.wall_seconds = wall[i];
    out.push_back(std::move(rec));
    const auto& p = payload[i];
    if (p["kind"] == "controlled") {
      gap = std::max(gap, p["relative_gap"].get<double>());
      roundtrip = std::max(roundtrip, p["roundtrip_sup"].get<double>());
      rows.push_back({static_cast<double>(i), p["variational"].get<double>(), p["explicit"].get<double>()});
    } else {
      held_rel = std::max({held_rel, p["variational_rel"].get<double>(), p["explicit_rel"].get<double>(),
                           p["homogeneous_rel"].get<double>()});
    }
  }
  out.push_back(make_record(cfg, hash, "rate_summary", 0,
                            Json{{"max_relative_gap", nan_to_null(gap)}, {"max_roundtrip_sup", nan_to_null(roundtrip)},
                                 {"max_held_relative_error", nan_to_null(held_rel)}}));
  out.push_back(plot_record(cfg.experiment, hash, "rates.dat", {"path", "variational", "explicit"}, rows));
  log_line(opt, "rate-consistency: done");
  return out;
}

std::vector<ResultRecord> run_ldp(const ExperimentConfig& cfg, const std::string& hash,
                                  std::size_t workers, const RunOptions& opt) {
  const auto m = make_model(cfg.model);
  const auto path = optimal_homogeneous_path(m, 0.5, cfg.ldp_threshold, cfg.T, 2000);
  const double rate = rate_homogeneous(path, cfg.T, m);
  std::vector<ResultRecord> out;
  std::vector<LdpRow> rows;
  for (std::size_t N : cfg.N) {
    const auto t0 = std::chrono::steady_clock::now();
    try {
      auto row = ldp_estimate(m, N, cfg.T, cfg.ldp_threshold, cfg.replicas, cfg.seeds.front(), workers);
      if (cfg.model.preset == "constant") row.exact_p = ldp_exact_constant(N, cfg.T, cfg.ldp_threshold, cfg.model.kappa);
      rows.push_back(row);
      auto rec = make_record(cfg, hash, "ldp_point", cfg.seeds.front(),
                             Json{{"N", N}, {"replicas", row.replicas}, {"hits", row.hits}, {"p_hat", row.p_hat},
                                  {"scaled", nan_to_null(row.scaled)}, {"exact_p", nan_to_null(row.exact_p)},
                                  {"rate", rate}, {"ratio", nan_to_null(row.scaled / rate)}});
      rec.wall_seconds = seconds_since(t0);
      out.push_back(std::move(rec));
    } catch (const std::exception& e) {
      out.push_back(failure_record(cfg, hash, cfg.seeds.front(), "ldp N=" + std::to_string(N), e.what()));
    }
    log_line(opt, "ldp-scan: N=" + std::to_string(N) + " done");
  }
  bool factor = !rows.empty(), stable = !rows.empty();
  double worst_change = 0.0;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const double ratio = rows[i].scaled / rate;
    if (!(ratio >= 0.5 && ratio <= 2.0)) factor = false;
    if (i > 0) {
      const double change = std::abs(rows[i].scaled - rows[i - 1].scaled) / rows[i].scaled;
      worst_change = std::max(worst_change, change);
      if (!(change <= 0.25)) stable = false;
    }
  }
  out.push_back(make_record(cfg, hash, "ldp_summary", cfg.seeds.front(),
                            Json{{"rate", rate}, {"factor_two", factor}, {"stable_25", stable},
                                 {"max_relative_change", nan_to_null(worst_change)}}));
  std::vector<std::vector<double>> plot;
  for (const auto& r : rows) plot.push_back({static_cast<double>(r.N), r.scaled, rate});
  out.push_back(plot_record(cfg.experiment, hash, "ldp_scan.dat", {"N", "scaled_log_prob", "rate"}, plot));
  return out;
}

struct Benchmark {
  std::string name;
  Trajectory path;
  DensityField gamma;
};

std::vector<Benchmark> idensity_benchmarks(const ExperimentConfig& cfg, const RateModel& m) {
  const std::size_t J = cfg.J;
  const auto K = static_cast<std::size_t>(std::ceil(1600.0 * cfg.T));
  std::vector<Benchmark> out;
  {
    const auto gamma = control_initial(J);
    out.push_back({"controlled", solve_controlled(gamma, m, control_family()[0], cfg.T, pde_params(J, cfg.dt, K)), gamma});
  }
  {
    Trajectory step;
    step.times = uniform_times(cfg.T, K);
    for (double t : step.times)
      step.frames.push_back(DensityField::from_function(J, [&](double u) {
        const bool inside = u >= 0.25 && u < 0.75;
        return t < 0.5 * cfg.T ? (inside ? 0.7 : 0.3) : (inside ? 0.6 : 0.4);
      }));
    auto smooth = mollify_spacetime(step, MollifierSpec::make(0.1, 0.05));
    DensityField gamma = smooth.frames.front();
    out.push_back({"mollified_step", std::move(smooth), gamma});
  }
  {
    Trajectory held;
    held.times = uniform_times(cfg.T, K);
    held.frames.assign(K + 1, DensityField(J, 0.3));
    out.push_back({"held_constant", held, DensityField(J, 0.3)});
  }
  return out;
}

std::vector<ResultRecord> run_idensity(const ExperimentConfig& cfg, const std::string& hash,
                                       std::size_t workers, const RunOptions& opt) {
  const auto m = make_model(cfg.model);
  const auto bench = idensity_benchmarks(cfg, m);
  std::vector<IDensityReport> reps(bench.size());
  std::vector<double> wall(bench.size());
  std::vector<std::string> errors;
  const auto levels = default_levels({0.04, 0.04, 16.0}, 5);
  parallel_for(
      bench.size(), workers,
      [&](std::size_t i) {
        const auto t0 = std::chrono::steady_clock::now();
        reps[i] = idensity_harness(bench[i].path, bench[i].gamma, m, levels, std::min(cfg.dt, 1e-4));
        wall[i] = seconds_since(t0);
      },
      &errors);
  std::vector<ResultRecord> out;
  for (std::size_t i = 0; i < bench.size(); ++i) {
    if (!errors[i].empty()) {
      out.push_back(failure_record(cfg, hash, 0, "idensity " + bench[i].name, errors[i]));
      continue;
    }
    std::vector<std::vector<double>> rows;
    for (std::size_t k = 0; k < reps[i].rows.size(); ++k) {
      const auto& r = reps[i].rows[k];
      out.push_back(make_record(cfg, hash, "idensity_level", 0,
                                Json{{"path", bench[i].name}, {"level", k}, {"delta", r.level.delta},
                                     {"eps", r.level.eps}, {"n", r.level.n}, {"rate", r.rate},
                                     {"relative_gap", r.gap}, {"distance", r.distance}}));
      rows.push_back({static_cast<double>(k), r.level.delta, r.level.eps, r.level.n, r.rate, r.gap, r.distance});
    }
    auto rec = make_record(cfg, hash, "idensity_summary", 0,
                           Json{{"path", bench[i].name}, {"base_rate", reps[i].base_rate},
                                {"final_gap", reps[i].rows.back().gap}, {"gap_decreasing", reps[i].gap_decreasing},
                                {"distance_decreasing", reps[i].distance_decreasing}});
    rec.wall_seconds = wall[i];
    out.push_back(std::move(rec));
    out.push_back(plot_record(cfg.experiment, hash, "idensity_" + bench[i].name + ".dat",
                              {"level", "delta", "eps", "n", "rate", "gap", "distance"}, rows));
  }
  log_line(opt, "idensity: done");
  return out;
}

}  // namespace

std::vector<ResultRecord> run_experiment(const ExperimentConfig& cfg, const RunOptions& opt) {
  const std::string hash = config_hash(cfg);
  const std::size_t workers = opt.workers ? opt.workers : worker_count();
  if (cfg.experiment == "hydro") return run_hydro(cfg, hash, workers, opt);
  if (cfg.experiment == "hydrostatic") return run_hydrostatic(cfg, hash, workers, opt);
  if (cfg.experiment == "rate-consistency") return run_rate_consistency(cfg, hash, workers, opt);
  if (cfg.experiment == "ldp-scan") return run_ldp(cfg, hash, workers, opt);
  if (cfg.experiment == "idensity") return run_idensity(cfg, hash, workers, opt);
  throw ConfigError("unknown experiment '" + cfg.experiment + "'");
}

}  // namespace gk
