// gklab: command-line front end for the simulator, the PDE solvers, the rate
// functionals, the smoothing constructions and the batch experiments.
#include <CLI11.hpp>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>

#include "gklab/errors.hpp"
#include "gklab/functionals.hpp"
#include "gklab/lab.hpp"
#include "gklab/particle_sim.hpp"
#include "gklab/pde.hpp"
#include "gklab/random.hpp"
#include "gklab/smoothing.hpp"

namespace fs = std::filesystem;
using gk::Json;

namespace {

struct Common {
  std::string config;
  std::uint64_t seed = 1;
  bool seed_given = false;
  std::string out;
  gk::ModelSpec model;
};

void emit(const Json& j) { std::cout << j.dump() << '\n'; }

void write_csv(const std::string& dir, const std::string& name, const gk::Trajectory& p) {
  if (dir.empty()) return;
  fs::create_directories(dir);
  std::ofstream f(fs::path(dir) / name);
  f.precision(17);
  for (std::size_t n = 0; n < p.frames.size(); ++n) {
    f << p.times[n];
    for (double v : p.frames[n].values) f << ',' << v;
    f << '\n';
  }
  if (!f) throw gk::NumericalError("cannot write " + name);
}

gk::RateModel model_of(const Common& c) {
  if (!c.config.empty()) return gk::make_model(gk::load_config(c.config, false).model);
  return gk::make_model(c.model);
}

Json poly_json(const gk::Polynomial& p) { return p.coefficients(); }

void add_model_options(CLI::App* sub, Common& c) {
  sub->add_option("--model", c.model.preset, "constant | double_well | pair | neutral")
      ->check(CLI::IsMember({"constant", "double_well", "pair", "neutral"}));
  sub->add_option("--kappa", c.model.kappa, "rate of the constant model");
  sub->add_option("--a", c.model.a, "double-well a");
  sub->add_option("--b", c.model.b, "double-well b");
  sub->add_option("--beta", c.model.beta, "pair-interaction strength");
}

gk::PdeParams pde_params(std::size_t J, double dt, std::size_t frames) {
  gk::PdeParams p;
  p.J = J;
  p.dt = dt;
  p.frames = frames;
  return p;
}

Json report_json(const gk::RateReport& r) {
  return Json{{"route", gk::route_name(r.route)}, {"value", r.value},         {"iterations", r.iterations},
              {"gradient_norm", r.gradient_norm},   {"converged", r.converged}, {"energy", r.energy},
              {"coefficients", r.maximizer.size()}, {"notes", r.notes}};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"gklab: Glauber-Kawasaki particle systems, their hydrodynamic equation and rate functionals"};
  app.require_subcommand(1);
  Common c;
  app.add_option("--config", c.config, "experiment configuration (JSON)");
  app.add_option("--seed", c.seed, "random seed")->each([&](const std::string&) { c.seed_given = true; });
  app.add_option("--out", c.out, "output directory");
  app.fallthrough();

  // derive-rates
  auto* derive = app.add_subcommand("derive-rates", "reaction polynomials and simulator realization of a model");
  add_model_options(derive, c);
  derive->callback([&] {
    const auto m = model_of(c);
    Json j{{"model", m.name()},
           {"hash", m.hash()},
           {"birth", poly_json(m.birth())},
           {"death", poly_json(m.death())},
           {"reaction", poly_json(m.reaction())},
           {"concave", m.concave()},
           {"simulable", m.simulable()},
           {"roots", gk::roots_in_interval(m.reaction(), 0.0, 1.0)},
           {"max_reaction_slope", m.max_reaction_slope()}};
    if (m.simulable()) {
      const auto& cyl = m.cylinder();
      Json windows = Json::object();
      for (std::uint32_t w = 0; w < cyl.table().size(); ++w) windows[cyl.window_string(w)] = cyl.table()[w];
      j["half_width"] = cyl.half_width();
      j["windows"] = windows;
    }
    emit(j);
  });

  // simulate
  std::size_t N = 256, frames = 10, cells = 16, J = 128, K_s = 8, K_t = 16;
  double T = 1.0, dt = 1e-4;
  std::string gamma = "bump";
  auto* simulate = app.add_subcommand("simulate", "kinetic Monte Carlo run from a product initial state");
  add_model_options(simulate, c);
  simulate->add_option("--N", N, "number of sites");
  simulate->add_option("--T", T, "macroscopic horizon");
  simulate->add_option("--frames", frames, "record intervals");
  simulate->add_option("--cells", cells, "block-average cells per frame");
  simulate->add_option("--gamma", gamma, "initial profile")->check(CLI::IsMember(gk::gamma_profiles()));
  simulate->callback([&] {
    const auto m = model_of(c);
    gk::Rng rng(gk::derive_seed(c.seed, N));
    const auto eta0 = gk::sample_profile_configuration(gk::gamma_function(gamma), N, rng);
    auto p = gk::SimParams::uniform(N, T, frames, cells, gk::derive_seed(c.seed, N + 1));
    const auto traj = gk::simulate_trajectory(eta0, m, p);
    write_csv(c.out, "simulate.csv", traj);
    emit(Json{{"N", N}, {"T", T}, {"seed", c.seed}, {"final_mean", traj.final_frame().mean()},
              {"final_profile", traj.final_frame().values}});
  });

  // pde
  std::string scheme = "fd";
  auto* pde = app.add_subcommand("pde", "solve the hydrodynamic equation");
  add_model_options(pde, c);
  pde->add_option("--J", J, "grid cells");
  pde->add_option("--dt", dt, "time step bound");
  pde->add_option("--T", T, "horizon");
  pde->add_option("--frames", frames, "record intervals");
  pde->add_option("--gamma", gamma, "initial profile")->check(CLI::IsMember(gk::gamma_profiles()));
  pde->add_option("--scheme", scheme, "fd | mild")->check(CLI::IsMember({"fd", "mild"}));
  pde->callback([&] {
    const auto m = model_of(c);
    auto p = pde_params(J, dt, frames);
    p.scheme = scheme == "fd" ? gk::Scheme::finite_difference_imex : gk::Scheme::mild_picard;
    const auto traj = gk::solve(gk::DensityField::from_function(J, gk::gamma_function(gamma)), m, T, p);
    write_csv(c.out, "pde.csv", traj);
    emit(Json{{"scheme", scheme}, {"J", J}, {"T", T}, {"final_mean", traj.final_frame().mean()},
              {"final_min", traj.final_frame().min()}, {"final_max", traj.final_frame().max()},
              {"stationary_residual", gk::stationary_residual(traj.final_frame(), m)}});
  });

  // stationary
  bool exact = false;
  auto* stationary = app.add_subcommand("stationary", "stationary profiles, or the exact invariant law for small N");
  add_model_options(stationary, c);
  stationary->add_option("--J", J, "grid cells");
  stationary->add_option("--N", N, "sites (with --exact, at most 12)");
  stationary->add_flag("--exact", exact, "exact invariant law of the particle system");
  stationary->callback([&] {
    const auto m = model_of(c);
    if (exact) {
      const auto law = gk::exact_stationary_small(m, N);
      double lo = 1.0, hi = 0.0, mean = 0.0;
      for (std::size_t s = 0; s < law.probabilities.size(); ++s) {
        lo = std::min(lo, law.probabilities[s]);
        hi = std::max(hi, law.probabilities[s]);
        mean += law.probabilities[s] * static_cast<double>(std::popcount(s)) / static_cast<double>(N);
      }
      emit(Json{{"N", N}, {"states", law.probabilities.size()}, {"residual", law.residual},
                {"min_probability", lo}, {"max_probability", hi}, {"mean_density", mean}});
      return;
    }
    std::vector<gk::DensityField> seeds;
    for (double v : {0.05, 0.3, 0.5, 0.7, 0.95}) seeds.emplace_back(J, v);
    seeds.push_back(gk::DensityField::from_function(J, [](double u) { return 0.5 + 0.4 * std::sin(2 * M_PI * u); }));
    const auto E = gk::stationary_set_search(m, pde_params(J, 1e-3, 0), seeds);
    for (std::size_t i = 0; i < E.profiles.size(); ++i)
      emit(Json{{"origin", E.origins[i]}, {"mean", E.profiles[i].mean()}, {"min", E.profiles[i].min()},
                {"max", E.profiles[i].max()}, {"residual", E.residuals[i]}});
    for (const auto& f : E.failures) emit(Json{{"failure", f}});
  });

  // rate
  std::string route = "all", path_kind = "controlled";
  std::size_t index = 0;
  double r_held = 0.25;
  auto* rate = app.add_subcommand("rate", "rate function of a benchmark path");
  add_model_options(rate, c);
  rate->add_option("--route", route, "variational | explicit | homogeneous | all")
      ->check(CLI::IsMember({"variational", "explicit", "homogeneous", "all"}));
  rate->add_option("--path", path_kind, "controlled | held | hydro")->check(CLI::IsMember({"controlled", "held", "hydro"}));
  rate->add_option("--index", index, "control index (0-4)")->check(CLI::Range(0, 4));
  rate->add_option("--r", r_held, "held density")->check(CLI::Range(0.01, 0.99));
  rate->add_option("--J", J, "grid cells");
  rate->add_option("--T", T, "horizon");
  rate->add_option("--dt", dt, "PDE step bound");
  rate->add_option("--K_s", K_s, "spatial basis size");
  rate->add_option("--K_t", K_t, "temporal basis size");
  rate->callback([&] {
    const auto m = model_of(c);
    gk::Trajectory path;
    gk::DensityField g0(J);
    if (path_kind == "held") {
      path.times = gk::uniform_times(T, 100);
      path.frames.assign(101, gk::DensityField(J, r_held));
      g0 = path.frames[0];
    } else {
      g0 = gk::control_initial(J);
      path = path_kind == "controlled"
                 ? gk::solve_controlled(g0, m, gk::control_family()[index], T, pde_params(J, dt, 1000))
                 : gk::solve_cauchy(g0, m, T, pde_params(J, dt, 1000));
    }
    if (route == "variational" || route == "all")
      emit(report_json(gk::rate_variational(path, g0, m, {K_s, K_t})));
    if (route == "explicit" || route == "all") emit(report_json(gk::rate_explicit_smooth(path, m)));
    if (route == "homogeneous" || (route == "all" && path_kind == "held")) {
      if (path_kind != "held") throw gk::DomainError("the homogeneous route needs --path held");
      emit(Json{{"route", "homogeneous"}, {"value", gk::rate_homogeneous(std::vector<double>(101, r_held), T, m)}});
    }
  });

  // smooth
  std::string stage = "all";
  double delta = 0.02, eps = 0.02, n_index = 256;
  auto* smooth = app.add_subcommand("smooth", "path smoothing constructions on the controlled benchmark path");
  add_model_options(smooth, c);
  smooth->add_option("--stage", stage, "splice | interp | heat | timeavg | all")
      ->check(CLI::IsMember({"splice", "interp", "heat", "timeavg", "all"}));
  smooth->add_option("--J", J, "grid cells");
  smooth->add_option("--T", T, "horizon");
  smooth->add_option("--delta", delta, "splice / ramp width");
  smooth->add_option("--eps", eps, "interpolation weight");
  smooth->add_option("--n", n_index, "smoothing index");
  smooth->callback([&] {
    const auto m = model_of(c);
    const auto g0 = gk::control_initial(J);
    const auto K = static_cast<std::size_t>(std::ceil(1600.0 * T));
    const auto path = gk::solve_controlled(g0, m, gk::control_family()[0], T, pde_params(J, 1e-4, K));
    write_csv(c.out, "smooth_before.csv", path);
    if (stage == "all") {
      const auto rep = gk::idensity_harness(path, g0, m, gk::default_levels({0.04, 0.04, 16}, 5));
      emit(Json{{"base_rate", rep.base_rate}, {"gap_decreasing", rep.gap_decreasing},
                {"distance_decreasing", rep.distance_decreasing}});
      for (const auto& r : rep.rows)
        emit(Json{{"delta", r.level.delta}, {"eps", r.level.eps}, {"n", r.level.n}, {"rate", r.rate},
                  {"relative_gap", r.gap}, {"distance", r.distance}});
      return;
    }
    const auto sched = gk::SmoothingSchedule::make(delta, n_index);
    gk::Trajectory out;
    if (stage == "splice") out = gk::splice_with_solution(path, g0, m, delta);
    if (stage == "interp") out = gk::interpolate_with_solution(path, g0, m, eps);
    if (stage == "heat") out = gk::heat_kernel_smooth(path, sched);
    if (stage == "timeavg") out = gk::time_average_smooth(path, m, sched);
    write_csv(c.out, "smooth_after.csv", out);
    emit(Json{{"stage", stage}, {"rate_before", gk::rate_explicit_smooth(path, m).value},
              {"rate_after", gk::rate_explicit_smooth(out, m).value}, {"l1_distance", gk::trajectory_l1(out, path)}});
  });

  // experiment
  std::string name;
  auto* experiment = app.add_subcommand("experiment", "run a batch experiment from a configuration file");
  experiment->add_option("name", name, "hydro | hydrostatic | rate-consistency | ldp-scan | idensity")->required();
  experiment->callback([&] {
    if (c.config.empty()) throw gk::ConfigError("experiment needs --config <path>");
    std::ifstream in(c.config);
    if (!in) throw gk::ConfigError("cannot open config file '" + c.config + "'");
    Json j;
    try {
      in >> j;
    } catch (const std::exception& e) {
      throw gk::ConfigError(std::string("config is not valid JSON: ") + e.what());
    }
    if (!j.is_object()) throw gk::ConfigError("config must be a JSON object");
    j["experiment"] = name;
    if (!c.out.empty()) j["output_dir"] = c.out;
    if (c.seed_given) j["seeds"] = {c.seed};
    const auto cfg = gk::parse_config(j);
    gk::RunOptions opt;
    opt.log = [](const std::string& s) { std::cerr << s << '\n'; };
    const auto records = gk::run_experiment(cfg, opt);
    const auto manifest = gk::write_records(records, cfg, cfg.output_dir);
    for (const auto& r : records)
      if (r.type.ends_with("summary")) emit(Json{{"type", r.type}, {"payload", r.payload}});
    emit(Json{{"manifest", manifest.string()}, {"records", records.size()}});
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  } catch (const gk::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  } catch (const gk::DomainError& e) {
    std::cerr << "invalid input: " << e.what() << '\n';
    return 2;
  } catch (const gk::NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << '\n';
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "failure: " << e.what() << '\n';
    return 3;
  }
  return 0;
}
