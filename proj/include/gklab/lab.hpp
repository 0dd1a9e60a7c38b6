#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "gklab/field.hpp"
#include "gklab/functionals.hpp"
#include "gklab/rate_model.hpp"

namespace gk {

using Json = nlohmann::json;

/// A rate model by preset name with its parameters, or by an explicit
/// window table (preset "table").
struct ModelSpec {
  std::string preset = "constant";  // constant | double_well | pair | neutral | table
  double kappa = 1.0;
  double a = 1.0;
  double b = 4.0;
  double beta = 2.0;
  std::map<std::string, double> windows;
};

RateModel make_model(const ModelSpec& spec);

struct ExperimentConfig {
  std::string experiment;  // hydro | hydrostatic | rate-consistency | ldp-scan | idensity
  ModelSpec model;
  std::vector<std::size_t> N{128, 256, 512};
  std::size_t J = 256;
  double dt = 1e-4;
  double T = 1.0;
  std::vector<std::uint64_t> seeds{1, 2, 3};
  std::size_t replicas = 1;
  BasisSize basis{8, 16};
  std::string gamma_profile = "bump";  // zero | half | quarter | sine | bump
  std::size_t cells = 4;               // block cells for simulation-vs-PDE errors
  double burn_in = 50.0;
  std::size_t snapshots = 200;
  double thin = 0.05;
  double ldp_threshold = 0.6;
  std::string output_dir = "out";
};

/// Names accepted by gamma_profile.
const std::vector<std::string>& gamma_profiles();
/// The initial profile as a function on [0, 1]: "bump" is (1 + sin 2 pi u)^2 / 4
/// clipped to [0, 1], "sine" is (1 + sin 2 pi u) / 2.
std::function<double(double)> gamma_function(const std::string& name);

/// Strict parsing: unknown keys, missing keys (experiment, model), unknown
/// presets, unsorted N lists and unwritable output directories each raise a
/// ConfigError with a distinct message.
ExperimentConfig parse_config(const Json& j, bool check_output_dir = true);
ExperimentConfig load_config(const std::filesystem::path& path, bool check_output_dir = true);
/// Canonical form with every field present (keys sorted).
Json to_json(const ExperimentConfig& cfg);
/// FNV-1a of the canonical dump without output_dir, hex encoded.
std::string config_hash(const ExperimentConfig& cfg);

struct ResultRecord {
  std::string type;
  std::string experiment;
  std::string config_hash;
  std::uint64_t seed = 0;
  double wall_seconds = 0.0;
  Json payload = Json::object();
  /// Named matrices written as CSV files next to the stream; the payload gets
  /// a reference to the file name.
  std::map<std::string, std::vector<std::vector<double>>> fields;
};

/// Record of type "plot": a two-or-more column data file for one figure.
ResultRecord plot_record(const std::string& experiment, const std::string& hash,
                         const std::string& file, const std::vector<std::string>& columns,
                         const std::vector<std::vector<double>>& rows);

/// Worker count from GKLAB_WORKERS (default: hardware concurrency, at least 1).
std::size_t worker_count();

/// Runs task(i) for i in [0, count) on a bounded pool; results are collected
/// by index so the merge order is deterministic. An exception in one task is
/// captured into `errors[i]` and does not stop the others.
void parallel_for(std::size_t count, std::size_t workers,
                  const std::function<void(std::size_t)>& task,
                  std::vector<std::string>* errors = nullptr);

struct RunOptions {
  std::size_t workers = 0;  // 0: worker_count()
  std::function<void(const std::string&)> log;
};

/// Dispatch on cfg.experiment. Deterministic given the config; per-replica
/// failures become records of type "failure".
std::vector<ResultRecord> run_experiment(const ExperimentConfig& cfg, const RunOptions& opt = {});

/// Writes records.ndjson (without wall-clock), timing.ndjson, config.json,
/// one CSV per field, one .dat per plot record and manifest.json listing
/// every file with its hash. Returns the manifest path. On an I/O failure the
/// manifest is written with status "partial" and the error is rethrown.
std::filesystem::path write_records(const std::vector<ResultRecord>& records,
                                    const ExperimentConfig& cfg,
                                    const std::filesystem::path& dir);

// ---- experiment building blocks (also used by the CLI and the acceptance suite)

/// One L1 error at time T between a simulated run and the PDE solution, both
/// averaged over `cells` blocks. Failed runs carry a NaN error and, when
/// `errors` is given, a message at the same index.
struct HydroPoint {
  std::size_t N;
  std::uint64_t seed;
  double l1;
};
std::vector<HydroPoint> hydro_errors(const RateModel& m, const std::function<double(double)>& gamma,
                                     const std::vector<std::size_t>& Ns,
                                     const std::vector<std::uint64_t>& seeds, double T,
                                     std::size_t J, double dt, std::size_t cells,
                                     std::size_t workers, std::vector<std::string>* errors = nullptr);
/// Median L1 per N, in the order of Ns.
std::vector<double> hydro_medians(const std::vector<HydroPoint>& pts,
                                  const std::vector<std::size_t>& Ns);

/// The five prescribed smooth controls (sup norm <= 1) of the rate checks.
std::vector<ControlField> control_family();
/// Initial profile used with the control family: 1/2 + 0.3 sin 2 pi u.
DensityField control_initial(std::size_t J);

/// Optimal spatially homogeneous path from r0 to r1 in time T (the rate's
/// Hamiltonian is conserved along it; solved by shooting on the energy),
/// sampled at K + 1 uniform times. Requires r1 > r0 and F < 0 on [r0, r1]
/// or any monotone increasing target reachable from r0.
std::vector<double> optimal_homogeneous_path(const RateModel& m, double r0, double r1,
                                             double T, std::size_t K);

struct LdpRow {
  std::size_t N = 0;
  std::size_t replicas = 0;
  std::size_t hits = 0;
  double p_hat = 0.0;
  double scaled = 0.0;  // -log(p_hat) / N
  double exact_p = -1.0;  // c == 1 only: exact probability of the event
};
/// Plain Monte Carlo estimate of P[<pi_T, 1> >= threshold] from the
/// alternating configuration (density 1/2).
LdpRow ldp_estimate(const RateModel& m, std::size_t N, double T, double threshold,
                    std::size_t replicas, std::uint64_t seed, std::size_t workers);
/// Exact P[count >= threshold N] at time T for c == kappa from the alternating
/// configuration (sites flip independently).
double ldp_exact_constant(std::size_t N, double T, double threshold, double kappa = 1.0);

}  // namespace gk
