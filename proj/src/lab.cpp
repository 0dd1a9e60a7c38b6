#include "gklab/lab.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <numbers>
#include <set>
#include <sstream>
#include <thread>

#include "gklab/errors.hpp"
#include "gklab/hash.hpp"

namespace gk {

namespace fs = std::filesystem;

// ---------------------------------------------------------------- models

RateModel make_model(const ModelSpec& spec) {
  if (spec.preset == "constant") return make_constant(spec.kappa);
  if (spec.preset == "double_well") return make_double_well(spec.a, spec.b);
  if (spec.preset == "pair") return make_pair_interaction(spec.beta);
  if (spec.preset == "neutral") return make_neutral();
  if (spec.preset == "table")
    return RateModel::from_cylinder(CylinderRate::from_windows(spec.windows), "table");
  throw ConfigError("unknown model preset '" + spec.preset + "'");
}

const std::vector<std::string>& gamma_profiles() {
  static const std::vector<std::string> names{"zero", "half", "quarter", "sine", "bump"};
  return names;
}

std::function<double(double)> gamma_function(const std::string& name) {
  constexpr double two_pi = 2.0 * std::numbers::pi;
  if (name == "zero") return [](double) { return 0.0; };
  if (name == "half") return [](double) { return 0.5; };
  if (name == "quarter") return [](double) { return 0.25; };
  if (name == "sine") return [=](double u) { return 0.5 * (1.0 + std::sin(two_pi * u)); };
  if (name == "bump")
    return [=](double u) {
      const double s = 1.0 + std::sin(two_pi * u);
      return std::clamp(0.25 * s * s, 0.0, 1.0);
    };
  throw ConfigError("unknown gamma_profile '" + name + "'");
}

// ---------------------------------------------------------------- config

namespace {

const std::set<std::string> kExperiments{"hydro", "hydrostatic", "rate-consistency", "ldp-scan",
                                         "idensity"};
const std::set<std::string> kKeys{"experiment", "model",    "N",         "J",
                                  "dt",         "T",        "seeds",     "replicas",
                                  "basis",      "gamma_profile", "cells", "burn_in",
                                  "snapshots",  "thin",     "ldp_threshold", "output_dir"};
const std::set<std::string> kModelKeys{"preset", "kappa", "a", "b", "beta", "windows"};
const std::set<std::string> kBasisKeys{"K_s", "K_t"};

void reject_unknown(const Json& j, const std::set<std::string>& allowed, const std::string& where) {
  for (const auto& [key, _] : j.items())
    if (!allowed.count(key)) throw ConfigError("unknown key '" + key + "' in " + where);
}

template <class T>
T get_as(const Json& j, const char* key) {
  try {
    return j.at(key).get<T>();
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("bad value for '") + key + "': " + e.what());
  }
}

ModelSpec parse_model(const Json& j) {
  ModelSpec s;
  if (j.is_string()) {
    s.preset = j.get<std::string>();
  } else if (j.is_object()) {
    reject_unknown(j, kModelKeys, "model");
    if (!j.contains("preset")) throw ConfigError("missing key 'preset' in model");
    s.preset = get_as<std::string>(j, "preset");
    if (j.contains("kappa")) s.kappa = get_as<double>(j, "kappa");
    if (j.contains("a")) s.a = get_as<double>(j, "a");
    if (j.contains("b")) s.b = get_as<double>(j, "b");
    if (j.contains("beta")) s.beta = get_as<double>(j, "beta");
    if (j.contains("windows")) s.windows = get_as<std::map<std::string, double>>(j, "windows");
  } else {
    throw ConfigError("model must be a preset name or an object");
  }
  try {
    (void)make_model(s);
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception& e) {
    throw ConfigError("invalid model '" + s.preset + "': " + e.what());
  }
  return s;
}

void check_writable(const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir))
    throw ConfigError("output_dir '" + dir + "' cannot be created");
  const fs::path probe = fs::path(dir) / ".gklab_write_probe";
  {
    std::ofstream f(probe);
    if (!f) throw ConfigError("output_dir '" + dir + "' is not writable");
  }
  fs::remove(probe, ec);
}

}  // namespace

ExperimentConfig parse_config(const Json& j, bool check_output_dir) {
  if (!j.is_object()) throw ConfigError("config must be a JSON object");
  reject_unknown(j, kKeys, "config");
  for (const char* k : {"experiment", "model"})
    if (!j.contains(k)) throw ConfigError(std::string("missing key '") + k + "'");
  ExperimentConfig c;
  c.experiment = get_as<std::string>(j, "experiment");
  if (!kExperiments.count(c.experiment))
    throw ConfigError("unknown experiment '" + c.experiment + "'");
  c.model = parse_model(j.at("model"));
  if (j.contains("N")) c.N = get_as<std::vector<std::size_t>>(j, "N");
  if (j.contains("J")) c.J = get_as<std::size_t>(j, "J");
  if (j.contains("dt")) c.dt = get_as<double>(j, "dt");
  if (j.contains("T")) c.T = get_as<double>(j, "T");
  if (j.contains("seeds")) c.seeds = get_as<std::vector<std::uint64_t>>(j, "seeds");
  if (j.contains("replicas")) c.replicas = get_as<std::size_t>(j, "replicas");
  if (j.contains("basis")) {
    const auto& b = j.at("basis");
    if (!b.is_object()) throw ConfigError("basis must be an object");
    reject_unknown(b, kBasisKeys, "basis");
    if (b.contains("K_s")) c.basis.spatial = get_as<std::size_t>(b, "K_s");
    if (b.contains("K_t")) c.basis.temporal = get_as<std::size_t>(b, "K_t");
  }
  if (j.contains("gamma_profile")) c.gamma_profile = get_as<std::string>(j, "gamma_profile");
  if (j.contains("cells")) c.cells = get_as<std::size_t>(j, "cells");
  if (j.contains("burn_in")) c.burn_in = get_as<double>(j, "burn_in");
  if (j.contains("snapshots")) c.snapshots = get_as<std::size_t>(j, "snapshots");
  if (j.contains("thin")) c.thin = get_as<double>(j, "thin");
  if (j.contains("ldp_threshold")) c.ldp_threshold = get_as<double>(j, "ldp_threshold");
  if (j.contains("output_dir")) c.output_dir = get_as<std::string>(j, "output_dir");

  if (c.N.empty()) throw ConfigError("N list must not be empty");
  if (!std::is_sorted(c.N.begin(), c.N.end()) ||
      std::adjacent_find(c.N.begin(), c.N.end()) != c.N.end())
    throw ConfigError("N list must be strictly ascending");
  if (c.N.front() < 2) throw ConfigError("N values must be at least 2");
  if (c.J < 3) throw ConfigError("J must be at least 3");
  if (!(c.dt > 0.0)) throw ConfigError("dt must be positive");
  if (!(c.T > 0.0)) throw ConfigError("T must be positive");
  if (c.seeds.empty()) throw ConfigError("seeds must not be empty");
  if (c.replicas == 0) throw ConfigError("replicas must be positive");
  if (c.basis.temporal == 0) throw ConfigError("basis K_t must be positive");
  if (std::find(gamma_profiles().begin(), gamma_profiles().end(), c.gamma_profile) ==
      gamma_profiles().end())
    throw ConfigError("unknown gamma_profile '" + c.gamma_profile + "'");
  if (c.cells == 0 || c.J % c.cells != 0)
    throw ConfigError("cells must be positive and divide J");
  if (!(c.burn_in > 0.0)) throw ConfigError("burn_in must be positive");
  if (!(c.thin > 0.0)) throw ConfigError("thin must be positive");
  if (!(c.ldp_threshold > 0.0 && c.ldp_threshold < 1.0))
    throw ConfigError("ldp_threshold must lie in (0, 1)");
  if (c.output_dir.empty()) throw ConfigError("output_dir must not be empty");
  if (check_output_dir) check_writable(c.output_dir);
  return c;
}

ExperimentConfig load_config(const fs::path& path, bool check_output_dir) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path.string() + "'");
  Json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("config file '" + path.string() + "' is not valid JSON: " + e.what());
  }
  return parse_config(j, check_output_dir);
}

Json to_json(const ExperimentConfig& c) {
  Json model{{"preset", c.model.preset}, {"kappa", c.model.kappa}, {"a", c.model.a},
             {"b", c.model.b},           {"beta", c.model.beta},   {"windows", c.model.windows}};
  return Json{{"experiment", c.experiment},
              {"model", model},
              {"N", c.N},
              {"J", c.J},
              {"dt", c.dt},
              {"T", c.T},
              {"seeds", c.seeds},
              {"replicas", c.replicas},
              {"basis", {{"K_s", c.basis.spatial}, {"K_t", c.basis.temporal}}},
              {"gamma_profile", c.gamma_profile},
              {"cells", c.cells},
              {"burn_in", c.burn_in},
              {"snapshots", c.snapshots},
              {"thin", c.thin},
              {"ldp_threshold", c.ldp_threshold},
              {"output_dir", c.output_dir}};
}

std::string config_hash(const ExperimentConfig& cfg) {
  Json j = to_json(cfg);
  j.erase("output_dir");
  return hex64(fnv1a64(j.dump()));
}

ResultRecord plot_record(const std::string& experiment, const std::string& hash,
                         const std::string& file, const std::vector<std::string>& columns,
                         const std::vector<std::vector<double>>& rows) {
  ResultRecord r;
  r.type = "plot";
  r.experiment = experiment;
  r.config_hash = hash;
  r.payload = Json{{"file", file}, {"columns", columns}, {"rows", rows}};
  return r;
}

// ---------------------------------------------------------------- workers

std::size_t worker_count() {
  if (const char* env = std::getenv("GKLAB_WORKERS")) {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (end != env && v > 0) return static_cast<std::size_t>(v);
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

void parallel_for(std::size_t count, std::size_t workers,
                  const std::function<void(std::size_t)>& task, std::vector<std::string>* errors) {
  if (errors) errors->assign(count, "");
  std::atomic<std::size_t> next{0};
  std::vector<std::exception_ptr> failures(count);
  auto body = [&] {
    for (std::size_t i; (i = next.fetch_add(1)) < count;) {
      try {
        task(i);
      } catch (...) {
        failures[i] = std::current_exception();
      }
    }
  };
  workers = std::clamp<std::size_t>(workers, 1, std::max<std::size_t>(count, 1));
  std::vector<std::thread> pool;
  for (std::size_t w = 1; w < workers; ++w) pool.emplace_back(body);
  body();
  for (auto& t : pool) t.join();
  for (std::size_t i = 0; i < count; ++i) {
    if (!failures[i]) continue;
    if (!errors) std::rethrow_exception(failures[i]);
    try {
      std::rethrow_exception(failures[i]);
    } catch (const std::exception& e) {
      (*errors)[i] = e.what();
    } catch (...) {
      (*errors)[i] = "unknown error";
    }
  }
}

// ---------------------------------------------------------------- writer

namespace {

std::string csv(const std::vector<std::vector<double>>& rows) {
  std::ostringstream os;
  for (const auto& r : rows) {
    for (std::size_t i = 0; i < r.size(); ++i) os << (i ? "," : "") << exact(r[i]);
    os << '\n';
  }
  return os.str();
}

std::string dat(const Json& payload) {
  std::ostringstream os;
  os << '#';
  for (const auto& c : payload.at("columns")) os << ' ' << c.get<std::string>();
  os << '\n';
  for (const auto& r : payload.at("rows")) {
    bool first = true;
    for (const auto& v : r) {
      os << (first ? "" : " ") << exact(v.get<double>());
      first = false;
    }
    os << '\n';
  }
  return os.str();
}

}  // namespace

fs::path write_records(const std::vector<ResultRecord>& records, const ExperimentConfig& cfg,
                       const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw NumericalError("cannot create output directory '" + dir.string() + "'");
  Json manifest{{"config", to_json(cfg)},
                {"config_hash", config_hash(cfg)},
                {"records", records.size()},
                {"files", Json::array()},
                {"status", "complete"}};
  auto emit = [&](const std::string& name, const std::string& content, bool deterministic) {
    const fs::path p = dir / name;
    std::ofstream f(p, std::ios::binary);
    f << content;
    f.close();
    if (!f) throw NumericalError("write failed: " + p.string());
    manifest["files"].push_back(Json{{"name", name},
                                     {"bytes", content.size()},
                                     {"fnv1a64", hex64(fnv1a64(content))},
                                     {"deterministic", deterministic}});
  };
  try {
    std::string stream, timing;
    std::size_t index = 0;
    for (const auto& r : records) {
      Json payload = r.payload;
      for (const auto& [name, rows] : r.fields) {
        const std::string file = r.experiment + "_" + std::to_string(index) + "_" + name + ".csv";
        emit(file, csv(rows), true);
        payload["fields"][name] = file;
      }
      if (r.type == "plot") emit(r.payload.at("file").get<std::string>(), dat(r.payload), true);
      Json line{{"type", r.type},
                {"experiment", r.experiment},
                {"config_hash", r.config_hash},
                {"seed", r.seed},
                {"payload", payload}};
      stream += line.dump() + "\n";
      timing += Json{{"record", index}, {"wall_seconds", r.wall_seconds}}.dump() + "\n";
      ++index;
    }
    emit("records.ndjson", stream, true);
    emit("timing.ndjson", timing, false);
    emit("config.json", to_json(cfg).dump(2) + "\n", true);
  } catch (const std::exception& e) {
    manifest["status"] = "partial";
    manifest["error"] = e.what();
    std::ofstream(dir / "manifest.json") << manifest.dump(2) << '\n';
    throw;
  }
  const fs::path mpath = dir / "manifest.json";
  std::ofstream(mpath) << manifest.dump(2) << '\n';
  return mpath;
}

}  // namespace gk
