#include "metafors/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <map>
#include <set>
#include <sstream>

#include <json.hpp>

#include "metafors/baselines.hpp"
#include "metafors/errors.hpp"
#include "metafors/library.hpp"
#include "metafors/metrics.hpp"
#include "metafors/rng.hpp"
#include "metafors/serialize.hpp"
#include "metafors/signal_mapper.hpp"
#include "metafors/systems.hpp"
#include "metafors/threads.hpp"

namespace metafors {

using nlohmann::json;

std::string experiment_kind_name(ExperimentKind kind) {
  switch (kind) {
    case ExperimentKind::LogisticBifurcation: return "logistic_bifurcation";
    case ExperimentKind::DualMapBifurcation: return "dual_map_bifurcation";
    case ExperimentKind::LorenzGrid: return "lorenz_grid";
    case ExperimentKind::LorenzColdStartOnly: return "lorenz_cold_start_only";
    case ExperimentKind::LorenzValidTimeVsNtest: return "lorenz_valid_time_vs_ntest";
    case ExperimentKind::NoiseSweep: return "noise_sweep";
  }
  throw Error("unreachable experiment kind");
}

namespace {

ExperimentKind experiment_kind_from_name(const std::string& name) {
  for (ExperimentKind kind :
       {ExperimentKind::LogisticBifurcation, ExperimentKind::DualMapBifurcation,
        ExperimentKind::LorenzGrid, ExperimentKind::LorenzColdStartOnly,
        ExperimentKind::LorenzValidTimeVsNtest, ExperimentKind::NoiseSweep})
    if (experiment_kind_name(kind) == name) return kind;
  throw ConfigError("unknown experiment \"" + name + "\"");
}

bool is_map_experiment(ExperimentKind kind) {
  return kind == ExperimentKind::LogisticBifurcation ||
         kind == ExperimentKind::DualMapBifurcation;
}

bool is_cold_start_only(ExperimentKind kind) {
  return kind == ExperimentKind::LorenzColdStartOnly;
}

std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::vector<double> linspace(double lo, double hi, Eigen::Index n) {
  std::vector<double> out;
  out.reserve(static_cast<std::size_t>(n));
  if (n == 1) {
    out.push_back(lo);
    return out;
  }
  for (Eigen::Index i = 0; i < n; ++i)
    out.push_back(lo + (hi - lo) * static_cast<double>(i) /
                           static_cast<double>(n - 1));
  return out;
}

// ---------------------------------------------------------------------------
// Config parsing

void require_keys(const json& obj, const std::string& where,
                  const std::set<std::string>& allowed) {
  for (const auto& item : obj.items())
    if (!allowed.contains(item.key()))
      throw ConfigError("unknown key \"" + item.key() + "\" in " + where);
}

ReservoirSettings parse_reservoir_settings(const json& j, const std::string& where,
                                           ReservoirSettings base) {
  require_keys(j, where,
               {"n_nodes", "mean_in_degree", "spectral_radius", "input_strength",
                "bias_strength", "leakage", "alpha"});
  if (j.contains("n_nodes")) base.n_nodes = j.at("n_nodes").get<Eigen::Index>();
  if (j.contains("mean_in_degree"))
    base.mean_in_degree = j.at("mean_in_degree").get<double>();
  if (j.contains("spectral_radius"))
    base.spectral_radius = j.at("spectral_radius").get<double>();
  if (j.contains("input_strength"))
    base.input_strength = j.at("input_strength").get<double>();
  if (j.contains("bias_strength"))
    base.bias_strength = j.at("bias_strength").get<double>();
  if (j.contains("leakage")) base.leakage = j.at("leakage").get<double>();
  if (j.contains("alpha")) base.alpha = j.at("alpha").get<double>();
  return base;
}

json reservoir_settings_to_json(const ReservoirSettings& s) {
  return {{"n_nodes", s.n_nodes},
          {"mean_in_degree", s.mean_in_degree},
          {"spectral_radius", s.spectral_radius},
          {"input_strength", s.input_strength},
          {"bias_strength", s.bias_strength},
          {"leakage", s.leakage},
          {"alpha", s.alpha}};
}

ExperimentConfig parse_config_json(const json& j) {
  require_keys(j, "config",
               {"experiment", "seed", "replicates", "methods", "n_train", "n_trans",
                "n_fit", "n_test", "n_for", "forecast_discard", "attractor_discard",
                "stride", "forecaster", "signal_mapper", "observation", "noise",
                "library", "test_grid"});

  ExperimentConfig config;
  config.kind = experiment_kind_from_name(j.at("experiment").get<std::string>());
  if (j.contains("seed")) config.seed = j.at("seed").get<std::uint64_t>();
  if (j.contains("replicates")) config.replicates = j.at("replicates").get<int>();
  config.methods = j.at("methods").get<std::vector<std::string>>();
  if (j.contains("n_train")) config.n_train = j.at("n_train").get<Eigen::Index>();
  if (j.contains("n_trans")) config.n_trans = j.at("n_trans").get<Eigen::Index>();
  if (j.contains("n_test")) {
    if (j.at("n_test").is_array())
      config.n_test_values = j.at("n_test").get<std::vector<Eigen::Index>>();
    else
      config.n_test_values = {j.at("n_test").get<Eigen::Index>()};
  }
  if (j.contains("n_for")) config.n_for = j.at("n_for").get<Eigen::Index>();
  if (j.contains("forecast_discard"))
    config.forecast_discard = j.at("forecast_discard").get<Eigen::Index>();
  if (j.contains("attractor_discard"))
    config.attractor_discard = j.at("attractor_discard").get<Eigen::Index>();
  if (j.contains("stride")) config.stride = j.at("stride").get<Eigen::Index>();
  if (j.contains("n_fit") &&
      j.at("n_fit").get<Eigen::Index>() != config.n_train - config.n_trans - 1)
    throw ConfigError("n_fit must equal n_train - n_trans - 1");

  if (j.contains("forecaster"))
    config.forecaster =
        parse_reservoir_settings(j.at("forecaster"), "forecaster", config.forecaster);
  if (j.contains("signal_mapper"))
    config.signal_mapper = parse_reservoir_settings(j.at("signal_mapper"),
                                                    "signal_mapper",
                                                    config.signal_mapper);

  if (j.contains("observation") && !j.at("observation").is_string())
    config.observation = j.at("observation").get<std::vector<Eigen::Index>>();
  else if (j.contains("observation") &&
           j.at("observation").get<std::string>() != "full")
    throw ConfigError("observation must be \"full\" or a component index list");

  if (j.contains("noise")) {
    config.noise.clear();
    for (const json& item : j.at("noise")) {
      require_keys(item, "noise entry", {"sigma_test", "train_matched"});
      NoiseSetting setting;
      setting.sigma_test = item.at("sigma_test").get<double>();
      if (item.contains("train_matched"))
        setting.train_matched = item.at("train_matched").get<bool>();
      config.noise.push_back(setting);
    }
  }

  const json& lib = j.at("library");
  const json& grid = j.at("test_grid");
  switch (config.kind) {
    case ExperimentKind::LogisticBifurcation: {
      require_keys(lib, "library", {"n_signals", "mu_min", "mu_max"});
      config.logistic_library = {lib.at("n_signals").get<Eigen::Index>(),
                                 lib.at("mu_min").get<double>(),
                                 lib.at("mu_max").get<double>()};
      require_keys(grid, "test_grid", {"n_points", "mu_min", "mu_max", "mu_values"});
      if (grid.contains("mu_values")) {
        config.logistic_grid.values = grid.at("mu_values").get<std::vector<double>>();
      } else {
        config.logistic_grid.n_points = grid.at("n_points").get<Eigen::Index>();
        config.logistic_grid.lo = grid.at("mu_min").get<double>();
        config.logistic_grid.hi = grid.at("mu_max").get<double>();
      }
      break;
    }
    case ExperimentKind::DualMapBifurcation: {
      require_keys(lib, "library",
                   {"n_logistic", "mu_min", "mu_max", "n_gauss", "a_min", "a_max"});
      config.logistic_library = {lib.at("n_logistic").get<Eigen::Index>(),
                                 lib.at("mu_min").get<double>(),
                                 lib.at("mu_max").get<double>()};
      config.gauss_library = {lib.at("n_gauss").get<Eigen::Index>(),
                              lib.at("a_min").get<double>(),
                              lib.at("a_max").get<double>()};
      require_keys(grid, "test_grid",
                   {"n_per_map", "mu_min", "mu_max", "a_min", "a_max", "mu_values",
                    "a_values"});
      if (grid.contains("mu_values") || grid.contains("a_values")) {
        if (grid.contains("mu_values"))
          config.logistic_grid.values =
              grid.at("mu_values").get<std::vector<double>>();
        if (grid.contains("a_values"))
          config.gauss_grid.values = grid.at("a_values").get<std::vector<double>>();
      } else {
        const auto n = grid.at("n_per_map").get<Eigen::Index>();
        config.logistic_grid = {n, grid.at("mu_min").get<double>(),
                                grid.at("mu_max").get<double>(), {}};
        config.gauss_grid = {n, grid.at("a_min").get<double>(),
                             grid.at("a_max").get<double>(), {}};
      }
      break;
    }
    case ExperimentKind::LorenzColdStartOnly: {
      require_keys(lib, "library", {"omega", "v1"});
      config.lorenz_library.n_signals = 1;
      config.lorenz_library.fixed_omega = lib.at("omega").get<double>();
      config.lorenz_library.fixed_v1 = lib.at("v1").get<double>();
      require_keys(grid, "test_grid", {"n_points"});
      config.lorenz_grid.fixed_omega = config.lorenz_library.fixed_omega;
      config.lorenz_grid.fixed_v1 = config.lorenz_library.fixed_v1;
      config.lorenz_grid.n_points = grid.at("n_points").get<Eigen::Index>();
      break;
    }
    case ExperimentKind::LorenzGrid:
    case ExperimentKind::LorenzValidTimeVsNtest:
    case ExperimentKind::NoiseSweep: {
      require_keys(lib, "library",
                   {"n_signals", "omega_min", "omega_max", "v1_min", "v1_max"});
      config.lorenz_library.n_signals = lib.at("n_signals").get<Eigen::Index>();
      config.lorenz_library.omega_min = lib.at("omega_min").get<double>();
      config.lorenz_library.omega_max = lib.at("omega_max").get<double>();
      config.lorenz_library.v1_min = lib.at("v1_min").get<double>();
      config.lorenz_library.v1_max = lib.at("v1_max").get<double>();
      require_keys(grid, "test_grid",
                   {"n_omega", "omega_min", "omega_max", "n_v1", "v1_min", "v1_max"});
      config.lorenz_grid.n_omega = grid.at("n_omega").get<Eigen::Index>();
      config.lorenz_grid.omega_min = grid.at("omega_min").get<double>();
      config.lorenz_grid.omega_max = grid.at("omega_max").get<double>();
      config.lorenz_grid.n_v1 = grid.at("n_v1").get<Eigen::Index>();
      config.lorenz_grid.v1_min = grid.at("v1_min").get<double>();
      config.lorenz_grid.v1_max = grid.at("v1_max").get<double>();
      break;
    }
  }

  validate_config(config);
  return config;
}

json config_to_json(const ExperimentConfig& config) {
  json j;
  j["experiment"] = experiment_kind_name(config.kind);
  j["seed"] = config.seed;
  j["replicates"] = config.replicates;
  j["methods"] = config.methods;
  j["n_train"] = config.n_train;
  j["n_trans"] = config.n_trans;
  j["n_test"] = config.n_test_values;
  j["n_for"] = config.n_for;
  j["forecast_discard"] = config.forecast_discard;
  j["attractor_discard"] = config.attractor_discard;
  j["stride"] = config.stride;
  j["forecaster"] = reservoir_settings_to_json(config.forecaster);
  j["signal_mapper"] = reservoir_settings_to_json(config.signal_mapper);
  if (config.observation.empty())
    j["observation"] = "full";
  else
    j["observation"] = config.observation;
  json noise = json::array();
  for (const NoiseSetting& n : config.noise)
    noise.push_back(
        {{"sigma_test", n.sigma_test}, {"train_matched", n.train_matched}});
  j["noise"] = noise;

  switch (config.kind) {
    case ExperimentKind::LogisticBifurcation:
      j["library"] = {{"n_signals", config.logistic_library.n_signals},
                      {"mu_min", config.logistic_library.lo},
                      {"mu_max", config.logistic_library.hi}};
      if (!config.logistic_grid.values.empty())
        j["test_grid"] = {{"mu_values", config.logistic_grid.values}};
      else
        j["test_grid"] = {{"n_points", config.logistic_grid.n_points},
                          {"mu_min", config.logistic_grid.lo},
                          {"mu_max", config.logistic_grid.hi}};
      break;
    case ExperimentKind::DualMapBifurcation:
      j["library"] = {{"n_logistic", config.logistic_library.n_signals},
                      {"mu_min", config.logistic_library.lo},
                      {"mu_max", config.logistic_library.hi},
                      {"n_gauss", config.gauss_library.n_signals},
                      {"a_min", config.gauss_library.lo},
                      {"a_max", config.gauss_library.hi}};
      if (!config.logistic_grid.values.empty() || !config.gauss_grid.values.empty()) {
        j["test_grid"] = json::object();
        if (!config.logistic_grid.values.empty())
          j["test_grid"]["mu_values"] = config.logistic_grid.values;
        if (!config.gauss_grid.values.empty())
          j["test_grid"]["a_values"] = config.gauss_grid.values;
      } else {
        j["test_grid"] = {{"n_per_map", config.logistic_grid.n_points},
                          {"mu_min", config.logistic_grid.lo},
                          {"mu_max", config.logistic_grid.hi},
                          {"a_min", config.gauss_grid.lo},
                          {"a_max", config.gauss_grid.hi}};
      }
      break;
    case ExperimentKind::LorenzColdStartOnly:
      j["library"] = {{"omega", *config.lorenz_library.fixed_omega},
                      {"v1", *config.lorenz_library.fixed_v1}};
      j["test_grid"] = {{"n_points", config.lorenz_grid.n_points}};
      break;
    default:
      j["library"] = {{"n_signals", config.lorenz_library.n_signals},
                      {"omega_min", config.lorenz_library.omega_min},
                      {"omega_max", config.lorenz_library.omega_max},
                      {"v1_min", config.lorenz_library.v1_min},
                      {"v1_max", config.lorenz_library.v1_max}};
      j["test_grid"] = {{"n_omega", config.lorenz_grid.n_omega},
                        {"omega_min", config.lorenz_grid.omega_min},
                        {"omega_max", config.lorenz_grid.omega_max},
                        {"n_v1", config.lorenz_grid.n_v1},
                        {"v1_min", config.lorenz_grid.v1_min},
                        {"v1_max", config.lorenz_grid.v1_max}};
      break;
  }
  return j;
}

bool parse_zero_start_library(const std::string& method, Eigen::Index& member) {
  const std::string prefix = "zero_start_library_";
  if (method.rfind(prefix, 0) != 0) return false;
  const std::string tail = method.substr(prefix.size());
  if (tail.empty() || tail.find_first_not_of("0123456789") != std::string::npos)
    throw ConfigError("malformed method id \"" + method + "\"");
  member = static_cast<Eigen::Index>(std::stoll(tail));
  return true;
}

Eigen::Index library_size(const ExperimentConfig& config) {
  if (is_map_experiment(config.kind))
    return config.logistic_library.n_signals + config.gauss_library.n_signals;
  return config.lorenz_library.n_signals;
}

}  // namespace

void validate_config(const ExperimentConfig& config) {
  if (config.replicates < 1) throw ConfigError("replicates must be >= 1");
  if (config.methods.empty()) throw ConfigError("methods list is empty");
  if (config.n_for < 1) throw ConfigError("n_for must be >= 1");
  if (config.n_train <= config.n_trans + 1)
    throw ConfigError("n_train must exceed n_trans + 1");
  if (config.forecast_discard + 1 >= config.n_for)
    throw ConfigError("n_for must exceed forecast_discard + 1");
  if (config.stride < 1) throw ConfigError("stride must be >= 1");
  if (config.n_test_values.empty()) throw ConfigError("n_test list is empty");
  for (Eigen::Index n_test : config.n_test_values) {
    if (n_test < 1) throw ConfigError("n_test values must be >= 1");
    if (n_test + config.n_trans > config.n_train)
      throw ConfigError("n_test=" + std::to_string(n_test) +
                        " leaves no library windows after the transient");
  }
  if (library_size(config) < 1) throw ConfigError("library must have >= 1 members");

  if (is_map_experiment(config.kind) && !config.observation.empty())
    throw ConfigError("map experiments are fully observed; drop \"observation\"");
  for (Eigen::Index c : config.observation)
    if (c < 0 || c > 2)
      throw ConfigError("observation indices must select Lorenz components 0..2");
  for (const NoiseSetting& n : config.noise)
    if (n.sigma_test < 0) throw ConfigError("sigma_test must be >= 0");
  if (config.noise.empty()) throw ConfigError("noise list is empty");

  const bool cold_only = is_cold_start_only(config.kind);
  for (const std::string& method : config.methods) {
    Eigen::Index member = 0;
    if (parse_zero_start_library(method, member)) {
      if (member >= library_size(config))
        throw ConfigError("method \"" + method + "\" references member " +
                          std::to_string(member) + " of a library of " +
                          std::to_string(library_size(config)));
      continue;
    }
    if (method == "metafors" || method == "multitask" || method == "train_on_test")
      continue;
    if (method == "metafors_zero_start") {
      if (cold_only)
        throw ConfigError("metafors_zero_start duplicates zero_start_library_0 in "
                          "the cold-start-only scenario");
      continue;
    }
    if (method == "interp" || method == "nearest") {
      if (config.kind == ExperimentKind::DualMapBifurcation)
        throw ConfigError("\"" + method + "\" needs dynamical-parameter labels, "
                          "which are not comparable across two map families");
      if (cold_only)
        throw ConfigError("\"" + method + "\" is undefined when all members share "
                          "one parameter value");
      continue;
    }
    if (method == "backward_const" || method == "train_search") {
      if (!cold_only)
        throw ConfigError("\"" + method + "\" is a cold-start baseline for the "
                          "single-library scenario only");
      continue;
    }
    throw ConfigError("unknown method id \"" + method + "\"");
  }

  if (config.logistic_library.n_signals > 0 &&
      (config.logistic_library.lo <= 0.0 || config.logistic_library.hi > 4.0 ||
       config.logistic_library.hi < config.logistic_library.lo))
    throw ConfigError("logistic library range must lie within (0, 4]");
  if (config.gauss_library.n_signals > 0 &&
      (config.gauss_library.lo <= 0.0 ||
       config.gauss_library.hi < config.gauss_library.lo))
    throw ConfigError("gauss library range must be positive");
}

namespace {

// ---------------------------------------------------------------------------
// Deterministic generation of library members and test points

std::vector<SystemPoint> library_members(const ExperimentConfig& config,
                                         std::uint64_t rep_seed) {
  std::vector<SystemPoint> members;
  if (is_map_experiment(config.kind)) {
    const auto logistic = sample_chaotic_params(
        MapKind::Logistic, config.logistic_library.lo, config.logistic_library.hi,
        config.logistic_library.n_signals,
        derive_seed(rep_seed, "library_params_logistic"));
    for (const MapParams& p : logistic) members.push_back({"logistic", p.mu, 0.0});
    const auto gauss = sample_chaotic_params(
        MapKind::Gauss, config.gauss_library.lo, config.gauss_library.hi,
        config.gauss_library.n_signals,
        derive_seed(rep_seed, "library_params_gauss"));
    for (const MapParams& p : gauss) members.push_back({"gauss", p.a, p.b});
    return members;
  }
  for (Eigen::Index i = 0; i < config.lorenz_library.n_signals; ++i) {
    if (config.lorenz_library.fixed_omega) {
      members.push_back({"lorenz", *config.lorenz_library.fixed_omega,
                         *config.lorenz_library.fixed_v1});
    } else {
      Rng rng(derive_seed(rep_seed, "library_params", static_cast<std::uint64_t>(i)));
      members.push_back(
          {"lorenz",
           rng.uniform(config.lorenz_library.omega_min, config.lorenz_library.omega_max),
           rng.uniform(config.lorenz_library.v1_min, config.lorenz_library.v1_max)});
    }
  }
  return members;
}

std::vector<SystemPoint> test_points(const ExperimentConfig& config) {
  std::vector<SystemPoint> points;
  switch (config.kind) {
    case ExperimentKind::LogisticBifurcation: {
      const std::vector<double> mus =
          config.logistic_grid.values.empty()
              ? linspace(config.logistic_grid.lo, config.logistic_grid.hi,
                         config.logistic_grid.n_points)
              : config.logistic_grid.values;
      for (double mu : mus) points.push_back({"logistic", mu, 0.0});
      break;
    }
    case ExperimentKind::DualMapBifurcation: {
      const std::vector<double> mus =
          config.logistic_grid.values.empty()
              ? linspace(config.logistic_grid.lo, config.logistic_grid.hi,
                         config.logistic_grid.n_points)
              : config.logistic_grid.values;
      for (double mu : mus) points.push_back({"logistic", mu, 0.0});
      const std::vector<double> as =
          config.gauss_grid.values.empty()
              ? linspace(config.gauss_grid.lo, config.gauss_grid.hi,
                         config.gauss_grid.n_points)
              : config.gauss_grid.values;
      for (double a : as) points.push_back({"gauss", a, kGaussTranslation});
      break;
    }
    case ExperimentKind::LorenzColdStartOnly: {
      for (Eigen::Index i = 0; i < config.lorenz_grid.n_points; ++i)
        points.push_back({"lorenz", *config.lorenz_grid.fixed_omega,
                          *config.lorenz_grid.fixed_v1});
      break;
    }
    default: {
      const auto omegas = linspace(config.lorenz_grid.omega_min,
                                   config.lorenz_grid.omega_max,
                                   config.lorenz_grid.n_omega);
      const auto v1s = linspace(config.lorenz_grid.v1_min, config.lorenz_grid.v1_max,
                                config.lorenz_grid.n_v1);
      for (double omega : omegas)
        for (double v1 : v1s) points.push_back({"lorenz", omega, v1});
      break;
    }
  }
  if (points.empty()) throw ConfigError("test grid is empty");
  return points;
}

// Full-state trajectory of n_rows post-transient steps for one system.
Series generate_rows(const SystemPoint& point, const ExperimentConfig& config,
                     std::uint64_t seed, Eigen::Index n_rows) {
  Rng rng(seed);
  const Eigen::Index total = config.attractor_discard + n_rows;
  if (point.system == "logistic") {
    double x0 = rng.uniform01();
    while (x0 == 0.0) x0 = rng.uniform01();
    return logistic_trajectory(point.param1, x0, total, config.attractor_discard);
  }
  if (point.system == "gauss") {
    return gauss_trajectory(point.param1, kGaussTranslation, rng.uniform01(), total,
                            config.attractor_discard);
  }
  LorenzParams params;
  params.omega_t = point.param1;
  params.v1 = point.param2;
  const Eigen::Vector3d x0(rng.uniform(-10, 10), rng.uniform(-10, 10),
                           rng.uniform(-10, 10));
  return lorenz_trajectory(params, x0, total, config.attractor_discard);
}

Series observe(const Series& full, const ExperimentConfig& config) {
  if (config.observation.empty()) return full;
  return partial_observation(full, config.observation);
}

TruthStepper truth_stepper(const SystemPoint& point) {
  if (point.system == "logistic") {
    const double mu = point.param1;
    return [mu](const Eigen::VectorXd& v) {
      return Eigen::VectorXd::Constant(1, logistic_step(mu, v[0]));
    };
  }
  if (point.system == "gauss") {
    const double a = point.param1;
    return [a](const Eigen::VectorXd& v) {
      return Eigen::VectorXd::Constant(1, gauss_step(a, kGaussTranslation, v[0]));
    };
  }
  LorenzParams params;
  params.omega_t = point.param1;
  params.v1 = point.param2;
  return [params](const Eigen::VectorXd& v) {
    return Eigen::VectorXd(lorenz_rk4_step(params, Eigen::Vector3d(v)));
  };
}

// ---------------------------------------------------------------------------
// Run

struct PreparedMethods {
  std::optional<SignalMapper> sm_full;        // "metafors"
  std::optional<SignalMapper> sm_model_only;  // "metafors_zero_start"
  std::optional<TrainedModel> multitask;
  std::optional<LabeledLibrary> labeled;
  Eigen::MatrixXd labels;
};

struct GroupKey {
  int replicate;
  Eigen::Index n_test;
  double sigma_train;
};

void write_results_csv(const std::filesystem::path& path,
                       const std::vector<ResultRow>& rows) {
  std::ofstream out(path);
  if (!out) throw Error("cannot open " + path.string() + " for writing");
  out << "# schema=1\n";
  out << "experiment,method,replicate,replicate_seed,system,param1,param2,"
         "n_test,sigma_test,sigma_train,t_valid,censored,epsilon,diverged,"
         "escaped\n";
  for (const ResultRow& r : rows) {
    out << r.experiment << ',' << r.method << ',' << r.replicate << ','
        << r.replicate_seed << ',' << r.point.system << ','
        << format_double(r.point.param1) << ',' << format_double(r.point.param2)
        << ',' << r.n_test << ',' << format_double(r.sigma_test) << ','
        << format_double(r.sigma_train) << ',' << format_double(r.t_valid) << ','
        << (r.censored ? 1 : 0) << ','
        << (r.epsilon ? format_double(*r.epsilon) : std::string()) << ','
        << (r.diverged ? 1 : 0) << ',' << (r.escaped ? 1 : 0) << "\n";
  }
  if (!out) throw Error("write failed for " + path.string());
}

}  // namespace

ExperimentConfig parse_config_string(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  try {
    if (j.contains("config")) {
      // Results manifest: rerun the embedded config with its recorded seed.
      ExperimentConfig config = parse_config_json(j.at("config"));
      if (j.contains("seed")) config.seed = j.at("seed").get<std::uint64_t>();
      return config;
    }
    return parse_config_json(j);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("malformed config: ") + e.what());
  }
}

ExperimentConfig parse_config_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path.string());
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse_config_string(buffer.str());
}

RunArtifacts run_experiment(const ExperimentConfig& base_config,
                            const RunOptions& opts) {
  ExperimentConfig config = base_config;
  if (opts.seed_override) config.seed = *opts.seed_override;
  validate_config(config);

  const std::string experiment = experiment_kind_name(config.kind);
  const ExperimentFamily family =
      is_map_experiment(config.kind) ? ExperimentFamily::Map : ExperimentFamily::Lorenz;
  const bool fully_observed =
      config.observation.empty() ||
      config.observation == std::vector<Eigen::Index>{0, 1, 2};
  const unsigned threads = std::max(1u, opts.threads);

  const std::vector<SystemPoint> points = test_points(config);

  const bool wants_sm_full = std::count(config.methods.begin(), config.methods.end(),
                                        "metafors") > 0;
  const bool wants_sm_model = std::count(config.methods.begin(),
                                         config.methods.end(),
                                         "metafors_zero_start") > 0;
  const bool wants_multitask = std::count(config.methods.begin(),
                                          config.methods.end(), "multitask") > 0;
  const bool wants_labels =
      std::count(config.methods.begin(), config.methods.end(), "interp") > 0 ||
      std::count(config.methods.begin(), config.methods.end(), "nearest") > 0;

  // Distinct training-noise levels, in first-appearance order.
  std::vector<double> train_sigmas;
  for (const NoiseSetting& n : config.noise) {
    const double sigma = n.train_matched ? n.sigma_test : 0.0;
    if (std::find(train_sigmas.begin(), train_sigmas.end(), sigma) ==
        train_sigmas.end())
      train_sigmas.push_back(sigma);
  }

  std::vector<ResultRow> rows;
  json manifest_replicates = json::array();
  std::map<std::string, double> method_seconds;
  double setup_seconds = 0.0;

  for (int rep = 0; rep < config.replicates; ++rep) {
    const std::uint64_t rep_seed =
        derive_seed(config.seed, "replicate", static_cast<std::uint64_t>(rep));

    ReservoirSpec fspec;
    fspec.n_nodes = config.forecaster.n_nodes;
    fspec.mean_in_degree = config.forecaster.mean_in_degree;
    fspec.spectral_radius = config.forecaster.spectral_radius;
    fspec.input_strength = config.forecaster.input_strength;
    fspec.bias_strength = config.forecaster.bias_strength;
    fspec.leakage = config.forecaster.leakage;
    fspec.n_inputs = is_map_experiment(config.kind)
                         ? 1
                         : (config.observation.empty()
                                ? 3
                                : static_cast<Eigen::Index>(config.observation.size()));
    fspec.seed = derive_seed(rep_seed, "forecaster_reservoir");
    ReservoirSpec mspec = fspec;
    mspec.n_nodes = config.signal_mapper.n_nodes;
    mspec.mean_in_degree = config.signal_mapper.mean_in_degree;
    mspec.spectral_radius = config.signal_mapper.spectral_radius;
    mspec.input_strength = config.signal_mapper.input_strength;
    mspec.bias_strength = config.signal_mapper.bias_strength;
    mspec.leakage = config.signal_mapper.leakage;
    mspec.seed = derive_seed(rep_seed, "signal_mapper_reservoir");

    const auto setup_start = std::chrono::steady_clock::now();
    const Reservoir forecaster = build_reservoir(fspec);
    const Reservoir sm_reservoir = build_reservoir(mspec);

    const std::vector<SystemPoint> members = library_members(config, rep_seed);
    std::vector<Series> clean_signals(members.size());
    parallel_for(members.size(), threads, [&](std::size_t i) {
      const Series full = generate_rows(
          members[i], config,
          derive_seed(rep_seed, "library_signal", static_cast<std::uint64_t>(i)),
          config.n_train);
      if (members[i].system == "logistic" &&
          (full.data.minCoeff() < 0.0 || full.data.maxCoeff() > 1.0))
        throw Error("logistic library signal left the unit interval");
      clean_signals[i] = observe(full, config);
    });
    const Eigen::VectorXd sigma_lib = pooled_component_std(clean_signals);

    json manifest_rep = {{"replicate", rep},
                         {"seed", rep_seed},
                         {"forecaster_spec_hash", forecaster.hash},
                         {"signal_mapper_spec_hash", sm_reservoir.hash},
                         {"libraries", json::array()}};
    setup_seconds +=
        std::chrono::duration<double>(std::chrono::steady_clock::now() - setup_start)
            .count();

    for (Eigen::Index n_test : config.n_test_values) {
      for (double sigma_train : train_sigmas) {
        const auto group_start = std::chrono::steady_clock::now();

        std::vector<Series> train_signals = clean_signals;
        if (sigma_train > 0.0)
          for (std::size_t i = 0; i < train_signals.size(); ++i)
            train_signals[i] = add_observational_noise(
                train_signals[i], sigma_train, sigma_lib,
                derive_seed(rep_seed, "train_noise", static_cast<std::uint64_t>(i)));

        const MetaLibrary library =
            build_meta_library(forecaster, std::move(train_signals), config.n_trans,
                               config.forecaster.alpha, n_test, config.stride,
                               threads);

        PreparedMethods prepared;
        if (wants_sm_full)
          prepared.sm_full = train_signal_mapper(
              sm_reservoir, library, config.signal_mapper.alpha,
              is_cold_start_only(config.kind) ? MapperTargets::ColdStartOnly
                                              : MapperTargets::Full,
              threads);
        if (wants_sm_model)
          prepared.sm_model_only =
              train_signal_mapper(sm_reservoir, library, config.signal_mapper.alpha,
                                  MapperTargets::ModelOnly, threads);
        if (wants_multitask)
          prepared.multitask = train_multitask(forecaster, library.long_signals,
                                               config.n_trans,
                                               config.forecaster.alpha);
        if (wants_labels) {
          const bool scalar = members.front().system != "lorenz";
          prepared.labels.resize(static_cast<Eigen::Index>(members.size()),
                                 scalar ? 1 : 2);
          for (std::size_t i = 0; i < members.size(); ++i) {
            prepared.labels(static_cast<Eigen::Index>(i), 0) = members[i].param1;
            if (!scalar)
              prepared.labels(static_cast<Eigen::Index>(i), 1) = members[i].param2;
          }
          prepared.labeled = LabeledLibrary{&library, prepared.labels};
        }

        json manifest_lib = {{"n_test", n_test},
                             {"sigma_train", sigma_train},
                             {"n_short", library.n_triplets()},
                             {"members", json::array()}};
        for (Eigen::Index i = 0; i < library.n_members(); ++i)
          manifest_lib["members"].push_back(library_member_hash(library, i));
        manifest_rep["libraries"].push_back(manifest_lib);
        setup_seconds += std::chrono::duration<double>(
                             std::chrono::steady_clock::now() - group_start)
                             .count();

        for (const NoiseSetting& noise : config.noise) {
          if ((noise.train_matched ? noise.sigma_test : 0.0) != sigma_train)
            continue;

          // Methods that cannot run at this cue length are skipped entirely.
          std::vector<std::string> active;
          for (const std::string& method : config.methods)
            if (!(method == "train_on_test" && n_test < 2)) active.push_back(method);

          // Cues and truths, one per test point, then one work item per
          // (point, method) writing into its own slot.
          std::vector<Series> cues(points.size()), truths(points.size());
          parallel_for(points.size(), threads, [&](std::size_t k) {
            const Series full = generate_rows(
                points[k], config,
                derive_seed(rep_seed, "test_signal", static_cast<std::uint64_t>(k)),
                n_test + config.n_for);
            const Series observed = observe(full, config);
            Series cue = observed.slice(0, n_test);
            if (noise.sigma_test > 0.0)
              cue = add_observational_noise(
                  cue, noise.sigma_test, sigma_lib,
                  derive_seed(rep_seed, "test_noise", static_cast<std::uint64_t>(k)));
            cues[k] = std::move(cue);
            truths[k] = observed.slice(n_test, config.n_for);
          });

          std::vector<ResultRow> slot(points.size() * active.size());
          parallel_for(slot.size(), threads, [&](std::size_t item) {
            const std::size_t k = item / active.size();
            const std::string& method = active[item % active.size()];
            const auto t0 = std::chrono::steady_clock::now();

            Forecast forecast;
            if (method == "metafors") {
              forecast = metafors_forecast(forecaster, *prepared.sm_full, cues[k],
                                           config.n_for);
            } else if (method == "metafors_zero_start") {
              const TailoredForecaster tf =
                  infer_tailored_forecaster(*prepared.sm_model_only, cues[k]);
              forecast = zero_start_forecast(forecaster, tf.model, cues[k],
                                             config.n_for);
            } else if (method == "multitask") {
              forecast = zero_start_forecast(forecaster, *prepared.multitask,
                                             cues[k], config.n_for);
            } else if (method == "train_on_test") {
              const TrainedModel model =
                  train_on_test(forecaster, cues[k], config.forecaster.alpha, family);
              forecast = zero_start_forecast(forecaster, model, cues[k], config.n_for);
            } else if (method == "interp") {
              if (prepared.labels.cols() == 1)
                forecast = interpolated_forecaster_1d(forecaster, *prepared.labeled,
                                                      points[k].param1, cues[k],
                                                      config.n_for);
              else
                forecast = interpolated_forecaster_2d(
                    forecaster, *prepared.labeled,
                    Eigen::Vector2d(points[k].param1, points[k].param2), cues[k],
                    config.n_for);
            } else if (method == "nearest") {
              Eigen::VectorXd params(prepared.labels.cols());
              params[0] = points[k].param1;
              if (params.size() > 1) params[1] = points[k].param2;
              forecast = nearest_library_forecast(forecaster, *prepared.labeled,
                                                  params, cues[k], config.n_for);
            } else if (method == "backward_const") {
              forecast = backward_extrapolation_start(forecaster, library.models[0],
                                                      cues[k], config.n_for);
            } else if (method == "train_search") {
              forecast =
                  training_data_search_start(forecaster, library, cues[k],
                                             config.n_for);
            } else {
              Eigen::Index member = 0;
              parse_zero_start_library(method, member);
              forecast = zero_start_forecast(
                  forecaster, library.models[static_cast<std::size_t>(member)],
                  cues[k], config.n_for);
            }

            ResultRow row;
            row.experiment = experiment;
            row.method = method;
            row.replicate = rep;
            row.replicate_seed = rep_seed;
            row.point = points[k];
            row.n_test = n_test;
            row.sigma_test = noise.sigma_test;
            row.sigma_train = sigma_train;
            const ValidTime vt = valid_time(forecast.series, truths[k]);
            row.t_valid = vt.t_valid;
            row.censored = vt.censored;
            row.diverged = forecast.diverged;
            if (fully_observed) {
              const OneStepError err = autonomous_one_step_error(
                  forecast.series, truth_stepper(points[k]), config.forecast_discard);
              row.epsilon = err.epsilon;
              row.diverged = row.diverged || err.diverged;
            }
            if (points[k].system != "lorenz")
              row.escaped =
                  bifurcation_points(forecast.series, config.forecast_discard).escaped;
            row.wall_time_s =
                std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
                    .count();
            slot[item] = std::move(row);
          });

          for (ResultRow& row : slot) {
            method_seconds[row.method] += row.wall_time_s;
            rows.push_back(std::move(row));
          }
        }
      }
    }
    manifest_replicates.push_back(std::move(manifest_rep));
  }

  std::filesystem::create_directories(opts.out_dir);
  RunArtifacts artifacts;
  artifacts.results_csv = opts.out_dir / "results.csv";
  artifacts.manifest = opts.out_dir / "manifest.json";
  artifacts.timings_csv = opts.out_dir / "timings.csv";

  write_results_csv(artifacts.results_csv, rows);

  json manifest = {{"schema_version", 1},
                   {"seed", config.seed},
                   {"config", config_to_json(config)},
                   {"results", "results.csv"},
                   {"n_rows", rows.size()},
                   {"replicates", std::move(manifest_replicates)}};
  {
    std::ofstream out(artifacts.manifest);
    if (!out) throw Error("cannot open " + artifacts.manifest.string());
    out << manifest.dump(2) << "\n";
  }

  {
    // Wall-clock accounting lives outside results.csv so that the results
    // stay bitwise reproducible across runs and thread counts.
    std::ofstream out(artifacts.timings_csv);
    out << "section,seconds\n";
    out << "setup," << setup_seconds << "\n";
    for (const auto& [method, seconds] : method_seconds)
      out << method << ',' << seconds << "\n";
  }

  artifacts.rows = std::move(rows);
  return artifacts;
}

// ---------------------------------------------------------------------------
// Results CSV reading and summaries

std::vector<ResultRow> read_results_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path.string());
  std::string line;
  if (!std::getline(in, line) || line.rfind("# schema=", 0) != 0)
    throw Error(path.string() + " is missing the schema comment line");
  if (!std::getline(in, line)) throw Error(path.string() + " has no header");

  std::vector<std::string> header;
  {
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) header.push_back(cell);
  }
  auto column = [&](const std::string& name) {
    const auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end())
      throw Error(path.string() + " is missing column " + name);
    return static_cast<std::size_t>(it - header.begin());
  };
  const std::size_t c_experiment = column("experiment"), c_method = column("method"),
                    c_rep = column("replicate"), c_seed = column("replicate_seed"),
                    c_system = column("system"), c_p1 = column("param1"),
                    c_p2 = column("param2"), c_ntest = column("n_test"),
                    c_st = column("sigma_test"), c_str = column("sigma_train"),
                    c_tv = column("t_valid"), c_cen = column("censored"),
                    c_eps = column("epsilon"), c_div = column("diverged"),
                    c_esc = column("escaped");

  std::vector<ResultRow> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    cells.resize(header.size());

    ResultRow row;
    row.experiment = cells[c_experiment];
    row.method = cells[c_method];
    row.replicate = std::stoi(cells[c_rep]);
    row.replicate_seed = std::stoull(cells[c_seed]);
    row.point = {cells[c_system], std::stod(cells[c_p1]), std::stod(cells[c_p2])};
    row.n_test = std::stoll(cells[c_ntest]);
    row.sigma_test = std::stod(cells[c_st]);
    row.sigma_train = std::stod(cells[c_str]);
    row.t_valid = std::stod(cells[c_tv]);
    row.censored = cells[c_cen] == "1";
    if (!cells[c_eps].empty()) row.epsilon = std::stod(cells[c_eps]);
    row.diverged = cells[c_div] == "1";
    row.escaped = cells[c_esc] == "1";
    rows.push_back(std::move(row));
  }
  return rows;
}

namespace {

double stat_of(std::vector<double> values, SummaryStat stat) {
  if (values.empty()) return std::numeric_limits<double>::quiet_NaN();
  switch (stat) {
    case SummaryStat::Mean: {
      double sum = 0;
      for (double v : values) sum += v;
      return sum / static_cast<double>(values.size());
    }
    case SummaryStat::Median: {
      std::sort(values.begin(), values.end());
      const std::size_t n = values.size();
      return n % 2 == 1 ? values[n / 2]
                        : 0.5 * (values[n / 2 - 1] + values[n / 2]);
    }
    case SummaryStat::Stderr: {
      if (values.size() < 2) return 0.0;
      double sum = 0;
      for (double v : values) sum += v;
      const double mean = sum / static_cast<double>(values.size());
      double sq = 0;
      for (double v : values) sq += (v - mean) * (v - mean);
      const double var = sq / static_cast<double>(values.size() - 1);
      return std::sqrt(var / static_cast<double>(values.size()));
    }
  }
  return 0.0;
}

std::string stat_name(SummaryStat stat) {
  switch (stat) {
    case SummaryStat::Mean: return "mean";
    case SummaryStat::Median: return "median";
    case SummaryStat::Stderr: return "stderr";
  }
  return "";
}

}  // namespace

std::vector<SummaryRow> summarize_results(const std::filesystem::path& results_csv,
                                          SummaryStat stat) {
  const std::vector<ResultRow> rows = read_results_csv(results_csv);
  if (rows.empty()) throw Error("no result rows in " + results_csv.string());
  for (const ResultRow& row : rows)
    if (row.experiment != rows.front().experiment)
      throw Error("refusing to summarize a file that mixes experiments " +
                  rows.front().experiment + " and " + row.experiment);

  struct Group {
    std::vector<double> t_valid, epsilon;
    std::size_t censored = 0, diverged = 0, escaped = 0;
  };
  std::map<std::tuple<std::string, Eigen::Index, double, double>, Group> groups;
  for (const ResultRow& row : rows) {
    Group& g = groups[{row.method, row.n_test, row.sigma_test, row.sigma_train}];
    g.t_valid.push_back(row.t_valid);
    if (row.epsilon) g.epsilon.push_back(*row.epsilon);
    if (row.censored) ++g.censored;
    if (row.diverged) ++g.diverged;
    if (row.escaped) ++g.escaped;
  }

  std::vector<SummaryRow> out;
  for (const auto& [key, g] : groups) {
    SummaryRow s;
    s.experiment = rows.front().experiment;
    s.method = std::get<0>(key);
    s.n_test = std::get<1>(key);
    s.sigma_test = std::get<2>(key);
    s.sigma_train = std::get<3>(key);
    s.n = g.t_valid.size();
    s.t_valid = stat_of(g.t_valid, stat);
    if (!g.epsilon.empty()) s.epsilon = stat_of(g.epsilon, stat);
    s.n_censored = g.censored;
    s.n_diverged = g.diverged;
    s.n_escaped = g.escaped;
    s.n_epsilon = g.epsilon.size();
    out.push_back(std::move(s));
  }
  return out;
}

void write_summary_csv(const std::vector<SummaryRow>& rows, SummaryStat stat,
                       const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot open " + path.string() + " for writing");
  const std::string suffix = stat_name(stat);
  out << "# schema=1\n";
  out << "experiment,method,n_test,sigma_test,sigma_train,n,t_valid_" << suffix
      << ",epsilon_" << suffix << ",n_censored,n_diverged,n_escaped,n_epsilon\n";
  for (const SummaryRow& r : rows) {
    out << r.experiment << ',' << r.method << ',' << r.n_test << ','
        << format_double(r.sigma_test) << ',' << format_double(r.sigma_train) << ','
        << r.n << ',' << format_double(r.t_valid) << ','
        << (r.epsilon ? format_double(*r.epsilon) : std::string()) << ','
        << r.n_censored << ',' << r.n_diverged << ',' << r.n_escaped << ','
        << r.n_epsilon << "\n";
  }
}

}  // namespace metafors
