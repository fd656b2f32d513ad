#include <map>

#include "metafors/errors.hpp"
#include "metafors/experiment.hpp"

namespace metafors {

namespace {

// Reference hyperparameters for the three experiment families. Desk presets
// shrink test grids and replicate counts only; reservoir sizes, training
// lengths and regularizations are identical at both scales.

ReservoirSettings forecaster_settings(double rho, double sigma, double leakage) {
  ReservoirSettings s;
  s.n_nodes = 500;
  s.mean_in_degree = 3.0;
  s.spectral_radius = rho;
  s.input_strength = sigma;
  s.bias_strength = 0.5;
  s.leakage = leakage;
  s.alpha = 1e-6;
  return s;
}

ReservoirSettings mapper_settings(double sigma) {
  ReservoirSettings s;
  s.n_nodes = 1000;
  s.mean_in_degree = 3.0;
  s.spectral_radius = 0.9;
  s.input_strength = sigma;
  s.bias_strength = 0.5;
  s.leakage = 0.1;
  s.alpha = 1e-8;
  return s;
}

void apply_map_family(ExperimentConfig& c, double sigma_in) {
  c.forecaster = forecaster_settings(0.2, sigma_in, 0.2);
  c.signal_mapper = mapper_settings(sigma_in);
  c.n_train = 1000;
  c.n_trans = 50;
  c.n_for = 1000;
  c.forecast_discard = 500;
  c.attractor_discard = 1000;
}

void apply_lorenz_family(ExperimentConfig& c) {
  c.forecaster = forecaster_settings(0.9, 0.1, 0.1);
  c.signal_mapper = mapper_settings(0.1);
  c.n_train = 6000;
  c.n_trans = 1000;
  c.n_for = 3000;
  c.forecast_discard = 500;
  c.attractor_discard = 1000;
}

ExperimentConfig logistic_bifurcation(PresetScale scale) {
  ExperimentConfig c;
  c.kind = ExperimentKind::LogisticBifurcation;
  apply_map_family(c, 2.5);
  c.methods = {"metafors", "metafors_zero_start", "interp", "multitask",
               "train_on_test"};
  c.logistic_library = {5, 3.7, 3.8};
  c.n_test_values = {5};
  if (scale == PresetScale::Desk) {
    c.replicates = 3;
    c.logistic_grid = {100, 2.9, 4.0, {}};
  } else {
    c.replicates = 10;
    c.logistic_grid = {500, 2.9, 4.0, {}};
  }
  return c;
}

ExperimentConfig logistic_ntest_sweep(PresetScale scale) {
  ExperimentConfig c = logistic_bifurcation(scale);
  if (scale == PresetScale::Desk) {
    c.n_test_values = {2, 5, 10, 20};
  } else {
    c.n_test_values.clear();
    for (Eigen::Index n = 1; n <= 20; ++n) c.n_test_values.push_back(n);
  }
  return c;
}

ExperimentConfig dual_map_bifurcation(PresetScale scale) {
  ExperimentConfig c;
  c.kind = ExperimentKind::DualMapBifurcation;
  apply_map_family(c, 4.0);
  c.methods = {"metafors", "multitask", "train_on_test"};
  c.logistic_library = {5, 3.6, 3.9};
  c.gauss_library = {5, 6.0, 12.0};
  c.n_test_values = {10};
  if (scale == PresetScale::Desk) {
    c.replicates = 3;
    c.logistic_grid = {50, 3.4, 4.0, {}};
    c.gauss_grid = {50, 4.0, 14.0, {}};
  } else {
    c.replicates = 10;
    c.logistic_grid = {500, 3.4, 4.0, {}};
    c.gauss_grid = {500, 4.0, 14.0, {}};
  }
  return c;
}

ExperimentConfig lorenz_grid(PresetScale scale) {
  ExperimentConfig c;
  c.kind = ExperimentKind::LorenzGrid;
  apply_lorenz_family(c);
  c.methods = {"metafors", "metafors_zero_start", "interp", "nearest", "multitask",
               "train_on_test"};
  c.observation = {2};
  c.lorenz_library = {9, 0.75, 1.25, 7.5, 12.5, {}, {}};
  c.n_test_values = {20};
  if (scale == PresetScale::Desk) {
    c.replicates = 3;
    c.lorenz_grid.n_omega = 9;
    c.lorenz_grid.n_v1 = 9;
  } else {
    c.replicates = 10;
    c.lorenz_grid.n_omega = 25;
    c.lorenz_grid.n_v1 = 25;
  }
  return c;
}

ExperimentConfig lorenz_valid_time_vs_ntest(PresetScale scale) {
  ExperimentConfig c = lorenz_grid(scale);
  c.kind = ExperimentKind::LorenzValidTimeVsNtest;
  c.n_test_values = scale == PresetScale::Desk
                        ? std::vector<Eigen::Index>{1, 5, 20, 100}
                        : std::vector<Eigen::Index>{1, 2, 5, 10, 20, 50, 100, 200};
  return c;
}

ExperimentConfig lorenz_cold_start_only(PresetScale scale) {
  ExperimentConfig c;
  c.kind = ExperimentKind::LorenzColdStartOnly;
  apply_lorenz_family(c);
  c.methods = {"metafors", "zero_start_library_0", "backward_const", "train_search"};
  c.observation = {2};
  c.lorenz_library.n_signals = 1;
  c.lorenz_library.fixed_omega = 1.0;
  c.lorenz_library.fixed_v1 = 10.0;
  c.lorenz_grid.fixed_omega = 1.0;
  c.lorenz_grid.fixed_v1 = 10.0;
  c.n_test_values = {1, 2, 5, 10, 20, 50, 100, 200};
  if (scale == PresetScale::Desk) {
    c.replicates = 3;
    c.lorenz_grid.n_points = 81;
  } else {
    c.replicates = 10;
    c.lorenz_grid.n_points = 625;
  }
  return c;
}

ExperimentConfig noise_sweep(PresetScale scale) {
  ExperimentConfig c;
  c.kind = ExperimentKind::NoiseSweep;
  apply_lorenz_family(c);
  c.methods = {"metafors"};
  c.lorenz_library = {9, 0.75, 1.25, 7.5, 12.5, {}, {}};
  c.n_test_values = {20};
  if (scale == PresetScale::Desk) {
    c.replicates = 3;
    c.lorenz_grid.n_omega = 9;
    c.lorenz_grid.n_v1 = 9;
    c.noise = {{0.0, false}, {0.01, false}, {0.1, false}, {0.1, true}};
  } else {
    c.replicates = 10;
    c.lorenz_grid.n_omega = 25;
    c.lorenz_grid.n_v1 = 25;
    c.noise = {{0.0, false},  {0.001, false}, {0.01, false}, {0.1, false},
               {0.3, false},  {0.001, true},  {0.01, true},  {0.1, true},
               {0.3, true}};
  }
  return c;
}

// Minutes-scale CI preset: reduced reservoirs and signal lengths, one
// replicate. Used for determinism checks and smoke tests, not for
// reproducing any figure.
ExperimentConfig logistic_smoke(PresetScale) {
  ExperimentConfig c;
  c.kind = ExperimentKind::LogisticBifurcation;
  apply_map_family(c, 2.5);
  c.forecaster.n_nodes = 100;
  c.signal_mapper.n_nodes = 150;
  c.n_train = 300;
  c.n_trans = 20;
  c.n_for = 200;
  c.forecast_discard = 100;
  c.methods = {"metafors", "metafors_zero_start", "interp", "multitask",
               "train_on_test"};
  c.logistic_library = {2, 3.7, 3.8};
  c.logistic_grid = {8, 2.9, 4.0, {}};
  c.n_test_values = {5};
  c.replicates = 1;
  return c;
}

struct PresetEntry {
  ExperimentConfig (*make)(PresetScale);
  const char* description;
};

const std::map<std::string, PresetEntry>& registry() {
  static const std::map<std::string, PresetEntry> presets = {
      {"logistic_bifurcation",
       {logistic_bifurcation,
        "logistic-map bifurcation reconstruction from 5-member chaotic library "
        "(desk: 100 test mu, 3 replicates; paper: 500, 10)"}},
      {"logistic_ntest_sweep",
       {logistic_ntest_sweep,
        "logistic-map climate error vs test-signal length "
        "(desk: n_test 2/5/10/20, 3 replicates; paper: 1..20, 10)"}},
      {"dual_map_bifurcation",
       {dual_map_bifurcation,
        "simultaneous logistic + Gauss library, per-map bifurcation diagrams "
        "(desk: 50 signals per map, 3 replicates; paper: 500, 10)"}},
      {"lorenz_grid",
       {lorenz_grid,
        "x3-only Lorenz parameter grid, n_test=20 cold-start comparison "
        "(desk: 9x9 grid, 3 replicates; paper: 25x25, 10)"}},
      {"lorenz_valid_time_vs_ntest",
       {lorenz_valid_time_vs_ntest,
        "x3-only Lorenz valid time vs test-signal length; long-running "
        "(desk: 9x9 grid, n_test 1/5/20/100; paper: 25x25, 1..200)"}},
      {"lorenz_cold_start_only",
       {lorenz_cold_start_only,
        "single-member Lorenz library, cold-start baselines "
        "(desk: 81 test signals, 3 replicates; paper: 625, 10)"}},
      {"noise_sweep",
       {noise_sweep,
        "fully observed Lorenz grid under observational test noise, with and "
        "without noise-matched training (desk: 9x9, 3 replicates)"}},
      {"logistic_smoke",
       {logistic_smoke,
        "seconds-scale CI preset with reduced reservoirs; determinism and "
        "smoke checks only, not a figure reproduction"}},
  };
  return presets;
}

}  // namespace

std::vector<std::string> preset_names() {
  std::vector<std::string> names;
  for (const auto& [name, entry] : registry()) names.push_back(name);
  return names;
}

std::string preset_description(const std::string& name) {
  const auto it = registry().find(name);
  if (it == registry().end()) throw ConfigError("unknown preset \"" + name + "\"");
  return it->second.description;
}

ExperimentConfig preset_config(const std::string& name, PresetScale scale) {
  const auto it = registry().find(name);
  if (it == registry().end()) throw ConfigError("unknown preset \"" + name + "\"");
  ExperimentConfig config = it->second.make(scale);
  validate_config(config);
  return config;
}

}  // namespace metafors
