#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "metafors/reservoir.hpp"

namespace metafors {

// Config-driven experiment harness. A config (JSON file or named preset)
// describes one experiment family at either desk or paper scale; running it
// produces a deterministic results CSV, a manifest sufficient to reproduce
// the run bit for bit, and a non-deterministic timing sidecar.

enum class ExperimentKind {
  LogisticBifurcation,
  DualMapBifurcation,
  LorenzGrid,
  LorenzColdStartOnly,
  LorenzValidTimeVsNtest,
  NoiseSweep,
};

std::string experiment_kind_name(ExperimentKind kind);

struct ReservoirSettings {
  Eigen::Index n_nodes = 500;
  double mean_in_degree = 3.0;
  double spectral_radius = 0.9;
  double input_strength = 0.1;
  double bias_strength = 0.5;
  double leakage = 0.1;
  double alpha = 1e-6;
};

struct NoiseSetting {
  double sigma_test = 0.0;    // test-signal noise in multiples of the
                              // component-wise library standard deviation
  bool train_matched = false; // also add noise of the same level to the
                              // library signals before training
};

// One dynamical system drawn from a test grid or a library: which family it
// belongs to and its parameters (mu; a; or omega_t and v1).
struct SystemPoint {
  std::string system;  // "logistic", "gauss" or "lorenz"
  double param1 = 0.0;
  double param2 = 0.0;
};

struct MapLibrarySpec {
  Eigen::Index n_signals = 0;
  double lo = 0.0, hi = 0.0;  // chaotic-only uniform sampling range
};

struct LorenzLibrarySpec {
  Eigen::Index n_signals = 0;
  double omega_min = 0.75, omega_max = 1.25;
  double v1_min = 7.5, v1_max = 12.5;
  // Fixed parameters instead of random draws (single-system scenarios).
  std::optional<double> fixed_omega, fixed_v1;
};

struct MapTestGrid {
  Eigen::Index n_points = 0;  // evenly spaced over [lo, hi] when values empty
  double lo = 0.0, hi = 0.0;
  std::vector<double> values;  // explicit parameter list overrides the grid
};

struct LorenzTestGrid {
  Eigen::Index n_omega = 0, n_v1 = 0;
  double omega_min = 0.7, omega_max = 1.3;
  double v1_min = 7.0, v1_max = 13.0;
  // Fixed-parameter scenarios evaluate n_points different initial conditions.
  std::optional<double> fixed_omega, fixed_v1;
  Eigen::Index n_points = 0;
};

struct ExperimentConfig {
  ExperimentKind kind = ExperimentKind::LogisticBifurcation;
  std::uint64_t seed = 1;
  int replicates = 1;
  std::vector<std::string> methods;

  Eigen::Index n_train = 1000;
  Eigen::Index n_trans = 50;
  std::vector<Eigen::Index> n_test_values{5};
  Eigen::Index n_for = 1000;
  Eigen::Index forecast_discard = 500;   // predictions dropped before climate
                                         // metrics
  Eigen::Index attractor_discard = 1000; // transient dropped from every
                                         // generated trajectory
  Eigen::Index stride = 1;

  ReservoirSettings forecaster;
  ReservoirSettings signal_mapper;

  std::vector<Eigen::Index> observation;  // empty = full state
  std::vector<NoiseSetting> noise{{0.0, false}};

  MapLibrarySpec logistic_library, gauss_library;  // map families
  LorenzLibrarySpec lorenz_library;
  MapTestGrid logistic_grid, gauss_grid;
  LorenzTestGrid lorenz_grid;
};

// Parses and validates a config. Unknown keys anywhere in the document are
// hard errors. The file may also be a results manifest, in which case the
// embedded config (and its seed) is used, reproducing the original run.
ExperimentConfig parse_config_file(const std::filesystem::path& path);
ExperimentConfig parse_config_string(const std::string& text);

// Throws ConfigError on any inconsistency. Runs before any compute; also
// applied to parsed files and presets.
void validate_config(const ExperimentConfig& config);

// Named, versioned configurations of the experiments at two scales. Desk
// presets shrink test grids and replicate counts only; paper presets match
// the full experiment geometry and run for a long time.
enum class PresetScale { Desk, Paper };
std::vector<std::string> preset_names();
std::string preset_description(const std::string& name);
ExperimentConfig preset_config(const std::string& name, PresetScale scale);

struct ResultRow {
  std::string experiment;
  std::string method;
  int replicate = 0;
  std::uint64_t replicate_seed = 0;
  SystemPoint point;
  Eigen::Index n_test = 0;
  double sigma_test = 0.0;
  double sigma_train = 0.0;
  double t_valid = 0.0;
  bool censored = false;
  std::optional<double> epsilon;  // absent under partial observation
  bool diverged = false;
  bool escaped = false;
  double wall_time_s = 0.0;  // reported in the timing sidecar only
};

struct RunOptions {
  std::filesystem::path out_dir = ".";
  unsigned threads = 1;
  std::optional<std::uint64_t> seed_override;
};

struct RunArtifacts {
  std::filesystem::path results_csv;
  std::filesystem::path manifest;
  std::filesystem::path timings_csv;
  std::vector<ResultRow> rows;
};

RunArtifacts run_experiment(const ExperimentConfig& config, const RunOptions& opts);

std::vector<ResultRow> read_results_csv(const std::filesystem::path& path);

enum class SummaryStat { Mean, Median, Stderr };

struct SummaryRow {
  std::string experiment;
  std::string method;
  Eigen::Index n_test = 0;
  double sigma_test = 0.0;
  double sigma_train = 0.0;
  std::size_t n = 0;
  double t_valid = 0.0;
  std::optional<double> epsilon;
  std::size_t n_censored = 0, n_diverged = 0, n_escaped = 0, n_epsilon = 0;
};

// Aggregates one results CSV per (method, n_test, noise) group, pooling test
// points and replicates. Censored valid times enter at the horizon value and
// are counted separately. A file mixing experiments is an error.
std::vector<SummaryRow> summarize_results(const std::filesystem::path& results_csv,
                                          SummaryStat stat);
void write_summary_csv(const std::vector<SummaryRow>& rows, SummaryStat stat,
                       const std::filesystem::path& path);

}  // namespace metafors
