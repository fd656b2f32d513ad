#pragma once

#include <Eigen/Dense>
#include <optional>

#include "metafors/library.hpp"
#include "metafors/reservoir.hpp"

namespace metafors {

// The second learning level: a reservoir that consumes a short cue from the
// zero state, plus a ridge-regressed linear readout of its final state that
// yields a cold-start vector and an output layer for the forecaster.

enum class MapperTargets {
  Full,           // [cold-start vector; flattened output layer]
  ModelOnly,      // output layer only; forecasts are then zero started
  ColdStartOnly,  // cold-start vector only; requires a single-member library
                  // whose trained model is used unchanged
};

struct SignalMapper {
  Reservoir reservoir;
  Eigen::MatrixXd w_sm;  // target_dim x n_mapper_nodes
  Eigen::Index n_test = 0;
  double alpha = 0.0;
  MapperTargets targets = MapperTargets::Full;
  Eigen::Index n_forecaster_nodes = 0;
  Eigen::Index n_sys = 0;
  std::optional<TrainedModel> fixed_model;  // set for ColdStartOnly
  std::string forecaster_spec_hash;

  Eigen::Index target_dim() const { return w_sm.rows(); }
};

struct TailoredForecaster {
  Eigen::VectorXd cold_start;
  TrainedModel model;
};

// Drives the mapper reservoir from the zero state through every short
// signal in the library, records each final state, and solves
//   w_sm = P R^T (R R^T + alpha_sm * n_short * I)^(-1)
// where column j of R is a final mapper state and column j of P the
// matching target. The solve is one multi-output regression; its row blocks
// coincide with what separate per-target solves would produce.
SignalMapper train_signal_mapper(const Reservoir& sm_reservoir,
                                 const MetaLibrary& library, double alpha_sm,
                                 MapperTargets targets = MapperTargets::Full,
                                 unsigned n_threads = 1);

// Applies the learned mapping to a cue of exactly n_test steps. The mapper
// is trained for one fixed cue length; other lengths are an error.
TailoredForecaster infer_tailored_forecaster(const SignalMapper& sm,
                                             const Series& cue);

// infer_tailored_forecaster followed by synchronize_then_forecast: the
// forecaster starts from the inferred cold-start vector, re-reads the cue in
// open loop, and then runs autonomously for n_steps predictions.
Forecast metafors_forecast(const Reservoir& forecaster, const SignalMapper& sm,
                           const Series& cue, Eigen::Index n_steps);

}  // namespace metafors
