#pragma once

#include <Eigen/Dense>
#include <span>

#include "metafors/library.hpp"
#include "metafors/reservoir.hpp"

namespace metafors {

// Comparison methods. All of them run the same forecaster reservoir as
// METAFORS and synchronize to the cue from the zero state unless a method
// supplies its own initialization, so performance differences are
// attributable to the method rather than the network realization.

// A library whose members carry known dynamical parameters (one row of
// `labels` per member). Only the parameter-aware baselines read labels;
// METAFORS never does.
struct LabeledLibrary {
  const MetaLibrary* library = nullptr;
  Eigen::MatrixXd labels;  // n_members x n_params
};

Forecast zero_start_forecast(const Reservoir& forecaster, const TrainedModel& model,
                             const Series& cue, Eigen::Index n_steps);

// One ridge fit pooling the fitting pairs of all long signals; the
// reservoir restarts from the zero state at each signal and the first
// n_trans pairs of each are discarded. Normal equations are summed per
// signal, which matches training on the literal concatenation.
TrainedModel train_multitask(const Reservoir& forecaster,
                             std::span<const Series> long_signals,
                             Eigen::Index n_trans, double alpha);

enum class ExperimentFamily { Map, Lorenz };

// Transient schedule used when fitting directly on a short test signal.
Eigen::Index train_on_test_transient(ExperimentFamily family, Eigen::Index n_test);

// Ridge fit on the cue alone, using the family's transient schedule.
// A single-point cue cannot be fit and is an error.
TrainedModel train_on_test(const Reservoir& forecaster, const Series& cue,
                           double alpha, ExperimentFamily family);

// Rescales every label axis over the library to the unit interval, then
// picks the Euclidean-nearest member (lowest index on ties).
Eigen::Index nearest_library_index(const LabeledLibrary& lib,
                                   const Eigen::VectorXd& test_params);
Forecast nearest_library_forecast(const Reservoir& forecaster,
                                  const LabeledLibrary& lib,
                                  const Eigen::VectorXd& test_params,
                                  const Series& cue, Eigen::Index n_steps);

// Scalar labels: element-wise linear interpolation between the two members
// bracketing the test parameter, or linear extrapolation from the two
// nearest members when the parameter lies outside the library range.
TrainedModel interpolate_model_1d(const LabeledLibrary& lib, double test_param);
Forecast interpolated_forecaster_1d(const Reservoir& forecaster,
                                    const LabeledLibrary& lib, double test_param,
                                    const Series& cue, Eigen::Index n_steps);

// Two-dimensional labels: axes rescaled to unit intervals; inside the
// library's convex hull the enclosing triangle's models are combined with
// barycentric weights, outside the hull the nearest member's model is used.
// A collinear library degrades to nearest-member everywhere.
TrainedModel interpolate_model_2d(const LabeledLibrary& lib,
                                  const Eigen::Vector2d& test_params);
Forecast interpolated_forecaster_2d(const Reservoir& forecaster,
                                    const LabeledLibrary& lib,
                                    const Eigen::Vector2d& test_params,
                                    const Series& cue, Eigen::Index n_steps);

// Prepends 200 copies of the cue's first row, then zero starts through the
// padded signal.
Forecast backward_extrapolation_start(const Reservoir& forecaster,
                                      const TrainedModel& model, const Series& cue,
                                      Eigen::Index n_steps);
inline constexpr Eigen::Index kBackwardExtrapolationSteps = 200;

struct SegmentMatch {
  Eigen::Index offset = 0;  // start step of the best-matching window
  double rms = 0.0;
};

// Slides a cue-length window over the post-transient region of the single
// stored training series and returns the RMS-closest segment (earliest
// offset on ties).
SegmentMatch search_training_segment(const MetaLibrary& lib, const Series& cue);

// Synchronizes to the cue starting from the stored reservoir state at the
// matched segment's start step, then forecasts.
Forecast training_data_search_start(const Reservoir& forecaster,
                                    const MetaLibrary& lib, const Series& cue,
                                    Eigen::Index n_steps);

}  // namespace metafors
