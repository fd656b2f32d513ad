#pragma once

#include <Eigen/Dense>
#include <functional>
#include <span>
#include <vector>

#include "metafors/series.hpp"

namespace metafors {

// Forecast quality measures. `predicted` and `truth` are aligned so that
// row k of both is the state k steps after the forecast start.

struct ValidTime {
  double t_valid = 0.0;
  bool censored = false;  // the error never exceeded the threshold within
                          // the horizon; t_valid is the horizon length
};

// Earliest forecast-relative time at which the component-wise normalized
// error ||(predicted - truth) / std(truth)|| exceeds 1. The standard
// deviation is taken component-wise over the truth restricted to the
// forecast horizon, which keeps the measure self-contained per forecast.
// A non-finite prediction counts as an exceedance at that step.
ValidTime valid_time(const Series& predicted, const Series& truth);

// Advances a full system state by one sampling step under the true dynamics.
using TruthStepper = std::function<Eigen::VectorXd(const Eigen::VectorXd&)>;

struct OneStepError {
  double epsilon = 0.0;
  bool diverged = false;  // non-finite forecast; epsilon is +infinity
};

// Mean over the retained forecast of ||u_hat(t + dt) - G[u_hat(t)]||, i.e.
// how far the forecaster's own next output strays from the true one-step
// evolution of its current output. The first n_discard predictions are
// dropped as a transient. Defined only for fully observed states; callers
// with partial observations must not use it.
OneStepError autonomous_one_step_error(const Series& predicted,
                                       const TruthStepper& truth_step,
                                       Eigen::Index n_discard);

// Fraction of samples <= g for each grid value g; nondecreasing in g.
std::vector<double> empirical_cdf(const Series& series, Eigen::Index component,
                                  std::span<const double> grid);

// Two-sample Kolmogorov-Smirnov distance, evaluated over the merged support
// of both samples.
double ks_distance(std::vector<double> a, std::vector<double> b);

struct BifurcationSlice {
  std::vector<double> values;  // retained forecast values for scatter plots
  bool escaped = false;        // the forecast left [0, 1] and never returned
                               // within the retained window
};

// Drops the first n_discard predictions, returns the rest, and flags
// forecasts that permanently escape the unit interval.
BifurcationSlice bifurcation_points(const Series& forecast, Eigen::Index n_discard);

}  // namespace metafors
