#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <cstdint>
#include <string>

#include "metafors/series.hpp"

namespace metafors {

// Echo-state-network style reservoirs: a fixed sparse random recurrent
// network driven in open loop, trained by ridge regression on a linear
// readout, and run in closed loop for autonomous forecasts.
//
// State update (open loop, one step per input row u):
//   r <- (1 - leakage) * r + leakage * tanh(A r + B u + c)
// Closed loop feeds the readout w_out * r back as the next input.

struct ReservoirSpec {
  Eigen::Index n_nodes = 500;
  double mean_in_degree = 3.0;   // expected nonzeros per row of A
  double spectral_radius = 0.9;  // of A after rescaling
  double input_strength = 0.1;   // B entries uniform in [-sigma, sigma]
  double bias_strength = 0.5;    // c entries uniform in [-psi, psi]
  double leakage = 0.1;          // in [0, 1]
  Eigen::Index n_inputs = 1;
  std::uint64_t seed = 0;
};

// Stable identity token over all spec fields; used to assert that models
// and forecasts produced by different code paths share one reservoir
// realization.
std::string reservoir_spec_hash(const ReservoirSpec& spec);

struct Reservoir {
  Eigen::SparseMatrix<double> adjacency;  // A, n_nodes x n_nodes
  Eigen::MatrixXd input_weights;          // B, n_nodes x n_inputs
  Eigen::VectorXd bias;                   // c
  double leakage = 0.0;
  ReservoirSpec spec;
  std::string hash;

  Eigen::Index n_nodes() const { return adjacency.rows(); }
  Eigen::Index n_inputs() const { return input_weights.cols(); }
  Eigen::VectorXd zero_state() const { return Eigen::VectorXd::Zero(n_nodes()); }
};

// Largest eigenvalue magnitude. Power iteration with a dense Schur fallback
// when the iteration does not settle (complex dominant pair, tied moduli).
double spectral_radius(const Eigen::SparseMatrix<double>& m);

// Samples A (each entry present independently with probability
// mean_in_degree / n_nodes, weights uniform in [-1, 1], then rescaled to the
// requested spectral radius), B and c. Deterministic given spec.seed; a
// degenerate draw with numerically zero spectral radius is resampled from a
// derived sub-seed a bounded number of times.
Reservoir build_reservoir(const ReservoirSpec& spec);

// Reservoir states visited while consuming an input series.
// Row k holds the state after consuming input rows 0..k, i.e. r((k+1)*dt)
// when driving starts from r(start_time).
struct StateTrajectory {
  Eigen::MatrixXd states;  // n_steps x n_nodes
  double start_time = 0.0;
};

struct TrainedModel {
  Eigen::MatrixXd w_out;  // n_out x n_nodes
  std::string reservoir_spec_hash;
  double alpha = 0.0;
  Eigen::Index n_fit = 0;

  Eigen::Index n_out() const { return w_out.rows(); }
};

// One state update in place. scratch must have n_nodes entries.
void reservoir_step(const Reservoir& res, Eigen::VectorXd& r,
                    const Eigen::Ref<const Eigen::VectorXd>& u,
                    Eigen::VectorXd& scratch);

StateTrajectory drive_open_loop(const Reservoir& res, const Eigen::VectorXd& r0,
                                const Series& inputs);

// Final state only; avoids materializing the trajectory.
Eigen::VectorXd drive_to_state(const Reservoir& res, Eigen::VectorXd r,
                               const Series& inputs);

struct TrainingResult {
  TrainedModel model;
  StateTrajectory trajectory;  // full drive from the zero state, reusable
                               // as a source of cold-start vectors
};

// Drives the reservoir from the zero state over the whole training series,
// discards the first n_trans state/target pairs, and solves
//   w_out = Y R^T (R R^T + alpha * n_fit * I)^(-1)
// so that w_out * r(n dt) approximates u(n dt) for n in
// [n_trans + 1, n_train - 1]; n_fit = n_train - n_trans - 1.
TrainingResult train_output_layer(const Reservoir& res, const Series& training,
                                  Eigen::Index n_trans, double alpha);

// Solves W = cross * (gram + ridge * I)^(-1) for symmetric positive
// semi-definite gram via Cholesky. Shared by all ridge fits.
Eigen::MatrixXd ridge_solve(Eigen::MatrixXd gram, double ridge,
                            const Eigen::MatrixXd& cross);

struct Forecast {
  Series series;
  bool diverged = false;  // a non-finite prediction occurred; remaining rows
                          // are NaN. Not an error: escape from the data range
                          // is a measured outcome.
};

// Autonomous run. Emits w_out * r_init as the first prediction, feeds every
// emitted prediction back as the next input, for n_steps predictions. When
// r_init is the state at the end of a synchronization signal of length
// n_test, the first emitted value is u_hat(n_test * dt).
Forecast forecast_closed_loop(const Reservoir& res, const TrainedModel& model,
                              const Eigen::VectorXd& r_init,
                              Eigen::Index n_steps, double dt = 1.0);

// Open-loop drive through sync from r_init, then closed-loop forecast from
// the final synchronized state.
Forecast synchronize_then_forecast(const Reservoir& res, const TrainedModel& model,
                                   const Eigen::VectorXd& r_init,
                                   const Series& sync, Eigen::Index n_steps);

}  // namespace metafors
