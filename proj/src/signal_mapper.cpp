#include "metafors/signal_mapper.hpp"

#include <string>

#include "metafors/errors.hpp"
#include "metafors/threads.hpp"

namespace metafors {

namespace {

// Final mapper states and targets are accumulated in fixed-size column
// blocks: states are computed in parallel (one column per work item), the
// Gram and cross products are added serially in block order. The result is
// independent of the thread count.
constexpr Eigen::Index kBlock = 2048;

}  // namespace

SignalMapper train_signal_mapper(const Reservoir& sm_reservoir,
                                 const MetaLibrary& library, double alpha_sm,
                                 MapperTargets targets, unsigned n_threads) {
  const Eigen::Index n_short = library.n_triplets();
  if (n_short == 0) throw Error("library contains no short signals");
  if (library.n_sys() != sm_reservoir.n_inputs())
    throw Error("signal mapper expects " + std::to_string(sm_reservoir.n_inputs()) +
                " inputs, library signals have " + std::to_string(library.n_sys()));
  if (alpha_sm < 0.0) throw Error("regularization alpha must be >= 0");
  if (targets == MapperTargets::ColdStartOnly && library.n_members() != 1)
    throw Error("ColdStartOnly targets require a single-member library");

  const Eigen::Index n_sm = sm_reservoir.n_nodes();
  const Eigen::Index n_f = library.n_forecaster_nodes();
  const Eigen::Index n_sys = library.n_sys();
  const Eigen::Index model_dim = n_f * n_sys;

  const bool want_cold = targets != MapperTargets::ModelOnly;
  const bool want_model = targets != MapperTargets::ColdStartOnly;

  Eigen::MatrixXd gram = Eigen::MatrixXd::Zero(n_sm, n_sm);
  Eigen::MatrixXd cross_cold =
      want_cold ? Eigen::MatrixXd::Zero(n_f, n_sm) : Eigen::MatrixXd();
  Eigen::MatrixXd cross_model =
      want_model ? Eigen::MatrixXd::Zero(model_dim, n_sm) : Eigen::MatrixXd();

  Eigen::MatrixXd states(n_sm, std::min(kBlock, n_short));
  Eigen::MatrixXd cold_block(want_cold ? n_f : 0, states.cols());
  Eigen::MatrixXd model_block(want_model ? model_dim : 0, states.cols());

  for (Eigen::Index begin = 0; begin < n_short; begin += kBlock) {
    const Eigen::Index nb = std::min(kBlock, n_short - begin);
    parallel_for(static_cast<std::size_t>(nb), n_threads, [&](std::size_t t) {
      const Eigen::Index k = begin + static_cast<Eigen::Index>(t);
      states.col(static_cast<Eigen::Index>(t)) = drive_to_state(
          sm_reservoir, sm_reservoir.zero_state(), library.short_signal(k));
      if (want_cold)
        cold_block.col(static_cast<Eigen::Index>(t)) = library.cold_start(k);
      if (want_model)
        model_block.col(static_cast<Eigen::Index>(t)) = library.flat_model(k);
    });
    const auto f = states.leftCols(nb);
    gram.noalias() += f * f.transpose();
    if (want_cold) cross_cold.noalias() += cold_block.leftCols(nb) * f.transpose();
    if (want_model) cross_model.noalias() += model_block.leftCols(nb) * f.transpose();
  }

  Eigen::MatrixXd cross;
  switch (targets) {
    case MapperTargets::Full:
      cross.resize(n_f + model_dim, n_sm);
      cross.topRows(n_f) = cross_cold;
      cross.bottomRows(model_dim) = cross_model;
      break;
    case MapperTargets::ModelOnly:
      cross = std::move(cross_model);
      break;
    case MapperTargets::ColdStartOnly:
      cross = std::move(cross_cold);
      break;
  }

  SignalMapper sm;
  sm.reservoir = sm_reservoir;
  sm.w_sm = ridge_solve(std::move(gram), alpha_sm * static_cast<double>(n_short),
                        cross);
  sm.n_test = library.n_test;
  sm.alpha = alpha_sm;
  sm.targets = targets;
  sm.n_forecaster_nodes = n_f;
  sm.n_sys = n_sys;
  sm.forecaster_spec_hash = library.reservoir_spec_hash;
  if (targets == MapperTargets::ColdStartOnly) sm.fixed_model = library.models[0];
  return sm;
}

TailoredForecaster infer_tailored_forecaster(const SignalMapper& sm,
                                             const Series& cue) {
  if (cue.n_steps() != sm.n_test)
    throw Error("cue has " + std::to_string(cue.n_steps()) +
                " steps but this signal mapper was trained for n_test=" +
                std::to_string(sm.n_test));
  if (cue.n_sys() != sm.n_sys)
    throw Error("cue has " + std::to_string(cue.n_sys()) +
                " components, signal mapper expects " + std::to_string(sm.n_sys));

  const Eigen::VectorXd final_state =
      drive_to_state(sm.reservoir, sm.reservoir.zero_state(), cue);
  const Eigen::VectorXd out = sm.w_sm * final_state;

  TailoredForecaster tf;
  switch (sm.targets) {
    case MapperTargets::Full:
      tf.cold_start = out.head(sm.n_forecaster_nodes);
      tf.model.w_out = unflatten_model(out.tail(sm.n_forecaster_nodes * sm.n_sys),
                                       sm.n_sys);
      break;
    case MapperTargets::ModelOnly:
      tf.cold_start = Eigen::VectorXd::Zero(sm.n_forecaster_nodes);
      tf.model.w_out = unflatten_model(out, sm.n_sys);
      break;
    case MapperTargets::ColdStartOnly:
      tf.cold_start = out;
      tf.model = *sm.fixed_model;
      break;
  }
  tf.model.reservoir_spec_hash = sm.forecaster_spec_hash;
  return tf;
}

Forecast metafors_forecast(const Reservoir& forecaster, const SignalMapper& sm,
                           const Series& cue, Eigen::Index n_steps) {
  if (forecaster.hash != sm.forecaster_spec_hash)
    throw Error("signal mapper was trained against a different forecaster "
                "reservoir realization");
  const TailoredForecaster tf = infer_tailored_forecaster(sm, cue);
  return synchronize_then_forecast(forecaster, tf.model, tf.cold_start, cue,
                                   n_steps);
}

}  // namespace metafors
