#include "metafors/library.hpp"

#include <string>

#include "metafors/errors.hpp"
#include "metafors/threads.hpp"

namespace metafors {

Eigen::VectorXd flatten_model(const Eigen::MatrixXd& w_out) {
  Eigen::VectorXd flat(w_out.size());
  Eigen::Index k = 0;
  for (Eigen::Index r = 0; r < w_out.rows(); ++r)
    for (Eigen::Index c = 0; c < w_out.cols(); ++c) flat[k++] = w_out(r, c);
  return flat;
}

Eigen::MatrixXd unflatten_model(const Eigen::VectorXd& flat, Eigen::Index n_out) {
  if (n_out < 1) throw Error("unflatten_model: n_out must be >= 1");
  if (flat.size() % n_out != 0)
    throw Error("unflatten_model: vector of size " + std::to_string(flat.size()) +
                " is not divisible by n_out=" + std::to_string(n_out));
  const Eigen::Index n_cols = flat.size() / n_out;
  Eigen::MatrixXd w(n_out, n_cols);
  Eigen::Index k = 0;
  for (Eigen::Index r = 0; r < n_out; ++r)
    for (Eigen::Index c = 0; c < n_cols; ++c) w(r, c) = flat[k++];
  return w;
}

Series MetaLibrary::short_signal(Eigen::Index k) const {
  const TripletRef& t = triplets.at(static_cast<std::size_t>(k));
  return long_signals[static_cast<std::size_t>(t.source)].slice(t.start, n_test);
}

Eigen::VectorXd MetaLibrary::cold_start(Eigen::Index k) const {
  const TripletRef& t = triplets.at(static_cast<std::size_t>(k));
  const StateTrajectory& traj = trajectories[static_cast<std::size_t>(t.source)];
  if (t.start == 0)
    return Eigen::VectorXd::Zero(traj.states.cols());
  return traj.states.row(t.start - 1).transpose();
}

const Eigen::VectorXd& MetaLibrary::flat_model(Eigen::Index k) const {
  const TripletRef& t = triplets.at(static_cast<std::size_t>(k));
  return flat_models[static_cast<std::size_t>(t.source)];
}

Eigen::Index MetaLibrary::source_index(Eigen::Index k) const {
  return triplets.at(static_cast<std::size_t>(k)).source;
}

MetaLibrary build_meta_library(const Reservoir& forecaster,
                               std::vector<Series> long_signals,
                               Eigen::Index n_trans, double alpha_f,
                               Eigen::Index n_test, Eigen::Index stride,
                               unsigned n_threads) {
  if (long_signals.empty()) throw Error("library needs at least one long signal");
  if (n_test < 1) throw Error("n_test must be >= 1");
  if (stride < 1) throw Error("stride must be >= 1");

  const Eigen::Index n_sys = long_signals.front().n_sys();
  const double dt = long_signals.front().dt;
  for (std::size_t i = 0; i < long_signals.size(); ++i) {
    const Series& s = long_signals[i];
    if (s.n_sys() != n_sys || s.dt != dt)
      throw Error("long signal " + std::to_string(i) +
                  " does not match the library dimension or sampling interval");
    if (s.n_steps() < n_trans + n_test)
      throw Error("long signal " + std::to_string(i) + " with " +
                  std::to_string(s.n_steps()) +
                  " steps admits no short signal after a transient of " +
                  std::to_string(n_trans));
    if (s.n_steps() <= n_trans + 1)
      throw Error("long signal " + std::to_string(i) + " is too short to train");
  }

  MetaLibrary lib;
  lib.long_signals = std::move(long_signals);
  lib.n_test = n_test;
  lib.n_trans = n_trans;
  lib.stride = stride;
  lib.alpha = alpha_f;
  lib.reservoir_spec_hash = forecaster.hash;

  const std::size_t n_members = lib.long_signals.size();
  lib.models.resize(n_members);
  lib.trajectories.resize(n_members);
  lib.flat_models.resize(n_members);
  parallel_for(n_members, n_threads, [&](std::size_t i) {
    TrainingResult trained =
        train_output_layer(forecaster, lib.long_signals[i], n_trans, alpha_f);
    lib.models[i] = std::move(trained.model);
    lib.trajectories[i] = std::move(trained.trajectory);
    lib.flat_models[i] = flatten_model(lib.models[i].w_out);
  });

  for (std::size_t i = 0; i < n_members; ++i) {
    const Eigen::Index last = lib.long_signals[i].n_steps() - n_test;
    for (Eigen::Index j = n_trans; j <= last; j += stride)
      lib.triplets.push_back({static_cast<Eigen::Index>(i), j});
  }
  return lib;
}

}  // namespace metafors
