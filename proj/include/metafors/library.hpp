#pragma once

#include <Eigen/Dense>
#include <vector>

#include "metafors/reservoir.hpp"
#include "metafors/series.hpp"

namespace metafors {

// Row-major flattening of an output layer, output dimension outermost:
// flat[row * n_cols + col] = w(row, col). unflatten_model inverts it given
// the number of output rows.
Eigen::VectorXd flatten_model(const Eigen::MatrixXd& w_out);
Eigen::MatrixXd unflatten_model(const Eigen::VectorXd& flat, Eigen::Index n_out);

// The first learning level: one trained output layer per long signal, the
// stored reservoir trajectory of each training drive, and the set of short
// sub-signal triplets that trains the signal mapper.
//
// Triplet k references window [start, start + n_test) of long signal
// `source`; its cold-start vector is the stored reservoir state at the
// window's start step and its model target is the source model's flattened
// output layer. Triplets are stored as (source, start) references and the
// accessors below materialize the views, so libraries with hundreds of
// thousands of overlapping windows stay cheap to hold.
class MetaLibrary {
 public:
  struct TripletRef {
    Eigen::Index source = 0;
    Eigen::Index start = 0;
  };

  std::vector<Series> long_signals;
  std::vector<TrainedModel> models;
  std::vector<StateTrajectory> trajectories;
  std::vector<Eigen::VectorXd> flat_models;
  std::vector<TripletRef> triplets;
  Eigen::Index n_test = 0;
  Eigen::Index n_trans = 0;
  Eigen::Index stride = 1;
  double alpha = 0.0;
  std::string reservoir_spec_hash;

  Eigen::Index n_members() const {
    return static_cast<Eigen::Index>(models.size());
  }
  Eigen::Index n_triplets() const {
    return static_cast<Eigen::Index>(triplets.size());
  }
  Eigen::Index n_sys() const {
    return long_signals.empty() ? 0 : long_signals.front().n_sys();
  }
  Eigen::Index n_forecaster_nodes() const {
    return models.empty() ? 0 : models.front().w_out.cols();
  }

  Series short_signal(Eigen::Index k) const;
  // State stored immediately before the short signal's start step; the zero
  // state when the window starts at step 0.
  Eigen::VectorXd cold_start(Eigen::Index k) const;
  const Eigen::VectorXd& flat_model(Eigen::Index k) const;
  Eigen::Index source_index(Eigen::Index k) const;
};

// Trains one output layer per long signal from the zero state, stores each
// full reservoir trajectory, and enumerates short signals of length n_test
// starting at every step j in [n_trans, n_train - n_test] at the given
// stride (stride 1 keeps every possible window). All signals must share one
// dimension and sampling interval.
MetaLibrary build_meta_library(const Reservoir& forecaster,
                               std::vector<Series> long_signals,
                               Eigen::Index n_trans, double alpha_f,
                               Eigen::Index n_test, Eigen::Index stride = 1,
                               unsigned n_threads = 1);

}  // namespace metafors
