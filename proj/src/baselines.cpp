#include "metafors/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "metafors/errors.hpp"

namespace metafors {

namespace {

void check_labels(const LabeledLibrary& lib) {
  if (lib.library == nullptr) throw Error("labeled library has no library");
  if (lib.labels.rows() != lib.library->n_members())
    throw Error("label count does not match the number of library members");
}

// Rescale each label axis to [0, 1] over the library; degenerate axes
// (all members equal) collapse to 0. The same affine map is applied to the
// test parameters, so nearest-member choices are invariant under any common
// affine rescaling of the inputs.
Eigen::MatrixXd unit_rescale(const Eigen::MatrixXd& labels,
                             const Eigen::VectorXd& test_params,
                             Eigen::VectorXd& test_rescaled) {
  const Eigen::VectorXd lo = labels.colwise().minCoeff();
  const Eigen::VectorXd hi = labels.colwise().maxCoeff();
  Eigen::MatrixXd rescaled(labels.rows(), labels.cols());
  test_rescaled.resize(test_params.size());
  for (Eigen::Index c = 0; c < labels.cols(); ++c) {
    const double span = hi[c] - lo[c];
    if (span > 0.0) {
      rescaled.col(c) = (labels.col(c).array() - lo[c]) / span;
      test_rescaled[c] = (test_params[c] - lo[c]) / span;
    } else {
      rescaled.col(c).setZero();
      test_rescaled[c] = 0.0;
    }
  }
  return rescaled;
}

}  // namespace

Forecast zero_start_forecast(const Reservoir& forecaster, const TrainedModel& model,
                             const Series& cue, Eigen::Index n_steps) {
  return synchronize_then_forecast(forecaster, model, forecaster.zero_state(), cue,
                                   n_steps);
}

TrainedModel train_multitask(const Reservoir& forecaster,
                             std::span<const Series> long_signals,
                             Eigen::Index n_trans, double alpha) {
  if (long_signals.empty()) throw Error("multitask training needs >= 1 signals");

  const Eigen::Index n_nodes = forecaster.n_nodes();
  Eigen::MatrixXd gram(n_nodes, n_nodes);
  Eigen::MatrixXd cross(long_signals[0].n_sys(), n_nodes);
  Eigen::Index total_fit = 0;
  for (std::size_t i = 0; i < long_signals.size(); ++i) {
    const Series& s = long_signals[i];
    if (s.n_steps() <= n_trans + 1)
      throw Error("signal " + std::to_string(i) +
                  " leaves no fitting pairs after the transient");
    const StateTrajectory traj =
        drive_open_loop(forecaster, forecaster.zero_state(), s);
    const Eigen::Index n_fit = s.n_steps() - n_trans - 1;
    const auto states = traj.states.middleRows(n_trans, n_fit);
    const auto targets = s.data.middleRows(n_trans + 1, n_fit);
    if (i == 0) {
      gram.noalias() = states.transpose() * states;
      cross.noalias() = targets.transpose() * states;
    } else {
      gram.noalias() += states.transpose() * states;
      cross.noalias() += targets.transpose() * states;
    }
    total_fit += n_fit;
  }

  TrainedModel model;
  model.w_out =
      ridge_solve(std::move(gram), alpha * static_cast<double>(total_fit), cross);
  model.reservoir_spec_hash = forecaster.hash;
  model.alpha = alpha;
  model.n_fit = total_fit;
  return model;
}

Eigen::Index train_on_test_transient(ExperimentFamily family, Eigen::Index n_test) {
  if (family == ExperimentFamily::Map) {
    if (n_test == 2) return 0;
    if (n_test < 10) return n_test / 2;
    return 5;
  }
  if (n_test < 100) return n_test / 10;
  return 10;
}

TrainedModel train_on_test(const Reservoir& forecaster, const Series& cue,
                           double alpha, ExperimentFamily family) {
  if (cue.n_steps() < 2)
    throw Error("training on the test signal is not possible with a single "
                "data point");
  const Eigen::Index n_trans = train_on_test_transient(family, cue.n_steps());
  return train_output_layer(forecaster, cue, n_trans, alpha).model;
}

Eigen::Index nearest_library_index(const LabeledLibrary& lib,
                                   const Eigen::VectorXd& test_params) {
  check_labels(lib);
  if (lib.labels.rows() == 0) throw Error("empty library");
  if (test_params.size() != lib.labels.cols())
    throw Error("test parameter dimension does not match the library labels");

  Eigen::VectorXd test_rescaled;
  const Eigen::MatrixXd rescaled = unit_rescale(lib.labels, test_params, test_rescaled);
  Eigen::Index best = 0;
  double best_dist = std::numeric_limits<double>::infinity();
  for (Eigen::Index i = 0; i < rescaled.rows(); ++i) {
    const double d = (rescaled.row(i).transpose() - test_rescaled).squaredNorm();
    if (d < best_dist) {
      best_dist = d;
      best = i;
    }
  }
  return best;
}

Forecast nearest_library_forecast(const Reservoir& forecaster,
                                  const LabeledLibrary& lib,
                                  const Eigen::VectorXd& test_params,
                                  const Series& cue, Eigen::Index n_steps) {
  const Eigen::Index k = nearest_library_index(lib, test_params);
  return zero_start_forecast(forecaster,
                             lib.library->models[static_cast<std::size_t>(k)], cue,
                             n_steps);
}

TrainedModel interpolate_model_1d(const LabeledLibrary& lib, double test_param) {
  check_labels(lib);
  if (lib.labels.cols() != 1)
    throw Error("1d interpolation expects scalar labels");
  const Eigen::Index n = lib.labels.rows();
  if (n < 2) throw Error("1d interpolation needs at least two library members");

  const auto& models = lib.library->models;
  const Eigen::VectorXd params = lib.labels.col(0);
  const double lo = params.minCoeff();
  const double hi = params.maxCoeff();

  TrainedModel out;
  out.reservoir_spec_hash = lib.library->reservoir_spec_hash;

  if (test_param >= lo && test_param <= hi) {
    // Bracketing members: nearest label below and nearest above.
    Eigen::Index below = -1, above = -1;
    for (Eigen::Index i = 0; i < n; ++i) {
      if (params[i] <= test_param && (below < 0 || params[i] > params[below]))
        below = i;
      if (params[i] >= test_param && (above < 0 || params[i] < params[above]))
        above = i;
    }
    const double gap = params[above] - params[below];
    if (gap == 0.0) {
      out.w_out = models[static_cast<std::size_t>(below)].w_out;
      return out;
    }
    const double w_below = (params[above] - test_param) / gap;
    out.w_out = w_below * models[static_cast<std::size_t>(below)].w_out +
                (1.0 - w_below) * models[static_cast<std::size_t>(above)].w_out;
    return out;
  }

  // Outside the library range: linear extrapolation through the two members
  // with the smallest parameter distances.
  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) order[static_cast<std::size_t>(i)] = i;
  std::sort(order.begin(), order.end(), [&](Eigen::Index a, Eigen::Index b) {
    const double da = std::abs(params[a] - test_param);
    const double db = std::abs(params[b] - test_param);
    return da != db ? da < db : a < b;
  });
  const Eigen::Index near = order[0];
  const Eigen::Index second = order[1];
  const double gap = params[near] - params[second];
  if (gap == 0.0) {
    out.w_out = models[static_cast<std::size_t>(std::min(near, second))].w_out;
    return out;
  }
  const double t = (test_param - params[second]) / gap;
  out.w_out = models[static_cast<std::size_t>(second)].w_out +
              t * (models[static_cast<std::size_t>(near)].w_out -
                   models[static_cast<std::size_t>(second)].w_out);
  return out;
}

Forecast interpolated_forecaster_1d(const Reservoir& forecaster,
                                    const LabeledLibrary& lib, double test_param,
                                    const Series& cue, Eigen::Index n_steps) {
  return zero_start_forecast(forecaster, interpolate_model_1d(lib, test_param), cue,
                             n_steps);
}

namespace {

constexpr double kBarycentricSlack = -1e-12;

struct TriangleHit {
  Eigen::Index a = -1, b = -1, c = -1;
  Eigen::Vector3d weights = Eigen::Vector3d::Zero();
  double area = 0.0;
};

double triangle_area(const Eigen::Vector2d& p, const Eigen::Vector2d& q,
                     const Eigen::Vector2d& r) {
  return 0.5 * std::abs((q.x() - p.x()) * (r.y() - p.y()) -
                        (r.x() - p.x()) * (q.y() - p.y()));
}

bool barycentric_weights(const Eigen::Vector2d& a, const Eigen::Vector2d& b,
                         const Eigen::Vector2d& c, const Eigen::Vector2d& p,
                         Eigen::Vector3d& w) {
  Eigen::Matrix2d m;
  m.col(0) = a - c;
  m.col(1) = b - c;
  const double det = m.determinant();
  if (std::abs(det) < 1e-14) return false;  // degenerate triangle
  const Eigen::Vector2d uv = m.inverse() * (p - c);
  w << uv[0], uv[1], 1.0 - uv[0] - uv[1];
  return true;
}

}  // namespace

TrainedModel interpolate_model_2d(const LabeledLibrary& lib,
                                  const Eigen::Vector2d& test_params) {
  check_labels(lib);
  if (lib.labels.cols() != 2)
    throw Error("2d interpolation expects two-component labels");
  const Eigen::Index n = lib.labels.rows();
  if (n == 0) throw Error("empty library");

  Eigen::VectorXd test_rescaled;
  const Eigen::MatrixXd pts = unit_rescale(lib.labels, test_params, test_rescaled);
  const Eigen::Vector2d p(test_rescaled[0], test_rescaled[1]);

  // Library sizes here are small enough to enumerate triangles; among all
  // triangles containing the query, the smallest-area one wins for
  // determinism.
  TriangleHit best;
  bool found = false;
  for (Eigen::Index i = 0; i + 2 < n; ++i)
    for (Eigen::Index j = i + 1; j + 1 < n; ++j)
      for (Eigen::Index k = j + 1; k < n; ++k) {
        const Eigen::Vector2d a = pts.row(i).transpose();
        const Eigen::Vector2d b = pts.row(j).transpose();
        const Eigen::Vector2d c = pts.row(k).transpose();
        Eigen::Vector3d w;
        if (!barycentric_weights(a, b, c, p, w)) continue;
        if (w.minCoeff() < kBarycentricSlack) continue;
        const double area = triangle_area(a, b, c);
        if (!found || area < best.area) {
          best = {i, j, k, w, area};
          found = true;
        }
      }

  TrainedModel out;
  out.reservoir_spec_hash = lib.library->reservoir_spec_hash;
  const auto& models = lib.library->models;
  if (!found) {
    // Outside the convex hull, or a collinear library: nearest member.
    const Eigen::Index k = nearest_library_index(lib, test_params);
    out.w_out = models[static_cast<std::size_t>(k)].w_out;
    return out;
  }
  out.w_out = best.weights[0] * models[static_cast<std::size_t>(best.a)].w_out +
              best.weights[1] * models[static_cast<std::size_t>(best.b)].w_out +
              best.weights[2] * models[static_cast<std::size_t>(best.c)].w_out;
  return out;
}

Forecast interpolated_forecaster_2d(const Reservoir& forecaster,
                                    const LabeledLibrary& lib,
                                    const Eigen::Vector2d& test_params,
                                    const Series& cue, Eigen::Index n_steps) {
  return zero_start_forecast(forecaster, interpolate_model_2d(lib, test_params),
                             cue, n_steps);
}

Forecast backward_extrapolation_start(const Reservoir& forecaster,
                                      const TrainedModel& model, const Series& cue,
                                      Eigen::Index n_steps) {
  if (cue.n_steps() < 1) throw Error("cue is empty");
  Series padded;
  padded.dt = cue.dt;
  padded.data.resize(kBackwardExtrapolationSteps + cue.n_steps(), cue.n_sys());
  padded.data.topRows(kBackwardExtrapolationSteps).rowwise() = cue.data.row(0);
  padded.data.bottomRows(cue.n_steps()) = cue.data;
  return zero_start_forecast(forecaster, model, padded, n_steps);
}

SegmentMatch search_training_segment(const MetaLibrary& lib, const Series& cue) {
  if (lib.n_members() != 1)
    throw Error("training-data search requires a single-member library");
  if (cue.n_sys() != lib.n_sys())
    throw Error("cue dimension does not match the library");
  const Series& train = lib.long_signals[0];
  const Eigen::Index len = cue.n_steps();
  const Eigen::Index last = train.n_steps() - len;
  if (len < 1 || last < lib.n_trans)
    throw Error("no post-transient window of the cue's length exists in the "
                "training series");

  SegmentMatch best{lib.n_trans, std::numeric_limits<double>::infinity()};
  double best_ssd = std::numeric_limits<double>::infinity();
  for (Eigen::Index j = lib.n_trans; j <= last; ++j) {
    const double ssd = (train.data.middleRows(j, len) - cue.data).squaredNorm();
    if (ssd < best_ssd) {
      best_ssd = ssd;
      best.offset = j;
    }
  }
  best.rms = std::sqrt(best_ssd / static_cast<double>(len * cue.n_sys()));
  return best;
}

Forecast training_data_search_start(const Reservoir& forecaster,
                                    const MetaLibrary& lib, const Series& cue,
                                    Eigen::Index n_steps) {
  const SegmentMatch match = search_training_segment(lib, cue);
  const StateTrajectory& traj = lib.trajectories[0];
  const Eigen::VectorXd r_init =
      match.offset == 0 ? Eigen::VectorXd::Zero(traj.states.cols())
                        : Eigen::VectorXd(traj.states.row(match.offset - 1).transpose());
  return synchronize_then_forecast(forecaster, lib.models[0], r_init, cue, n_steps);
}

}  // namespace metafors
