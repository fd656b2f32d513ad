#include "metafors/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "metafors/errors.hpp"

namespace metafors {

ValidTime valid_time(const Series& predicted, const Series& truth) {
  const Eigen::Index n = predicted.n_steps();
  if (n < 1) throw Error("valid_time: empty forecast");
  if (truth.n_steps() < n)
    throw Error("valid_time: truth covers " + std::to_string(truth.n_steps()) +
                " steps, forecast needs " + std::to_string(n));
  if (truth.n_sys() != predicted.n_sys())
    throw Error("valid_time: component counts differ");

  const auto window = truth.data.topRows(n);
  const Eigen::RowVectorXd mean = window.colwise().mean();
  const Eigen::RowVectorXd std_dev =
      ((window.rowwise() - mean).array().square().colwise().sum() /
       static_cast<double>(n))
          .sqrt();

  for (Eigen::Index k = 0; k < n; ++k) {
    double err_sq = 0.0;
    bool finite = true;
    for (Eigen::Index c = 0; c < predicted.n_sys(); ++c) {
      const double p = predicted.data(k, c);
      if (!std::isfinite(p)) {
        finite = false;
        break;
      }
      const double d = p - truth.data(k, c);
      const double e = d == 0.0 ? 0.0 : d / std_dev[c];  // 0/0 counts as exact
      err_sq += e * e;
    }
    if (!finite || err_sq > 1.0)
      return {static_cast<double>(k) * predicted.dt, false};
  }
  return {static_cast<double>(n) * predicted.dt, true};
}

OneStepError autonomous_one_step_error(const Series& predicted,
                                       const TruthStepper& truth_step,
                                       Eigen::Index n_discard) {
  if (n_discard < 0) throw Error("n_discard must be >= 0");
  if (predicted.n_steps() <= n_discard + 1)
    throw Error("forecast of " + std::to_string(predicted.n_steps()) +
                " steps leaves no one-step pairs after discarding " +
                std::to_string(n_discard));

  const Eigen::Index n = predicted.n_steps();
  double sum = 0.0;
  for (Eigen::Index k = n_discard; k + 1 < n; ++k) {
    const Eigen::VectorXd u_hat = predicted.data.row(k).transpose();
    const Eigen::VectorXd next = predicted.data.row(k + 1).transpose();
    if (!u_hat.allFinite() || !next.allFinite())
      return {std::numeric_limits<double>::infinity(), true};
    const double term = (next - truth_step(u_hat)).norm();
    if (!std::isfinite(term))
      return {std::numeric_limits<double>::infinity(), true};
    sum += term;
  }
  return {sum / static_cast<double>(n - n_discard - 1), false};
}

std::vector<double> empirical_cdf(const Series& series, Eigen::Index component,
                                  std::span<const double> grid) {
  if (series.n_steps() < 1) throw Error("empirical_cdf: empty series");
  if (component < 0 || component >= series.n_sys())
    throw Error("empirical_cdf: component out of range");

  std::vector<double> samples(static_cast<std::size_t>(series.n_steps()));
  for (Eigen::Index i = 0; i < series.n_steps(); ++i)
    samples[static_cast<std::size_t>(i)] = series.data(i, component);
  std::sort(samples.begin(), samples.end());

  std::vector<double> cdf;
  cdf.reserve(grid.size());
  for (double g : grid) {
    const auto it = std::upper_bound(samples.begin(), samples.end(), g);
    cdf.push_back(static_cast<double>(it - samples.begin()) /
                  static_cast<double>(samples.size()));
  }
  return cdf;
}

double ks_distance(std::vector<double> a, std::vector<double> b) {
  if (a.empty() || b.empty()) throw Error("ks_distance: empty sample set");
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());

  const double na = static_cast<double>(a.size());
  const double nb = static_cast<double>(b.size());
  std::size_t ia = 0, ib = 0;
  double max_diff = 0.0;
  while (ia < a.size() && ib < b.size()) {
    const double x = std::min(a[ia], b[ib]);
    while (ia < a.size() && a[ia] <= x) ++ia;
    while (ib < b.size() && b[ib] <= x) ++ib;
    max_diff = std::max(max_diff,
                        std::abs(static_cast<double>(ia) / na -
                                 static_cast<double>(ib) / nb));
  }
  return max_diff;
}

BifurcationSlice bifurcation_points(const Series& forecast, Eigen::Index n_discard) {
  if (n_discard < 0) throw Error("n_discard must be >= 0");
  if (forecast.n_steps() < n_discard + 1)
    throw Error("forecast of " + std::to_string(forecast.n_steps()) +
                " steps is shorter than the discard window");
  if (forecast.n_sys() != 1)
    throw Error("bifurcation_points expects a scalar forecast");

  BifurcationSlice out;
  const Eigen::Index n = forecast.n_steps();
  out.values.reserve(static_cast<std::size_t>(n - n_discard));
  for (Eigen::Index k = n_discard; k < n; ++k)
    out.values.push_back(forecast.data(k, 0));

  // "Leaves [0, 1] and does not return" within the retained window reduces
  // to: the window ends outside the interval (non-finite values included).
  const double last = out.values.back();
  out.escaped = !(std::isfinite(last) && last >= 0.0 && last <= 1.0);
  return out;
}

}  // namespace metafors
