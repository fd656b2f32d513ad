#include "metafors/systems.hpp"

#include <cmath>
#include <string>

#include "metafors/errors.hpp"
#include "metafors/rng.hpp"

namespace metafors {

namespace {

void check_window(Eigen::Index n_total, Eigen::Index n_discard) {
  if (n_total < 1) throw Error("trajectory length must be at least 1");
  if (n_discard < 0 || n_discard >= n_total)
    throw Error("n_discard=" + std::to_string(n_discard) +
                " must be smaller than n_total=" + std::to_string(n_total));
}

}  // namespace

double map_step(const MapParams& params, double x) {
  return params.kind == MapKind::Logistic ? logistic_step(params.mu, x)
                                          : gauss_step(params.a, params.b, x);
}

Eigen::Vector3d lorenz_derivative(const LorenzParams& p, const Eigen::Vector3d& x) {
  return {p.omega_t * (p.v1 * (x[1] - x[0])),
          p.omega_t * (x[0] * (p.v2 - x[2]) - x[1]),
          p.omega_t * (x[0] * x[1] - p.v3 * x[2])};
}

Eigen::Vector3d lorenz_rk4_step(const LorenzParams& p, const Eigen::Vector3d& x) {
  const double h = p.dt;
  const Eigen::Vector3d k1 = lorenz_derivative(p, x);
  const Eigen::Vector3d k2 = lorenz_derivative(p, x + 0.5 * h * k1);
  const Eigen::Vector3d k3 = lorenz_derivative(p, x + 0.5 * h * k2);
  const Eigen::Vector3d k4 = lorenz_derivative(p, x + h * k3);
  return x + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

namespace {

// Shared scalar-map driver: iterates step(), keeps the last rows.
template <typename StepFn>
Series iterate_map(StepFn step, double x0, Eigen::Index n_total,
                   Eigen::Index n_discard, const char* name) {
  check_window(n_total, n_discard);
  const Eigen::Index n_keep = n_total - n_discard;
  Eigen::MatrixXd data(n_keep, 1);
  double x = x0;
  for (Eigen::Index i = 0; i < n_total; ++i) {
    if (!std::isfinite(x))
      throw DivergenceError(std::string(name) + " iterate became non-finite at step " +
                            std::to_string(i));
    if (i >= n_discard) data(i - n_discard, 0) = x;
    x = step(x);
  }
  return Series(std::move(data), 1.0);
}

}  // namespace

Series logistic_trajectory(double mu, double x0, Eigen::Index n_total,
                           Eigen::Index n_discard) {
  if (mu <= 0.0) throw Error("logistic rate mu must be positive");
  if (x0 <= 0.0 || x0 >= 1.0)
    throw Error("logistic initial condition must satisfy 0 < x0 < 1");
  return iterate_map([mu](double x) { return logistic_step(mu, x); }, x0,
                     n_total, n_discard, "logistic");
}

Series gauss_trajectory(double a, double b, double x0, Eigen::Index n_total,
                        Eigen::Index n_discard) {
  return iterate_map([a, b](double x) { return gauss_step(a, b, x); }, x0,
                     n_total, n_discard, "gauss");
}

Series lorenz_trajectory(const LorenzParams& params, const Eigen::Vector3d& x0,
                         Eigen::Index n_total, Eigen::Index n_discard) {
  check_window(n_total, n_discard);
  if (params.dt <= 0.0) throw Error("lorenz dt must be positive");
  const Eigen::Index n_keep = n_total - n_discard;
  Eigen::MatrixXd data(n_keep, 3);
  Eigen::Vector3d x = x0;
  for (Eigen::Index i = 0; i < n_total; ++i) {
    if (!x.allFinite())
      throw DivergenceError("lorenz state became non-finite at step " +
                            std::to_string(i));
    if (i >= n_discard) data.row(i - n_discard) = x.transpose();
    x = lorenz_rk4_step(params, x);
  }
  return Series(std::move(data), params.dt);
}

bool is_periodic(const Series& series, Eigen::Index max_period, double tol) {
  if (series.n_sys() != 1)
    throw Error("is_periodic expects a scalar series");
  if (max_period < 1) throw Error("max_period must be at least 1");
  const Eigen::Index window = std::max<Eigen::Index>(4 * max_period, 200);
  const Eigen::Index n = series.n_steps();
  if (n < window)
    throw Error("series of " + std::to_string(n) +
                " steps is shorter than the periodicity detection window of " +
                std::to_string(window));

  const auto& x = series.data;
  const Eigen::Index begin = n - window;
  for (Eigen::Index p = 1; p <= max_period; ++p) {
    bool repeats = true;
    for (Eigen::Index i = begin; i + p < n; ++i) {
      if (std::abs(x(i + p, 0) - x(i, 0)) >= tol) {
        repeats = false;
        break;
      }
    }
    if (repeats) return true;
  }
  return false;
}

std::vector<MapParams> sample_chaotic_params(MapKind kind, double lo, double hi,
                                             Eigen::Index n, std::uint64_t seed) {
  if (hi < lo) throw Error("empty parameter range");
  constexpr int kMaxAttempts = 1000;
  constexpr Eigen::Index kTotal = 2000;
  constexpr Eigen::Index kDiscard = 1000;
  constexpr double kGaussB = kGaussTranslation;

  std::vector<MapParams> out;
  out.reserve(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) {
    Rng rng(derive_seed(seed, "chaotic_param", static_cast<std::uint64_t>(i)));
    bool accepted = false;
    for (int attempt = 0; attempt < kMaxAttempts && !accepted; ++attempt) {
      const double value = rng.uniform(lo, hi);
      const double x0 = rng.uniform(0.0, 1.0);
      MapParams params;
      if (kind == MapKind::Logistic) {
        params = {MapKind::Logistic, value, 0.0, 0.0};
      } else {
        params = {MapKind::Gauss, 0.0, value, kGaussB};
      }
      try {
        const Series traj =
            kind == MapKind::Logistic
                ? logistic_trajectory(value, x0, kTotal, kDiscard)
                : gauss_trajectory(value, kGaussB, x0, kTotal, kDiscard);
        if (!is_periodic(traj, kPeriodicityMaxPeriod, kPeriodicityTol)) {
          out.push_back(params);
          accepted = true;
        }
      } catch (const DivergenceError&) {
        // escaped the map's domain: reject and redraw
      }
    }
    if (!accepted)
      throw Error("no chaotic parameter found in [" + std::to_string(lo) + ", " +
                  std::to_string(hi) + "] after " + std::to_string(kMaxAttempts) +
                  " draws; the range may be entirely periodic");
  }
  return out;
}

Series add_observational_noise(const Series& series, double sigma_rel,
                               const Eigen::VectorXd& library_std,
                               std::uint64_t seed) {
  if (sigma_rel < 0.0) throw Error("sigma_rel must be non-negative");
  if (library_std.size() != series.n_sys())
    throw Error("library_std has " + std::to_string(library_std.size()) +
                " components, series has " + std::to_string(series.n_sys()));
  if (sigma_rel == 0.0) return series;

  Series out = series;
  Rng rng(derive_seed(seed, "observational_noise"));
  for (Eigen::Index r = 0; r < out.n_steps(); ++r)
    for (Eigen::Index c = 0; c < out.n_sys(); ++c)
      out.data(r, c) += sigma_rel * library_std[c] * rng.normal();
  return out;
}

Series partial_observation(const Series& series,
                           std::span<const Eigen::Index> components) {
  if (components.empty()) throw Error("component selection is empty");
  Eigen::MatrixXd data(series.n_steps(), static_cast<Eigen::Index>(components.size()));
  for (std::size_t k = 0; k < components.size(); ++k) {
    const Eigen::Index c = components[k];
    if (c < 0 || c >= series.n_sys())
      throw Error("component index " + std::to_string(c) + " out of range for " +
                  std::to_string(series.n_sys()) + " components");
    data.col(static_cast<Eigen::Index>(k)) = series.data.col(c);
  }
  return Series(std::move(data), series.dt);
}

Eigen::VectorXd pooled_component_std(std::span<const Series> library) {
  if (library.empty()) throw Error("empty library");
  const Eigen::Index n_sys = library[0].n_sys();
  Eigen::VectorXd sum = Eigen::VectorXd::Zero(n_sys);
  Eigen::Index count = 0;
  for (const Series& s : library) {
    if (s.n_sys() != n_sys) throw Error("library members have mixed dimensions");
    sum += s.data.colwise().sum().transpose();
    count += s.n_steps();
  }
  if (count == 0) throw Error("library has no samples");
  const Eigen::VectorXd mean = sum / static_cast<double>(count);
  Eigen::VectorXd sq = Eigen::VectorXd::Zero(n_sys);
  for (const Series& s : library)
    sq += (s.data.rowwise() - mean.transpose()).array().square().colwise().sum().matrix().transpose();
  return (sq / static_cast<double>(count)).cwiseSqrt();
}

}  // namespace metafors
