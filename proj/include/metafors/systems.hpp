#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <span>
#include <vector>

#include "metafors/series.hpp"

namespace metafors {

// Ground-truth generators for the three testbed systems, plus the sampling,
// exclusion and observation utilities the experiment harness needs. All
// functions are pure and deterministic given their arguments.

enum class MapKind { Logistic, Gauss };

struct MapParams {
  MapKind kind = MapKind::Logistic;
  double mu = 0.0;  // logistic rate; unused for Gauss
  double a = 0.0;   // Gauss exponential parameter; unused for Logistic
  double b = 0.0;   // Gauss translation; unused for Logistic
};

struct LorenzParams {
  double omega_t = 1.0;  // uniform time-scale factor on all three equations
  double v1 = 10.0;
  double v2 = 28.0;
  double v3 = 8.0 / 3.0;
  double dt = 0.01;  // integration and sampling step
};

inline double logistic_step(double mu, double x) { return mu * x * (1.0 - x); }

inline double gauss_step(double a, double b, double x) {
  const double d = x - b;
  return std::exp(-a * d * d);
}

double map_step(const MapParams& params, double x);

// x' = omega_t * [v1 (x2 - x1), x1 (v2 - x3) - x2, x1 x2 - v3 x3]
Eigen::Vector3d lorenz_derivative(const LorenzParams& p, const Eigen::Vector3d& x);

// One classical fixed-step RK4 update over p.dt.
Eigen::Vector3d lorenz_rk4_step(const LorenzParams& p, const Eigen::Vector3d& x);

// Each trajectory generator iterates n_total points starting from (and
// including) x0, then returns the last (n_total - n_discard) of them.
// A non-finite state raises DivergenceError naming the step index.
Series logistic_trajectory(double mu, double x0, Eigen::Index n_total,
                           Eigen::Index n_discard);
Series gauss_trajectory(double a, double b, double x0, Eigen::Index n_total,
                        Eigen::Index n_discard);
Series lorenz_trajectory(const LorenzParams& params, const Eigen::Vector3d& x0,
                         Eigen::Index n_total, Eigen::Index n_discard);

// True iff some period p <= max_period repeats to within tol over the last
// max(4 * max_period, 200) samples. The series must be scalar and already
// post-transient; a series shorter than the detection window is an error.
bool is_periodic(const Series& series, Eigen::Index max_period, double tol);

// Detection settings used when excluding periodic trajectories from
// training libraries.
inline constexpr Eigen::Index kPeriodicityMaxPeriod = 64;
inline constexpr double kPeriodicityTol = 1e-6;

// Draws n map parameters uniformly from [lo, hi], redrawing any value whose
// post-transient trajectory is periodic. Each draw uses its own sub-stream
// of `seed`, so draw i does not depend on n. Gauss draws vary `a` and keep
// the translation fixed at kGaussTranslation.
std::vector<MapParams> sample_chaotic_params(MapKind kind, double lo, double hi,
                                             Eigen::Index n, std::uint64_t seed);

// Translation used for the Gauss family in all experiments: the usual map
// x' = exp(-a x^2) - 1/2 shifted by half, which confines its chaotic
// trajectories to (0, 1).
inline constexpr double kGaussTranslation = 0.5;

// Adds iid zero-mean Gaussian noise with per-component standard deviation
// sigma_rel * library_std[c]. sigma_rel = 0 returns the input unchanged.
Series add_observational_noise(const Series& series, double sigma_rel,
                               const Eigen::VectorXd& library_std,
                               std::uint64_t seed);

// Column selection; components may repeat or reorder.
Series partial_observation(const Series& series,
                           std::span<const Eigen::Index> components);

// Per-component standard deviation pooled over all rows of all series.
Eigen::VectorXd pooled_component_std(std::span<const Series> library);

}  // namespace metafors
