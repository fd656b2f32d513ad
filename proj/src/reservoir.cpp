#include "metafors/reservoir.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <limits>
#include <string>
#include <vector>

#include "metafors/errors.hpp"
#include "metafors/rng.hpp"

namespace metafors {

namespace {

void check_spec(const ReservoirSpec& spec) {
  if (spec.n_nodes < 1) throw Error("reservoir needs at least one node");
  if (spec.n_inputs < 1) throw Error("reservoir needs at least one input");
  if (spec.leakage < 0.0 || spec.leakage > 1.0)
    throw Error("leakage must lie in [0, 1]");
  if (spec.spectral_radius < 0.0) throw Error("spectral radius must be >= 0");
  if (spec.mean_in_degree < 0.0) throw Error("mean in-degree must be >= 0");
  if (spec.input_strength < 0.0 || spec.bias_strength < 0.0)
    throw Error("input and bias strengths must be >= 0");
}

std::uint64_t hash_u64(std::uint64_t h, std::uint64_t v) {
  return splitmix64(h ^ splitmix64(v));
}

std::uint64_t hash_double(std::uint64_t h, double v) {
  std::uint64_t bits;
  static_assert(sizeof(bits) == sizeof(v));
  std::memcpy(&bits, &v, sizeof(bits));
  return hash_u64(h, bits);
}

}  // namespace

std::string reservoir_spec_hash(const ReservoirSpec& spec) {
  std::uint64_t h = fnv1a64("reservoir_spec");
  h = hash_u64(h, static_cast<std::uint64_t>(spec.n_nodes));
  h = hash_double(h, spec.mean_in_degree);
  h = hash_double(h, spec.spectral_radius);
  h = hash_double(h, spec.input_strength);
  h = hash_double(h, spec.bias_strength);
  h = hash_double(h, spec.leakage);
  h = hash_u64(h, static_cast<std::uint64_t>(spec.n_inputs));
  h = hash_u64(h, spec.seed);
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

double spectral_radius(const Eigen::SparseMatrix<double>& m) {
  const Eigen::Index n = m.rows();
  if (n != m.cols()) throw Error("spectral_radius expects a square matrix");
  if (n == 0 || m.nonZeros() == 0) return 0.0;

  // Power iteration. The norm ratio converges to |lambda_max| when the
  // dominant eigenvalue is real and separated in modulus; a residual check
  // guards against false convergence.
  constexpr int kMaxIters = 2000;
  constexpr double kTol = 1e-10;
  Rng rng(0x5eed5eedULL);
  Eigen::VectorXd x(n);
  for (Eigen::Index i = 0; i < n; ++i) x[i] = rng.uniform(-1.0, 1.0);
  x.normalize();

  double prev = 0.0;
  int stable = 0;
  for (int iter = 0; iter < kMaxIters; ++iter) {
    Eigen::VectorXd y = m * x;
    const double nu = y.norm();
    if (nu < 1e-300) break;  // (near-)nilpotent or unlucky start: use Schur
    x = y / nu;
    if (std::abs(nu - prev) <= kTol * std::max(nu, 1e-30)) {
      if (++stable >= 4) {
        const Eigen::VectorXd mx = m * x;
        const double rayleigh = x.dot(mx);
        if ((mx - rayleigh * x).norm() <= 1e-8 * std::max(std::abs(rayleigh), 1e-30))
          return std::abs(rayleigh);
        break;  // not an eigenvector: dominant pair is complex or tied
      }
    } else {
      stable = 0;
    }
    prev = nu;
  }

  if (n > 4096)
    throw Error("spectral radius power iteration did not converge for n=" +
                std::to_string(n));
  const Eigen::MatrixXd dense(m);
  Eigen::EigenSolver<Eigen::MatrixXd> solver(dense, /*computeEigenvectors=*/false);
  if (solver.info() != Eigen::Success)
    throw Error("dense eigensolver failed while computing the spectral radius");
  return solver.eigenvalues().cwiseAbs().maxCoeff();
}

Reservoir build_reservoir(const ReservoirSpec& spec) {
  check_spec(spec);
  const Eigen::Index n = spec.n_nodes;
  const double p = spec.mean_in_degree / static_cast<double>(n);

  constexpr int kMaxResamples = 8;
  Eigen::SparseMatrix<double> adjacency(n, n);
  bool scaled = false;
  for (int attempt = 0; attempt < kMaxResamples && !scaled; ++attempt) {
    const std::uint64_t base =
        derive_seed(spec.seed, "reservoir", static_cast<std::uint64_t>(attempt));
    Rng rng(derive_seed(base, "adjacency"));
    std::vector<Eigen::Triplet<double>> entries;
    entries.reserve(static_cast<std::size_t>(spec.mean_in_degree * n * 1.3) + 16);
    for (Eigen::Index i = 0; i < n; ++i)
      for (Eigen::Index j = 0; j < n; ++j)
        if (rng.uniform01() < p)
          entries.emplace_back(i, j, rng.uniform(-1.0, 1.0));
    adjacency.setZero();
    adjacency.setFromTriplets(entries.begin(), entries.end());

    if (spec.spectral_radius == 0.0) {
      adjacency.setZero();
      scaled = true;
      break;
    }
    const double raw_radius = spectral_radius(adjacency);
    if (raw_radius > 1e-12) {
      adjacency *= spec.spectral_radius / raw_radius;
      scaled = true;
    }
  }
  if (!scaled)
    throw Error("sampled adjacency kept a numerically zero spectral radius after " +
                std::to_string(kMaxResamples) + " attempts");

  const std::uint64_t base = derive_seed(spec.seed, "reservoir", 0);
  Rng rng_in(derive_seed(base, "input"));
  Eigen::MatrixXd input_weights(n, spec.n_inputs);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < spec.n_inputs; ++j)
      input_weights(i, j) = rng_in.uniform(-spec.input_strength, spec.input_strength);

  Rng rng_bias(derive_seed(base, "bias"));
  Eigen::VectorXd bias(n);
  for (Eigen::Index i = 0; i < n; ++i)
    bias[i] = rng_bias.uniform(-spec.bias_strength, spec.bias_strength);

  Reservoir res;
  res.adjacency = std::move(adjacency);
  res.input_weights = std::move(input_weights);
  res.bias = std::move(bias);
  res.leakage = spec.leakage;
  res.spec = spec;
  res.hash = reservoir_spec_hash(spec);
  return res;
}

void reservoir_step(const Reservoir& res, Eigen::VectorXd& r,
                    const Eigen::Ref<const Eigen::VectorXd>& u,
                    Eigen::VectorXd& scratch) {
  scratch.noalias() = res.adjacency * r;
  scratch.noalias() += res.input_weights * u;
  scratch += res.bias;
  const double lambda = res.leakage;
  r = ((1.0 - lambda) * r.array() + lambda * scratch.array().tanh()).matrix();
}

StateTrajectory drive_open_loop(const Reservoir& res, const Eigen::VectorXd& r0,
                                const Series& inputs) {
  if (inputs.n_sys() != res.n_inputs())
    throw Error("input series has " + std::to_string(inputs.n_sys()) +
                " components, reservoir expects " + std::to_string(res.n_inputs()));
  if (r0.size() != res.n_nodes())
    throw Error("initial state size does not match the reservoir");

  StateTrajectory traj;
  traj.states.resize(inputs.n_steps(), res.n_nodes());
  Eigen::VectorXd r = r0;
  Eigen::VectorXd scratch(res.n_nodes());
  for (Eigen::Index k = 0; k < inputs.n_steps(); ++k) {
    reservoir_step(res, r, inputs.data.row(k).transpose(), scratch);
    traj.states.row(k) = r.transpose();
  }
  return traj;
}

Eigen::VectorXd drive_to_state(const Reservoir& res, Eigen::VectorXd r,
                               const Series& inputs) {
  if (inputs.n_sys() != res.n_inputs())
    throw Error("input series has " + std::to_string(inputs.n_sys()) +
                " components, reservoir expects " + std::to_string(res.n_inputs()));
  if (r.size() != res.n_nodes())
    throw Error("initial state size does not match the reservoir");
  Eigen::VectorXd scratch(res.n_nodes());
  for (Eigen::Index k = 0; k < inputs.n_steps(); ++k)
    reservoir_step(res, r, inputs.data.row(k).transpose(), scratch);
  return r;
}

Eigen::MatrixXd ridge_solve(Eigen::MatrixXd gram, double ridge,
                            const Eigen::MatrixXd& cross) {
  gram.diagonal().array() += ridge;
  const Eigen::LLT<Eigen::MatrixXd> llt(gram);
  if (llt.info() != Eigen::Success)
    throw Error("regularized Gram matrix is not positive definite; "
                "use a regularization alpha > 0");
  return llt.solve(cross.transpose()).transpose();
}

TrainingResult train_output_layer(const Reservoir& res, const Series& training,
                                  Eigen::Index n_trans, double alpha) {
  const Eigen::Index n_train = training.n_steps();
  if (n_trans < 0) throw Error("n_trans must be >= 0");
  if (n_train <= n_trans + 1)
    throw Error("training series of " + std::to_string(n_train) +
                " steps leaves no fitting pairs after a transient of " +
                std::to_string(n_trans));
  if (alpha < 0.0) throw Error("regularization alpha must be >= 0");

  StateTrajectory traj = drive_open_loop(res, res.zero_state(), training);
  const Eigen::Index n_fit = n_train - n_trans - 1;

  // Trajectory row k is r((k+1) dt): states r(n dt) for n in
  // [n_trans + 1, n_train - 1] are rows [n_trans, n_train - 2], paired with
  // targets u(n dt), rows [n_trans + 1, n_train - 1].
  const auto states = traj.states.middleRows(n_trans, n_fit);
  const auto targets = training.data.middleRows(n_trans + 1, n_fit);

  Eigen::MatrixXd gram(res.n_nodes(), res.n_nodes());
  gram.noalias() = states.transpose() * states;
  Eigen::MatrixXd cross(training.n_sys(), res.n_nodes());
  cross.noalias() = targets.transpose() * states;

  TrainedModel model;
  model.w_out = ridge_solve(std::move(gram), alpha * static_cast<double>(n_fit), cross);
  model.reservoir_spec_hash = res.hash;
  model.alpha = alpha;
  model.n_fit = n_fit;
  return {std::move(model), std::move(traj)};
}

Forecast forecast_closed_loop(const Reservoir& res, const TrainedModel& model,
                              const Eigen::VectorXd& r_init,
                              Eigen::Index n_steps, double dt) {
  if (model.n_out() != res.n_inputs())
    throw Error("closed-loop feedback needs n_out == n_inputs, got " +
                std::to_string(model.n_out()) + " and " +
                std::to_string(res.n_inputs()));
  if (model.w_out.cols() != res.n_nodes())
    throw Error("output layer width does not match the reservoir");
  if (r_init.size() != res.n_nodes())
    throw Error("initial state size does not match the reservoir");
  if (n_steps < 0) throw Error("n_steps must be >= 0");

  Forecast out;
  out.series.dt = dt;
  out.series.data.resize(n_steps, model.n_out());
  Eigen::VectorXd r = r_init;
  Eigen::VectorXd scratch(res.n_nodes());
  Eigen::VectorXd u_hat(model.n_out());
  for (Eigen::Index k = 0; k < n_steps; ++k) {
    u_hat.noalias() = model.w_out * r;
    if (!u_hat.allFinite()) {
      out.diverged = true;
      out.series.data.bottomRows(n_steps - k).setConstant(
          std::numeric_limits<double>::quiet_NaN());
      break;
    }
    out.series.data.row(k) = u_hat.transpose();
    if (k + 1 < n_steps) reservoir_step(res, r, u_hat, scratch);
  }
  return out;
}

Forecast synchronize_then_forecast(const Reservoir& res, const TrainedModel& model,
                                   const Eigen::VectorXd& r_init,
                                   const Series& sync, Eigen::Index n_steps) {
  if (sync.n_steps() < 1) throw Error("synchronization signal is empty");
  const Eigen::VectorXd synced = drive_to_state(res, r_init, sync);
  return forecast_closed_loop(res, model, synced, n_steps, sync.dt);
}

}  // namespace metafors
