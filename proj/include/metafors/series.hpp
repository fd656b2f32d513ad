#pragma once

#include <Eigen/Dense>
#include <filesystem>

namespace metafors {

// A uniformly sampled vector time series. Rows are time steps, columns are
// observed components. dt is the sampling interval; iterated maps use dt=1.
struct Series {
  Eigen::MatrixXd data;
  double dt = 1.0;

  Series() = default;
  Series(Eigen::MatrixXd d, double step) : data(std::move(d)), dt(step) {}

  Eigen::Index n_steps() const { return data.rows(); }
  Eigen::Index n_sys() const { return data.cols(); }

  // Row window [start, start + count), same dt.
  Series slice(Eigen::Index start, Eigen::Index count) const;
};

bool all_finite(const Eigen::Ref<const Eigen::MatrixXd>& m);

// CSV layout: a "# dt=..." comment line, a header row "t,x0,x1,...", then
// one row per step with the time column in units of dt. Values are written
// with 17 significant digits so a read-back is bit exact.
void write_series_csv(const Series& series, const std::filesystem::path& path);
Series read_series_csv(const std::filesystem::path& path);

}  // namespace metafors
