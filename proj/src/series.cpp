#include "metafors/series.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "metafors/errors.hpp"

namespace metafors {

Series Series::slice(Eigen::Index start, Eigen::Index count) const {
  if (start < 0 || count < 0 || start + count > n_steps())
    throw Error("Series::slice: window [" + std::to_string(start) + ", " +
                std::to_string(start + count) + ") out of range for " +
                std::to_string(n_steps()) + " steps");
  return Series(data.middleRows(start, count), dt);
}

bool all_finite(const Eigen::Ref<const Eigen::MatrixXd>& m) {
  return m.allFinite();
}

namespace {

std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace

void write_series_csv(const Series& series, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot open " + path.string() + " for writing");
  out << "# dt=" << format_double(series.dt) << "\n";
  out << "t";
  for (Eigen::Index c = 0; c < series.n_sys(); ++c) out << ",x" << c;
  out << "\n";
  for (Eigen::Index r = 0; r < series.n_steps(); ++r) {
    out << r;
    for (Eigen::Index c = 0; c < series.n_sys(); ++c)
      out << ',' << format_double(series.data(r, c));
    out << "\n";
  }
  if (!out) throw Error("write failed for " + path.string());
}

Series read_series_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path.string());

  std::string line;
  double dt = 1.0;
  if (!std::getline(in, line)) throw Error("empty series file " + path.string());
  if (line.rfind("# dt=", 0) == 0) {
    dt = std::stod(line.substr(5));
    if (!std::getline(in, line)) throw Error("missing header in " + path.string());
  }
  // line now holds the header; count columns after t.
  Eigen::Index n_cols = 0;
  for (char ch : line)
    if (ch == ',') ++n_cols;
  if (n_cols < 1) throw Error("malformed series header in " + path.string());

  std::vector<double> values;
  Eigen::Index n_rows = 0;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::stringstream row(line);
    std::string cell;
    std::getline(row, cell, ',');  // time index, implied by row order
    for (Eigen::Index c = 0; c < n_cols; ++c) {
      if (!std::getline(row, cell, ','))
        throw Error("short row in " + path.string());
      values.push_back(std::stod(cell));
    }
    ++n_rows;
  }

  Eigen::MatrixXd data(n_rows, n_cols);
  for (Eigen::Index r = 0; r < n_rows; ++r)
    for (Eigen::Index c = 0; c < n_cols; ++c)
      data(r, c) = values[static_cast<std::size_t>(r * n_cols + c)];
  return Series(std::move(data), dt);
}

}  // namespace metafors
