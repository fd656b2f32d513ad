#include "metafors/serialize.hpp"

#include <cstdio>
#include <cstring>
#include <fstream>

#include <json.hpp>

#include "metafors/errors.hpp"
#include "metafors/rng.hpp"

namespace metafors {

namespace container {

namespace {

constexpr char kMagic[4] = {'M', 'F', 'C', '1'};

template <typename T>
void write_pod(std::ofstream& out, const T& v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T read_pod(std::ifstream& in) {
  T v{};
  in.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!in) throw Error("container: unexpected end of file");
  return v;
}

}  // namespace

void write(const std::filesystem::path& path, const RecordMap& records) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot open " + path.string() + " for writing");
  out.write(kMagic, sizeof(kMagic));
  write_pod<std::uint64_t>(out, records.size());
  for (const auto& [name, rec] : records) {
    write_pod<std::uint32_t>(out, static_cast<std::uint32_t>(name.size()));
    out.write(name.data(), static_cast<std::streamsize>(name.size()));
    const bool is_f64 = rec.i64.empty();
    write_pod<std::uint32_t>(out, is_f64 ? 0u : 1u);
    write_pod<std::uint32_t>(out, static_cast<std::uint32_t>(rec.dims.size()));
    for (std::int64_t d : rec.dims) write_pod<std::int64_t>(out, d);
    if (is_f64) {
      write_pod<std::uint64_t>(out, rec.f64.size());
      out.write(reinterpret_cast<const char*>(rec.f64.data()),
                static_cast<std::streamsize>(rec.f64.size() * sizeof(double)));
    } else {
      write_pod<std::uint64_t>(out, rec.i64.size());
      out.write(reinterpret_cast<const char*>(rec.i64.data()),
                static_cast<std::streamsize>(rec.i64.size() * sizeof(std::int64_t)));
    }
  }
  if (!out) throw Error("write failed for " + path.string());
}

RecordMap read(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path.string());
  char magic[4];
  in.read(magic, sizeof(magic));
  if (!in || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0)
    throw Error(path.string() + " is not a metafors container");

  RecordMap records;
  const auto n_records = read_pod<std::uint64_t>(in);
  for (std::uint64_t i = 0; i < n_records; ++i) {
    const auto name_len = read_pod<std::uint32_t>(in);
    std::string name(name_len, '\0');
    in.read(name.data(), name_len);
    const auto dtype = read_pod<std::uint32_t>(in);
    const auto rank = read_pod<std::uint32_t>(in);
    Record rec;
    for (std::uint32_t d = 0; d < rank; ++d)
      rec.dims.push_back(read_pod<std::int64_t>(in));
    const auto count = read_pod<std::uint64_t>(in);
    if (dtype == 0) {
      rec.f64.resize(count);
      in.read(reinterpret_cast<char*>(rec.f64.data()),
              static_cast<std::streamsize>(count * sizeof(double)));
    } else {
      rec.i64.resize(count);
      in.read(reinterpret_cast<char*>(rec.i64.data()),
              static_cast<std::streamsize>(count * sizeof(std::int64_t)));
    }
    if (!in) throw Error("container: truncated record in " + path.string());
    records.emplace(std::move(name), std::move(rec));
  }
  return records;
}

Record from_matrix(const Eigen::MatrixXd& m) {
  Record rec;
  rec.dims = {m.rows(), m.cols()};
  rec.f64.resize(static_cast<std::size_t>(m.size()));
  std::size_t k = 0;
  for (Eigen::Index r = 0; r < m.rows(); ++r)
    for (Eigen::Index c = 0; c < m.cols(); ++c) rec.f64[k++] = m(r, c);
  return rec;
}

Record from_vector(const Eigen::VectorXd& v) {
  Record rec;
  rec.dims = {v.size()};
  rec.f64.assign(v.data(), v.data() + v.size());
  return rec;
}

Eigen::MatrixXd to_matrix(const Record& rec) {
  if (rec.dims.size() != 2) throw Error("container: record is not a matrix");
  Eigen::MatrixXd m(rec.dims[0], rec.dims[1]);
  if (static_cast<std::int64_t>(rec.f64.size()) != m.size())
    throw Error("container: matrix payload size mismatch");
  std::size_t k = 0;
  for (Eigen::Index r = 0; r < m.rows(); ++r)
    for (Eigen::Index c = 0; c < m.cols(); ++c) m(r, c) = rec.f64[k++];
  return m;
}

Eigen::VectorXd to_vector(const Record& rec) {
  if (rec.dims.size() != 1) throw Error("container: record is not a vector");
  if (static_cast<std::int64_t>(rec.f64.size()) != rec.dims[0])
    throw Error("container: vector payload size mismatch");
  return Eigen::Map<const Eigen::VectorXd>(rec.f64.data(),
                                           static_cast<Eigen::Index>(rec.f64.size()));
}

}  // namespace container

std::uint64_t content_hash(const container::RecordMap& records) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  auto mix_bytes = [&h](const void* data, std::size_t n) {
    const auto* p = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < n; ++i) {
      h ^= p[i];
      h *= 0x100000001b3ULL;
    }
  };
  for (const auto& [name, rec] : records) {
    mix_bytes(name.data(), name.size());
    mix_bytes(rec.dims.data(), rec.dims.size() * sizeof(std::int64_t));
    mix_bytes(rec.f64.data(), rec.f64.size() * sizeof(double));
    mix_bytes(rec.i64.data(), rec.i64.size() * sizeof(std::int64_t));
  }
  return h;
}

std::string hash_string(std::uint64_t h) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

namespace {

using nlohmann::json;

json spec_to_json(const ReservoirSpec& spec) {
  return {{"n_nodes", spec.n_nodes},
          {"mean_in_degree", spec.mean_in_degree},
          {"spectral_radius", spec.spectral_radius},
          {"input_strength", spec.input_strength},
          {"bias_strength", spec.bias_strength},
          {"leakage", spec.leakage},
          {"n_inputs", spec.n_inputs},
          {"seed", spec.seed}};
}

ReservoirSpec spec_from_json(const json& j) {
  ReservoirSpec spec;
  spec.n_nodes = j.at("n_nodes").get<Eigen::Index>();
  spec.mean_in_degree = j.at("mean_in_degree").get<double>();
  spec.spectral_radius = j.at("spectral_radius").get<double>();
  spec.input_strength = j.at("input_strength").get<double>();
  spec.bias_strength = j.at("bias_strength").get<double>();
  spec.leakage = j.at("leakage").get<double>();
  spec.n_inputs = j.at("n_inputs").get<Eigen::Index>();
  spec.seed = j.at("seed").get<std::uint64_t>();
  return spec;
}

void write_sidecar(const std::filesystem::path& stem, const json& j) {
  std::ofstream out(stem.string() + ".json");
  if (!out) throw Error("cannot open sidecar for " + stem.string());
  out << j.dump(2) << "\n";
}

json read_sidecar(const std::filesystem::path& stem) {
  std::ifstream in(stem.string() + ".json");
  if (!in) throw Error("cannot open sidecar for " + stem.string());
  return json::parse(in);
}

void add_sparse(container::RecordMap& rec, const std::string& prefix,
                const Eigen::SparseMatrix<double>& m) {
  container::Record rows, cols, vals;
  rows.dims = {m.nonZeros()};
  cols.dims = {m.nonZeros()};
  vals.dims = {m.nonZeros()};
  for (int k = 0; k < m.outerSize(); ++k)
    for (Eigen::SparseMatrix<double>::InnerIterator it(m, k); it; ++it) {
      rows.i64.push_back(it.row());
      cols.i64.push_back(it.col());
      vals.f64.push_back(it.value());
    }
  rec.emplace(prefix + "_rows", std::move(rows));
  rec.emplace(prefix + "_cols", std::move(cols));
  rec.emplace(prefix + "_vals", std::move(vals));
}

Eigen::SparseMatrix<double> get_sparse(const container::RecordMap& rec,
                                       const std::string& prefix,
                                       Eigen::Index n_rows, Eigen::Index n_cols) {
  const auto& rows = rec.at(prefix + "_rows").i64;
  const auto& cols = rec.at(prefix + "_cols").i64;
  const auto& vals = rec.at(prefix + "_vals").f64;
  if (rows.size() != cols.size() || rows.size() != vals.size())
    throw Error("container: inconsistent sparse records for " + prefix);
  std::vector<Eigen::Triplet<double>> entries;
  entries.reserve(vals.size());
  for (std::size_t k = 0; k < vals.size(); ++k)
    entries.emplace_back(static_cast<Eigen::Index>(rows[k]),
                         static_cast<Eigen::Index>(cols[k]), vals[k]);
  Eigen::SparseMatrix<double> m(n_rows, n_cols);
  m.setFromTriplets(entries.begin(), entries.end());
  return m;
}

container::RecordMap reservoir_records(const Reservoir& res,
                                       const std::string& prefix) {
  container::RecordMap rec;
  add_sparse(rec, prefix + "adjacency", res.adjacency);
  rec.emplace(prefix + "input_weights", container::from_matrix(res.input_weights));
  rec.emplace(prefix + "bias", container::from_vector(res.bias));
  return rec;
}

Reservoir reservoir_from_records(const container::RecordMap& rec,
                                 const std::string& prefix,
                                 const ReservoirSpec& spec) {
  Reservoir res;
  res.adjacency = get_sparse(rec, prefix + "adjacency", spec.n_nodes, spec.n_nodes);
  res.input_weights = container::to_matrix(rec.at(prefix + "input_weights"));
  res.bias = container::to_vector(rec.at(prefix + "bias"));
  res.leakage = spec.leakage;
  res.spec = spec;
  res.hash = reservoir_spec_hash(spec);
  return res;
}

}  // namespace

void save_reservoir(const Reservoir& res, const std::filesystem::path& stem) {
  const container::RecordMap rec = reservoir_records(res, "");
  container::write(stem.string() + ".bin", rec);
  json j = {{"kind", "reservoir"},
            {"spec", spec_to_json(res.spec)},
            {"spec_hash", res.hash},
            {"content_hash", hash_string(content_hash(rec))}};
  write_sidecar(stem, j);
}

Reservoir load_reservoir(const std::filesystem::path& stem) {
  const json j = read_sidecar(stem);
  const container::RecordMap rec = container::read(stem.string() + ".bin");
  return reservoir_from_records(rec, "", spec_from_json(j.at("spec")));
}

void save_model(const TrainedModel& model, const std::filesystem::path& stem) {
  container::RecordMap rec;
  rec.emplace("w_out", container::from_matrix(model.w_out));
  container::write(stem.string() + ".bin", rec);
  json j = {{"kind", "trained_model"},
            {"reservoir_spec_hash", model.reservoir_spec_hash},
            {"alpha", model.alpha},
            {"n_fit", model.n_fit},
            {"n_out", model.n_out()},
            {"content_hash", hash_string(content_hash(rec))}};
  write_sidecar(stem, j);
}

TrainedModel load_model(const std::filesystem::path& stem) {
  const json j = read_sidecar(stem);
  const container::RecordMap rec = container::read(stem.string() + ".bin");
  TrainedModel model;
  model.w_out = container::to_matrix(rec.at("w_out"));
  model.reservoir_spec_hash = j.at("reservoir_spec_hash").get<std::string>();
  model.alpha = j.at("alpha").get<double>();
  model.n_fit = j.at("n_fit").get<Eigen::Index>();
  return model;
}

std::string library_member_hash(const MetaLibrary& lib, Eigen::Index member) {
  const auto i = static_cast<std::size_t>(member);
  container::RecordMap rec;
  rec.emplace("signal", container::from_matrix(lib.long_signals[i].data));
  rec.emplace("w_out", container::from_matrix(lib.models[i].w_out));
  rec.emplace("trajectory", container::from_matrix(lib.trajectories[i].states));
  return hash_string(content_hash(rec));
}

void save_meta_library(const MetaLibrary& lib, const std::filesystem::path& stem) {
  container::RecordMap rec;
  json members = json::array();
  for (Eigen::Index i = 0; i < lib.n_members(); ++i) {
    const auto idx = std::to_string(i);
    const auto u = static_cast<std::size_t>(i);
    rec.emplace("signal_" + idx, container::from_matrix(lib.long_signals[u].data));
    rec.emplace("w_out_" + idx, container::from_matrix(lib.models[u].w_out));
    rec.emplace("trajectory_" + idx,
                container::from_matrix(lib.trajectories[u].states));
    members.push_back({{"hash", library_member_hash(lib, i)},
                       {"n_fit", lib.models[u].n_fit}});
  }
  container::write(stem.string() + ".bin", rec);
  json j = {{"kind", "meta_library"},
            {"n_members", lib.n_members()},
            {"n_test", lib.n_test},
            {"n_trans", lib.n_trans},
            {"stride", lib.stride},
            {"alpha", lib.alpha},
            {"dt", lib.long_signals.front().dt},
            {"reservoir_spec_hash", lib.reservoir_spec_hash},
            {"members", members},
            {"content_hash", hash_string(content_hash(rec))}};
  write_sidecar(stem, j);
}

MetaLibrary load_meta_library(const std::filesystem::path& stem) {
  const json j = read_sidecar(stem);
  const container::RecordMap rec = container::read(stem.string() + ".bin");

  MetaLibrary lib;
  lib.n_test = j.at("n_test").get<Eigen::Index>();
  lib.n_trans = j.at("n_trans").get<Eigen::Index>();
  lib.stride = j.at("stride").get<Eigen::Index>();
  lib.alpha = j.at("alpha").get<double>();
  lib.reservoir_spec_hash = j.at("reservoir_spec_hash").get<std::string>();
  const double dt = j.at("dt").get<double>();
  const auto n_members = j.at("n_members").get<Eigen::Index>();
  const json members = j.at("members");

  for (Eigen::Index i = 0; i < n_members; ++i) {
    const auto idx = std::to_string(i);
    Series signal(container::to_matrix(rec.at("signal_" + idx)), dt);
    TrainedModel model;
    model.w_out = container::to_matrix(rec.at("w_out_" + idx));
    model.alpha = lib.alpha;
    model.n_fit = members.at(static_cast<std::size_t>(i)).at("n_fit").get<Eigen::Index>();
    model.reservoir_spec_hash = lib.reservoir_spec_hash;
    StateTrajectory traj;
    traj.states = container::to_matrix(rec.at("trajectory_" + idx));
    lib.long_signals.push_back(std::move(signal));
    lib.models.push_back(std::move(model));
    lib.trajectories.push_back(std::move(traj));
    lib.flat_models.push_back(flatten_model(lib.models.back().w_out));
  }
  for (Eigen::Index i = 0; i < n_members; ++i) {
    const Eigen::Index last = lib.long_signals[static_cast<std::size_t>(i)].n_steps() -
                              lib.n_test;
    for (Eigen::Index j2 = lib.n_trans; j2 <= last; j2 += lib.stride)
      lib.triplets.push_back({i, j2});
  }
  return lib;
}

void save_signal_mapper(const SignalMapper& sm, const std::filesystem::path& stem) {
  container::RecordMap rec = reservoir_records(sm.reservoir, "reservoir_");
  rec.emplace("w_sm", container::from_matrix(sm.w_sm));
  if (sm.fixed_model)
    rec.emplace("fixed_model_w_out", container::from_matrix(sm.fixed_model->w_out));
  container::write(stem.string() + ".bin", rec);
  json j = {{"kind", "signal_mapper"},
            {"reservoir_spec", spec_to_json(sm.reservoir.spec)},
            {"n_test", sm.n_test},
            {"alpha", sm.alpha},
            {"targets", sm.targets == MapperTargets::Full       ? "full"
                        : sm.targets == MapperTargets::ModelOnly ? "model_only"
                                                                 : "cold_start_only"},
            {"n_forecaster_nodes", sm.n_forecaster_nodes},
            {"n_sys", sm.n_sys},
            {"forecaster_spec_hash", sm.forecaster_spec_hash},
            {"content_hash", hash_string(content_hash(rec))}};
  if (sm.fixed_model) {
    j["fixed_model"] = {{"alpha", sm.fixed_model->alpha},
                        {"n_fit", sm.fixed_model->n_fit}};
  }
  write_sidecar(stem, j);
}

SignalMapper load_signal_mapper(const std::filesystem::path& stem) {
  const json j = read_sidecar(stem);
  const container::RecordMap rec = container::read(stem.string() + ".bin");

  SignalMapper sm;
  sm.reservoir = reservoir_from_records(rec, "reservoir_",
                                        spec_from_json(j.at("reservoir_spec")));
  sm.w_sm = container::to_matrix(rec.at("w_sm"));
  sm.n_test = j.at("n_test").get<Eigen::Index>();
  sm.alpha = j.at("alpha").get<double>();
  const std::string targets = j.at("targets").get<std::string>();
  sm.targets = targets == "full"        ? MapperTargets::Full
               : targets == "model_only" ? MapperTargets::ModelOnly
                                         : MapperTargets::ColdStartOnly;
  sm.n_forecaster_nodes = j.at("n_forecaster_nodes").get<Eigen::Index>();
  sm.n_sys = j.at("n_sys").get<Eigen::Index>();
  sm.forecaster_spec_hash = j.at("forecaster_spec_hash").get<std::string>();
  if (j.contains("fixed_model")) {
    TrainedModel fixed;
    fixed.w_out = container::to_matrix(rec.at("fixed_model_w_out"));
    fixed.alpha = j.at("fixed_model").at("alpha").get<double>();
    fixed.n_fit = j.at("fixed_model").at("n_fit").get<Eigen::Index>();
    fixed.reservoir_spec_hash = sm.forecaster_spec_hash;
    sm.fixed_model = std::move(fixed);
  }
  return sm;
}

}  // namespace metafors
