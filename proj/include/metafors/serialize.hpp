#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "metafors/library.hpp"
#include "metafors/reservoir.hpp"
#include "metafors/signal_mapper.hpp"

namespace metafors {

// Self-describing binary container: a header per record (name, dtype, dims)
// followed by the payload in row-major order, doubles and 64-bit integers
// written verbatim so round trips are bit exact. Each artifact pairs a
// ".bin" container with a ".json" sidecar describing specs and metadata;
// save/load take the common path stem.

namespace container {

struct Record {
  std::vector<std::int64_t> dims;  // empty means scalar
  std::vector<double> f64;
  std::vector<std::int64_t> i64;  // exactly one of f64/i64 is populated
};

using RecordMap = std::map<std::string, Record>;

void write(const std::filesystem::path& path, const RecordMap& records);
RecordMap read(const std::filesystem::path& path);

Record from_matrix(const Eigen::MatrixXd& m);
Record from_vector(const Eigen::VectorXd& v);
Eigen::MatrixXd to_matrix(const Record& r);
Eigen::VectorXd to_vector(const Record& r);

}  // namespace container

// FNV-1a over a container record's raw bytes; used for manifest integrity
// tokens.
std::uint64_t content_hash(const container::RecordMap& records);
std::string hash_string(std::uint64_t h);

void save_reservoir(const Reservoir& res, const std::filesystem::path& stem);
Reservoir load_reservoir(const std::filesystem::path& stem);

void save_model(const TrainedModel& model, const std::filesystem::path& stem);
TrainedModel load_model(const std::filesystem::path& stem);

void save_meta_library(const MetaLibrary& lib, const std::filesystem::path& stem);
MetaLibrary load_meta_library(const std::filesystem::path& stem);

void save_signal_mapper(const SignalMapper& sm, const std::filesystem::path& stem);
SignalMapper load_signal_mapper(const std::filesystem::path& stem);

// Per-member integrity token over a library member's signal, output layer
// and stored trajectory.
std::string library_member_hash(const MetaLibrary& lib, Eigen::Index member);

}  // namespace metafors
