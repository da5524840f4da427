#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "mom/config.hpp"
#include "mom/errors.hpp"

namespace mom {

// Row-major so that X_i is contiguous.
using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;
using IndexList = std::vector<std::size_t>;

// Design matrix, outputs and, for synthetic data, the generating truth.
struct Dataset {
  Matrix x;
  Vector y;
  std::optional<Vector> t_star;
  IndexList outlier_indices;
  std::uint64_t seed = 0;
  std::string generator;
  std::map<std::string, std::string> params;

  std::size_t n() const noexcept { return static_cast<std::size_t>(x.rows()); }
  std::size_t d() const noexcept { return static_cast<std::size_t>(x.cols()); }

  // Rows `idx` in the given order; metadata is carried over except the
  // outlier set, which is re-indexed.
  Dataset subset(const IndexList& idx) const {
    Dataset out;
    out.x.resize(static_cast<Eigen::Index>(idx.size()), x.cols());
    out.y.resize(static_cast<Eigen::Index>(idx.size()));
    std::vector<char> is_out(n(), 0);
    for (auto i : outlier_indices) is_out[i] = 1;
    for (std::size_t r = 0; r < idx.size(); ++r) {
      out.x.row(static_cast<Eigen::Index>(r)) = x.row(static_cast<Eigen::Index>(idx[r]));
      out.y[static_cast<Eigen::Index>(r)] = y[static_cast<Eigen::Index>(idx[r])];
      if (is_out[idx[r]]) out.outlier_indices.push_back(r);
    }
    out.t_star = t_star;
    out.seed = seed;
    out.generator = generator;
    out.params = params;
    return out;
  }
};

inline void validate(const Dataset& data) {
  if (data.x.rows() != data.y.size()) throw ArgumentError("dataset: x and y have different row counts");
  for (auto i : data.outlier_indices) {
    if (i >= data.n()) throw ArgumentError("dataset: outlier index out of range");
  }
  if (data.t_star && static_cast<std::size_t>(data.t_star->size()) != data.d()) {
    throw ArgumentError("dataset: t_star dimension does not match x");
  }
}

inline bool labels_are_binary(const Dataset& data) {
  for (Eigen::Index i = 0; i < data.y.size(); ++i) {
    if (data.y[i] != 1.0 && data.y[i] != -1.0) return false;
  }
  return true;
}

namespace detail {

inline std::string join_doubles(const Vector& v) {
  std::string out;
  for (Eigen::Index j = 0; j < v.size(); ++j) {
    if (j) out += ',';
    out += format_double(v[j]);
  }
  return out;
}

inline std::string join_indices(const IndexList& v) {
  std::string out;
  for (std::size_t j = 0; j < v.size(); ++j) {
    if (j) out += ',';
    out += std::to_string(v[j]);
  }
  return out;
}

}  // namespace detail

inline std::string metadata_path(const std::string& csv_path) { return csv_path + ".meta"; }

// CSV: header `y,x1,...,xd`, then one row per observation, 17 significant
// digits so that reading back is bit-exact. Metadata goes to `<path>.meta`.
inline void write_dataset(const Dataset& data, const std::string& path, bool with_metadata = true) {
  validate(data);
  std::ofstream out(path);
  if (!out) throw ArgumentError("cannot write dataset file '" + path + "'");
  out << "y";
  for (std::size_t j = 0; j < data.d(); ++j) out << ",x" << (j + 1);
  out << '\n';
  std::string line;
  for (Eigen::Index i = 0; i < data.x.rows(); ++i) {
    line = detail::format_double(data.y[i]);
    for (Eigen::Index j = 0; j < data.x.cols(); ++j) {
      line += ',';
      line += detail::format_double(data.x(i, j));
    }
    line += '\n';
    out << line;
  }
  if (!out) throw ArgumentError("error while writing dataset file '" + path + "'");
  if (!with_metadata) return;

  KeyValueConfig meta;
  meta.set("generator", data.generator.empty() ? "external" : data.generator);
  meta.set("seed", std::to_string(data.seed));
  meta.set("n", std::to_string(data.n()));
  meta.set("d", std::to_string(data.d()));
  if (data.t_star) meta.set("t_star", detail::join_doubles(*data.t_star));
  meta.set("outlier_indices", detail::join_indices(data.outlier_indices));
  for (const auto& [k, v] : data.params) meta.set("param." + k, v);
  std::ofstream mo(metadata_path(path));
  if (!mo) throw ArgumentError("cannot write metadata file '" + metadata_path(path) + "'");
  mo << meta.to_string();
}

inline Dataset read_dataset(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ArgumentError("cannot open dataset file '" + path + "'");
  std::string header;
  if (!std::getline(in, header)) throw ArgumentError("dataset file '" + path + "' is empty");
  const auto cols = detail::split(detail::trim(header), ',');
  if (cols.size() < 2 || detail::trim(cols[0]) != "y") {
    throw ArgumentError("dataset file '" + path + "': header must be 'y,x1,...,xd'");
  }
  const std::size_t d = cols.size() - 1;
  std::vector<double> values;
  std::size_t rows = 0;
  std::string line;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    const auto trimmed = detail::trim(line);
    if (trimmed.empty()) continue;
    const auto fields = detail::split(trimmed, ',');
    if (fields.size() != d + 1) {
      throw ArgumentError("dataset file '" + path + "' line " + std::to_string(line_no) + ": expected " +
                          std::to_string(d + 1) + " fields");
    }
    for (auto f : fields) {
      const double v = detail::parse_double(f, path + " line " + std::to_string(line_no));
      if (!std::isfinite(v)) throw DomainError("dataset file '" + path + "' contains a non-finite value");
      values.push_back(v);
    }
    ++rows;
  }
  Dataset data;
  data.x.resize(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(d));
  data.y.resize(static_cast<Eigen::Index>(rows));
  for (std::size_t i = 0; i < rows; ++i) {
    data.y[static_cast<Eigen::Index>(i)] = values[i * (d + 1)];
    for (std::size_t j = 0; j < d; ++j) {
      data.x(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = values[i * (d + 1) + 1 + j];
    }
  }

  std::ifstream meta_in(metadata_path(path));
  if (meta_in) {
    const auto meta = KeyValueConfig::load(metadata_path(path));
    data.generator = meta.get_or("generator", "");
    data.seed = meta.get_u64("seed", 0);
    if (meta.has("t_star")) {
      const auto ts = meta.get_doubles("t_star");
      if (ts.size() != d) throw ArgumentError("metadata t_star dimension does not match '" + path + "'");
      data.t_star = Eigen::Map<const Vector>(ts.data(), static_cast<Eigen::Index>(ts.size()));
    }
    data.outlier_indices = meta.get_sizes("outlier_indices");
    for (const auto& [k, v] : meta.entries()) {
      if (k.rfind("param.", 0) == 0) data.params[k.substr(6)] = v;
    }
  }
  validate(data);
  return data;
}

}  // namespace mom
