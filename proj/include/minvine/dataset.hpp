#ifndef MINVINE_DATASET_HPP
#define MINVINE_DATASET_HPP

#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Cholesky>
#include <Eigen/Core>

#include "minvine/error.hpp"
#include "minvine/ranks.hpp"
#include "minvine/vine.hpp"

namespace minvine {

struct Dataset {
  std::vector<std::string> labels;
  Columns columns;            // columns[var][row]
  bool pseudo_observations = false;

  std::size_t rows() const { return columns.empty() ? 0 : columns[0].size(); }
  std::size_t cols() const { return columns.size(); }

  std::size_t index_of(const std::string& label) const {
    for (std::size_t j = 0; j < labels.size(); ++j)
      if (labels[j] == label) return j;
    throw InvalidArgument("no column labelled '" + label + "'");
  }

  const std::vector<double>& column(const std::string& label) const {
    return columns[index_of(label)];
  }
};

namespace detail {

inline std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  return s.substr(b, s.find_last_not_of(" \t\r") - b + 1);
}

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::stringstream ss(line);
  while (std::getline(ss, cell, ',')) out.push_back(trim(cell));
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

}  // namespace detail

/// Headered CSV of numbers. Line and column numbers in errors are 1-based,
/// counting the header as line 1.
inline Dataset parse_csv(std::istream& in) {
  std::string line;
  std::size_t lineno = 0;
  Dataset ds;
  while (std::getline(in, line)) {
    ++lineno;
    if (!detail::trim(line).empty()) break;
  }
  if (detail::trim(line).empty()) throw EmptyDataset("CSV has no header");
  ds.labels = detail::split_csv_line(line);
  std::set<std::string> seen;
  for (std::size_t j = 0; j < ds.labels.size(); ++j) {
    if (ds.labels[j].empty()) throw ParseError("empty column label", lineno, j + 1);
    if (!seen.insert(ds.labels[j]).second)
      throw ParseError("duplicate column label '" + ds.labels[j] + "'", lineno, j + 1);
  }
  ds.columns.assign(ds.labels.size(), {});

  while (std::getline(in, line)) {
    ++lineno;
    if (detail::trim(line).empty()) continue;
    const auto cells = detail::split_csv_line(line);
    if (cells.size() != ds.labels.size())
      throw ParseError("expected " + std::to_string(ds.labels.size()) + " fields, found " +
                           std::to_string(cells.size()),
                       lineno, std::min(cells.size(), ds.labels.size()) + 1);
    for (std::size_t j = 0; j < cells.size(); ++j) {
      const auto& c = cells[j];
      double x = 0.0;
      const char* first = c.data();
      const char* last = c.data() + c.size();
      if (!c.empty() && *first == '+') ++first;
      const auto [ptr, ec] = std::from_chars(first, last, x);
      if (c.empty() || ec != std::errc() || ptr != last)
        throw ParseError("row " + std::to_string(lineno) + ", column " + std::to_string(j + 1) +
                             " ('" + ds.labels[j] + "'): not a number: '" + c + "'",
                         lineno, j + 1);
      if (!std::isfinite(x))
        throw NonFiniteValue("row " + std::to_string(lineno) + ", column " + std::to_string(j + 1) +
                                 " ('" + ds.labels[j] + "'): non-finite value",
                             lineno, j + 1);
      ds.columns[j].push_back(x);
    }
  }
  if (ds.rows() == 0) throw EmptyDataset("CSV has a header but no data rows");
  return ds;
}

inline Dataset ingest_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open '" + path + "'", 0, 0);
  return parse_csv(in);
}

/// Each column replaced by rank / (N + 1), ties sharing their average rank.
inline Dataset rank_transform(const Dataset& data) {
  if (data.pseudo_observations) throw InvalidArgument("dataset is already rank-transformed");
  Dataset out;
  out.labels = data.labels;
  for (const auto& col : data.columns) out.columns.push_back(uniform_ranks(col));
  out.pseudo_observations = true;
  return out;
}

/// Marks a dataset whose values already lie in [0,1] as pseudo-observations.
inline Dataset as_pseudo_observations(Dataset data) {
  for (const auto& col : data.columns)
    for (double x : col)
      if (!(x >= 0.0 && x <= 1.0)) throw DomainError("value outside [0,1]; rank-transform the data first");
  data.pseudo_observations = true;
  return data;
}

inline void write_csv(std::ostream& os, const std::vector<std::string>& labels, const Columns& columns) {
  for (std::size_t j = 0; j < labels.size(); ++j) os << (j ? "," : "") << labels[j];
  os << '\n';
  const std::size_t n = columns.empty() ? 0 : columns[0].size();
  char buf[32];
  for (std::size_t t = 0; t < n; ++t) {
    for (std::size_t j = 0; j < columns.size(); ++j) {
      std::snprintf(buf, sizeof buf, "%.17g", columns[j][t]);
      os << (j ? "," : "") << buf;
    }
    os << '\n';
  }
}

/// Draws from a Gaussian copula with the given correlation matrix and
/// returns the uniform coordinates Phi(z).
inline Columns gaussian_copula_sample(const Eigen::MatrixXd& correlation, std::size_t count,
                                      std::uint64_t seed) {
  const auto d = static_cast<std::size_t>(correlation.rows());
  Eigen::LLT<Eigen::MatrixXd> llt(correlation);
  if (llt.info() != Eigen::Success) throw InvalidArgument("correlation matrix is not positive definite");
  const Eigen::MatrixXd lower = llt.matrixL();
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  Columns out(d, std::vector<double>(count));
  Eigen::VectorXd z(static_cast<Eigen::Index>(d));
  for (std::size_t t = 0; t < count; ++t) {
    for (auto& zi : z) zi = normal(rng);
    const Eigen::VectorXd x = lower * z;
    for (std::size_t j = 0; j < d; ++j)
      out[j][t] = 0.5 * std::erfc(-x(static_cast<Eigen::Index>(j)) / std::sqrt(2.0));
  }
  return out;
}

/// Four correlated columns T, M, B, S standing in for the stock-index data.
inline Dataset synthetic_dataset(std::size_t count, std::uint64_t seed) {
  Eigen::MatrixXd r(4, 4);
  r << 1.0, 0.5, 0.3, 0.2,
       0.5, 1.0, 0.4, 0.3,
       0.3, 0.4, 1.0, 0.5,
       0.2, 0.3, 0.5, 1.0;
  Dataset ds;
  ds.labels = {"T", "M", "B", "S"};
  ds.columns = gaussian_copula_sample(r, count, seed);
  return ds;
}

}  // namespace minvine

#endif  // MINVINE_DATASET_HPP
