#pragma once

// Plain-text CSV formats.
//
//   points:   header x1,...,xm[,label]; one point per row. Empty cells and
//             "nan" mark unobserved entries.
//   labels:   index,label          (index 0-based, label 1-based)
//   edges:    i,j,weight           (upper triangle of A, nonzero entries)
//   outliers: index,score,threshold,is_outlier
//
// Every floating-point value is written with 17 significant digits.

#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include "tsc/error.hpp"
#include "tsc/geometry.hpp"
#include "tsc/outliers.hpp"

namespace tsc {

inline std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

namespace detail {

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  std::istringstream ss(line);
  while (std::getline(ss, cell, ',')) {
    while (!cell.empty() && (cell.back() == '\r' || cell.back() == ' ')) cell.pop_back();
    while (!cell.empty() && cell.front() == ' ') cell.erase(cell.begin());
    cells.push_back(cell);
  }
  if (!line.empty() && line.back() == ',') cells.emplace_back();
  return cells;
}

inline double parse_cell(const std::string& cell, std::size_t row) {
  if (cell.empty() || cell == "nan" || cell == "NaN" || cell == "NA") return std::numeric_limits<double>::quiet_NaN();
  try {
    std::size_t used = 0;
    const double v = std::stod(cell, &used);
    if (used != cell.size()) throw std::invalid_argument(cell);
    return v;
  } catch (const std::exception&) {
    throw Error(ErrorKind::Io, "row " + std::to_string(row) + ": cannot parse '" + cell + "'");
  }
}

inline std::ofstream open_out(const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorKind::Io, "cannot write " + path);
  return out;
}

}  // namespace detail

/// Number of unobserved (NaN) entries replaced by zero.
inline Eigen::Index zero_fill_missing(Matrix& data) {
  Eigen::Index filled = 0;
  for (Eigen::Index j = 0; j < data.cols(); ++j)
    for (Eigen::Index i = 0; i < data.rows(); ++i)
      if (std::isnan(data(i, j))) {
        data(i, j) = 0.0;
        ++filled;
      }
  return filled;
}

/// Parses the point CSV. Unobserved entries come back as NaN; call
/// zero_fill_missing before clustering.
inline PointSet read_points_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw Error(ErrorKind::Io, "empty point file");
  const auto header = detail::split_csv_line(line);
  const bool has_label = !header.empty() && header.back() == "label";
  const std::size_t m = header.size() - (has_label ? 1 : 0);
  if (m < 1) throw Error(ErrorKind::Io, "header has no coordinate columns");

  std::vector<double> values;
  Labels labels;
  std::size_t rows = 0;
  while (std::getline(in, line)) {
    if (line.empty() || line == "\r") continue;
    const auto cells = detail::split_csv_line(line);
    if (cells.size() != header.size())
      throw Error(ErrorKind::Io, "row " + std::to_string(rows + 1) + " has " + std::to_string(cells.size()) +
                                     " cells, expected " + std::to_string(header.size()));
    for (std::size_t i = 0; i < m; ++i) values.push_back(detail::parse_cell(cells[i], rows + 1));
    if (has_label) {
      const double l = detail::parse_cell(cells[m], rows + 1);
      if (!(l >= 0.0) || l != std::floor(l)) throw Error(ErrorKind::Io, "bad label in row " + std::to_string(rows + 1));
      labels.push_back(static_cast<int>(l));
    }
    ++rows;
  }
  if (rows == 0) throw Error(ErrorKind::Io, "point file has no rows");
  Matrix data(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(rows));
  for (std::size_t j = 0; j < rows; ++j)
    for (std::size_t i = 0; i < m; ++i) data(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = values[j * m + i];
  if (has_label) return PointSet(std::move(data), std::move(labels));
  return PointSet(std::move(data));
}

inline PointSet read_points_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::Io, "cannot open " + path);
  return read_points_csv(in);
}

inline void write_points_csv(std::ostream& out, const PointSet& points) {
  const Eigen::Index m = points.dim();
  for (Eigen::Index i = 0; i < m; ++i) out << (i ? "," : "") << 'x' << (i + 1);
  if (points.labels()) out << ",label";
  out << '\n';
  for (Eigen::Index j = 0; j < points.size(); ++j) {
    for (Eigen::Index i = 0; i < m; ++i) out << (i ? "," : "") << format_double(points.data()(i, j));
    if (points.labels()) out << ',' << (*points.labels())[j];
    out << '\n';
  }
}

inline void write_points_csv(const std::string& path, const PointSet& points) {
  auto out = detail::open_out(path);
  write_points_csv(out, points);
}

inline void write_labels_csv(std::ostream& out, const Labels& labels) {
  out << "index,label\n";
  for (std::size_t i = 0; i < labels.size(); ++i) out << i << ',' << labels[i] << '\n';
}

inline Labels read_labels_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line.rfind("index,label", 0) != 0) throw Error(ErrorKind::Io, "missing labels header");
  Labels labels;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto cells = detail::split_csv_line(line);
    if (cells.size() != 2) throw Error(ErrorKind::Io, "labels rows need 2 cells");
    labels.push_back(static_cast<int>(detail::parse_cell(cells[1], labels.size() + 1)));
  }
  return labels;
}

/// Nonzero entries of the upper triangle of a symmetric adjacency matrix.
inline void write_edges_csv(std::ostream& out, const Matrix& adjacency) {
  out << "i,j,weight\n";
  for (Eigen::Index j = 0; j < adjacency.cols(); ++j)
    for (Eigen::Index i = 0; i < j; ++i)
      if (adjacency(i, j) != 0.0) out << i << ',' << j << ',' << format_double(adjacency(i, j)) << '\n';
}

/// Rebuilds a symmetric N x N adjacency from an edge list.
inline Matrix read_edges_csv(std::istream& in, Eigen::Index n) {
  std::string line;
  if (!std::getline(in, line) || line.rfind("i,j,weight", 0) != 0) throw Error(ErrorKind::Io, "missing edges header");
  Matrix a = Matrix::Zero(n, n);
  std::size_t row = 0;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto cells = detail::split_csv_line(line);
    if (cells.size() != 3) throw Error(ErrorKind::Io, "edge rows need 3 cells");
    const auto i = static_cast<Eigen::Index>(detail::parse_cell(cells[0], ++row));
    const auto j = static_cast<Eigen::Index>(detail::parse_cell(cells[1], row));
    if (i < 0 || j < 0 || i >= n || j >= n) throw Error(ErrorKind::Io, "edge index out of range");
    a(i, j) = a(j, i) = detail::parse_cell(cells[2], row);
  }
  return a;
}

inline void write_outlier_report_csv(std::ostream& out, const OutlierReport& rep) {
  out << "index,score,threshold,is_outlier\n";
  const std::string thr = format_double(rep.threshold);
  for (std::size_t j = 0; j < rep.scores.size(); ++j)
    out << j << ',' << format_double(rep.scores[j]) << ',' << thr << ',' << (rep.flags[j] ? 1 : 0) << '\n';
}

}  // namespace tsc
