#pragma once

// MNIST-style IDX files and a few preprocessing helpers for real data.
//
// images (idx3):  magic 0x00000803 | N | rows | cols | N*rows*cols ubyte pixels
// labels (idx1):  magic 0x00000801 | N | N ubyte labels
// All header integers are 32-bit big-endian. Pixels are stored row-major.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <iterator>
#include <map>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "tsc/error.hpp"
#include "tsc/geometry.hpp"
#include "tsc/numerics.hpp"
#include "tsc/rng.hpp"

namespace tsc {

inline constexpr std::uint32_t kIdxImageMagic = 0x00000803;
inline constexpr std::uint32_t kIdxLabelMagic = 0x00000801;

struct IdxDataset {
  Matrix images;  // (rows*cols) x N, pixel values in [0, 1]
  std::vector<int> digit_labels;
  int rows = 28;
  int cols = 28;
};

namespace detail {

inline std::vector<unsigned char> read_bytes(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::Io, "cannot open " + path);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline std::uint32_t read_be32(const std::vector<unsigned char>& buf, std::size_t offset, const std::string& path) {
  if (buf.size() < offset + 4) throw Error(ErrorKind::TruncatedFile, path + ": header ends early");
  return (std::uint32_t{buf[offset]} << 24) | (std::uint32_t{buf[offset + 1]} << 16) |
         (std::uint32_t{buf[offset + 2]} << 8) | std::uint32_t{buf[offset + 3]};
}

inline void write_be32(std::ofstream& out, std::uint32_t v) {
  const char bytes[4] = {static_cast<char>(v >> 24), static_cast<char>(v >> 16), static_cast<char>(v >> 8),
                         static_cast<char>(v)};
  out.write(bytes, 4);
}

}  // namespace detail

inline IdxDataset load_idx(const std::string& images_path, const std::string& labels_path) {
  const auto img = detail::read_bytes(images_path);
  const auto lab = detail::read_bytes(labels_path);

  if (detail::read_be32(img, 0, images_path) != kIdxImageMagic)
    throw Error(ErrorKind::BadMagic, images_path + " is not an idx3 ubyte image file");
  if (detail::read_be32(lab, 0, labels_path) != kIdxLabelMagic)
    throw Error(ErrorKind::BadMagic, labels_path + " is not an idx1 ubyte label file");

  const std::uint32_t n = detail::read_be32(img, 4, images_path);
  const std::uint32_t rows = detail::read_be32(img, 8, images_path);
  const std::uint32_t cols = detail::read_be32(img, 12, images_path);
  const std::uint32_t n_labels = detail::read_be32(lab, 4, labels_path);
  if (n != n_labels)
    throw Error(ErrorKind::DimMismatch,
                std::to_string(n) + " images but " + std::to_string(n_labels) + " labels");

  const std::size_t pixels = std::size_t{rows} * cols;
  if (img.size() < 16 + pixels * n) throw Error(ErrorKind::TruncatedFile, images_path + ": pixel data ends early");
  if (lab.size() < 8 + std::size_t{n}) throw Error(ErrorKind::TruncatedFile, labels_path + ": label data ends early");

  IdxDataset ds;
  ds.rows = static_cast<int>(rows);
  ds.cols = static_cast<int>(cols);
  ds.images.resize(static_cast<Eigen::Index>(pixels), n);
  for (std::uint32_t j = 0; j < n; ++j)
    for (std::size_t p = 0; p < pixels; ++p)
      ds.images(static_cast<Eigen::Index>(p), j) = img[16 + j * pixels + p] / 255.0;
  ds.digit_labels.resize(n);
  for (std::uint32_t j = 0; j < n; ++j) ds.digit_labels[j] = lab[8 + j];
  return ds;
}

/// Writes pixels as round(255 * value); the inverse of load_idx for data that
/// came from an IDX file.
inline void write_idx(const IdxDataset& ds, const std::string& images_path, const std::string& labels_path) {
  const auto n = static_cast<std::uint32_t>(ds.images.cols());
  if (ds.digit_labels.size() != n) throw Error(ErrorKind::DimMismatch, "image and label counts differ");
  if (ds.images.rows() != static_cast<Eigen::Index>(ds.rows) * ds.cols)
    throw Error(ErrorKind::DimMismatch, "image size does not match rows x cols");
  std::ofstream img(images_path, std::ios::binary);
  std::ofstream lab(labels_path, std::ios::binary);
  if (!img || !lab) throw Error(ErrorKind::Io, "cannot write idx output");
  detail::write_be32(img, kIdxImageMagic);
  detail::write_be32(img, n);
  detail::write_be32(img, static_cast<std::uint32_t>(ds.rows));
  detail::write_be32(img, static_cast<std::uint32_t>(ds.cols));
  for (std::uint32_t j = 0; j < n; ++j)
    for (Eigen::Index p = 0; p < ds.images.rows(); ++p) {
      const double v = std::clamp(ds.images(p, j), 0.0, 1.0);
      img.put(static_cast<char>(static_cast<unsigned char>(std::lround(v * 255.0))));
    }
  detail::write_be32(lab, kIdxLabelMagic);
  detail::write_be32(lab, n);
  for (int l : ds.digit_labels) lab.put(static_cast<char>(static_cast<unsigned char>(l)));
  if (!img || !lab) throw Error(ErrorKind::Io, "failed writing idx output");
}

struct SubsampleOptions {
  bool center = false;  // subtract the mean image before normalizing
};

/// n images per requested digit, drawn uniformly without replacement; labels
/// become 1..|digits| in the order digits are given. Columns are unit-normalized.
inline PointSet subsample_digits(const IdxDataset& ds, const std::vector<int>& digits, int n_per_digit,
                                 std::uint64_t seed, SubsampleOptions opts = {}) {
  if (n_per_digit < 1) throw Error(ErrorKind::InvalidDims, "n_per_digit must be >= 1");
  if (digits.empty()) throw Error(ErrorKind::InvalidDims, "no digits requested");
  std::map<int, std::vector<int>> by_digit;
  for (std::size_t j = 0; j < ds.digit_labels.size(); ++j) by_digit[ds.digit_labels[j]].push_back(static_cast<int>(j));

  Matrix data(ds.images.rows(), static_cast<Eigen::Index>(digits.size()) * n_per_digit);
  Labels labels;
  Eigen::Index col = 0;
  for (std::size_t k = 0; k < digits.size(); ++k) {
    auto pool = by_digit[digits[k]];
    if (static_cast<int>(pool.size()) < n_per_digit)
      throw Error(ErrorKind::InsufficientImages, "digit " + std::to_string(digits[k]) + " has only " +
                                                     std::to_string(pool.size()) + " images");
    Rng rng(derive_seed(seed, static_cast<std::uint64_t>(digits[k])));
    for (int i = 0; i < n_per_digit; ++i) {
      const auto r = i + static_cast<int>(uniform_index(rng, pool.size() - static_cast<std::size_t>(i)));
      std::swap(pool[i], pool[r]);
      data.col(col++) = ds.images.col(pool[i]);
      labels.push_back(static_cast<int>(k) + 1);
    }
  }
  if (opts.center) data.colwise() -= data.rowwise().mean();
  return normalize_columns(PointSet(std::move(data), std::move(labels)));
}

/// Descending singular values of the matrix whose columns are one class.
inline Vector singular_value_profile(const Matrix& points_of_one_class) {
  if (points_of_one_class.size() == 0) throw Error(ErrorKind::InvalidDims, "empty matrix");
  return singular_values(points_of_one_class);
}

/// Projects every point onto the orthogonal complement of the top-k left
/// singular vectors of the data matrix.
inline PointSet remove_top_principal_components(const PointSet& points, int k) {
  if (k < 0 || k > std::min(points.dim(), points.size()))
    throw Error(ErrorKind::InvalidDims, "k outside [0, min(m, N)]");
  if (k == 0) return points;
  require_finite(points.data(), "points");
  Eigen::BDCSVD<Matrix> svd(points.data(), Eigen::ComputeThinU);
  const Matrix top = svd.matrixU().leftCols(k);
  Matrix out = points.data() - top * (top.transpose() * points.data());
  return PointSet(std::move(out), points.labels());
}

}  // namespace tsc
