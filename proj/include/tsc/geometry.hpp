#pragma once

#include <algorithm>
#include <cmath>
#include <numbers>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "tsc/error.hpp"

namespace tsc {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Labels = std::vector<int>;

/// A set of N points in R^m stored column-wise, optionally with ground-truth
/// labels. Label 0 is reserved for outliers; subspace labels start at 1.
class PointSet {
 public:
  PointSet() = default;

  explicit PointSet(Matrix data, std::optional<Labels> labels = std::nullopt)
      : data_(std::move(data)), labels_(std::move(labels)) {
    if (data_.rows() < 1 || data_.cols() < 1)
      throw Error(ErrorKind::InvalidDims, "point set needs m >= 1 and N >= 1");
    if (labels_) {
      if (static_cast<Eigen::Index>(labels_->size()) != data_.cols())
        throw Error(ErrorKind::LengthMismatch, "label count differs from point count");
      for (int l : *labels_)
        if (l < 0) throw Error(ErrorKind::InvalidDims, "labels must be nonnegative");
    }
  }

  const Matrix& data() const noexcept { return data_; }
  const std::optional<Labels>& labels() const noexcept { return labels_; }
  Eigen::Index dim() const noexcept { return data_.rows(); }
  Eigen::Index size() const noexcept { return data_.cols(); }
  auto point(Eigen::Index j) const { return data_.col(j); }

 private:
  Matrix data_;
  std::optional<Labels> labels_;
};

inline constexpr double kZeroNormTol = 1e-14;
inline constexpr double kOrthonormalTol = 1e-8;

/// Max-entry deviation of B^T B from the identity.
inline double orthonormality_defect(const Matrix& basis) {
  const Eigen::Index d = basis.cols();
  return (basis.transpose() * basis - Matrix::Identity(d, d)).cwiseAbs().maxCoeff();
}

/// m x d matrix whose columns span a d-dimensional subspace of R^m.
class SubspaceBasis {
 public:
  SubspaceBasis() = default;

  /// Takes any full-rank basis; use orthonormal() to also check U^T U = I.
  explicit SubspaceBasis(Matrix basis) : basis_(std::move(basis)) {
    if (basis_.cols() < 1 || basis_.cols() > basis_.rows())
      throw Error(ErrorKind::InvalidDims, "subspace basis needs 1 <= d <= m");
  }

  static SubspaceBasis orthonormal(Matrix basis, double tol = kOrthonormalTol) {
    SubspaceBasis b(std::move(basis));
    if (!b.is_orthonormal(tol))
      throw Error(ErrorKind::NonOrthonormalBasis,
                  "max |U^T U - I| = " + std::to_string(orthonormality_defect(b.basis_)));
    return b;
  }

  bool is_orthonormal(double tol = kOrthonormalTol) const {
    return orthonormality_defect(basis_) <= tol;
  }

  const Matrix& matrix() const noexcept { return basis_; }
  Eigen::Index ambient_dim() const noexcept { return basis_.rows(); }
  Eigen::Index dim() const noexcept { return basis_.cols(); }

 private:
  Matrix basis_;
};

struct PrincipalAngleReport {
  Vector cosines;  // descending, length min(d_k, d_l)
  double aff = 0.0;
  double aff_inf = 0.0;
};

/// Scales every column to unit Euclidean norm.
inline PointSet normalize_columns(const PointSet& points) {
  Matrix out = points.data();
  for (Eigen::Index j = 0; j < out.cols(); ++j) {
    const double norm = out.col(j).norm();
    if (!(norm > kZeroNormTol))
      throw Error(ErrorKind::ZeroVector, "column " + std::to_string(j) + " has zero norm");
    out.col(j) /= norm;
  }
  return PointSet(std::move(out), points.labels());
}

/// arccos(|<x,y>|): the angle between the lines spanned by x and y.
template <typename A, typename B>
double spherical_pseudo_distance(const Eigen::MatrixBase<A>& x, const Eigen::MatrixBase<B>& y) {
  const double c = std::clamp(std::abs(x.dot(y)), 0.0, 1.0);
  return std::acos(c);
}

/// Cosines of the principal angles between span(Uk) and span(Ul), together
/// with the normalized Frobenius affinity and the spectral affinity.
inline PrincipalAngleReport principal_angles(const SubspaceBasis& uk, const SubspaceBasis& ul) {
  if (uk.ambient_dim() != ul.ambient_dim())
    throw Error(ErrorKind::InvalidDims, "bases live in different ambient spaces");
  for (const auto* b : {&uk, &ul})
    if (!b->is_orthonormal())
      throw Error(ErrorKind::NonOrthonormalBasis,
                  "max |U^T U - I| = " + std::to_string(orthonormality_defect(b->matrix())));

  const Matrix product = uk.matrix().transpose() * ul.matrix();
  Eigen::JacobiSVD<Matrix> svd(product);
  PrincipalAngleReport report;
  report.cosines = svd.singularValues().cwiseMax(0.0).cwiseMin(1.0);
  const auto p = static_cast<double>(report.cosines.size());
  report.aff_inf = report.cosines.size() > 0 ? report.cosines(0) : 0.0;
  report.aff = report.cosines.norm() / std::sqrt(p);
  return report;
}

inline double affinity(const SubspaceBasis& uk, const SubspaceBasis& ul) {
  return principal_angles(uk, ul).aff;
}

}  // namespace tsc
