#pragma once

// Seeded generators for synthetic union-of-subspaces data, plus the density
// of |<a_i, a_j>| for a_i, a_j independent and uniform on the unit sphere of R^d.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <numbers>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "tsc/error.hpp"
#include "tsc/geometry.hpp"
#include "tsc/rng.hpp"

namespace tsc {

using IndexSets = std::vector<std::vector<int>>;

struct GroundTruth {
  PointSet points;  // label 0 marks outliers
  std::vector<SubspaceBasis> bases;
  std::optional<Matrix> clean_points;
  std::vector<bool> outlier_mask;
  std::optional<IndexSets> erased_sets;
};

inline Matrix gaussian_matrix(Eigen::Index rows, Eigen::Index cols, Rng& rng) {
  NormalSampler normal;
  Matrix g(rows, cols);
  for (Eigen::Index j = 0; j < cols; ++j)
    for (Eigen::Index i = 0; i < rows; ++i) g(i, j) = normal(rng);
  return g;
}

namespace detail {

/// Q factor of a thin QR with R's diagonal made positive; for a Gaussian input
/// the result is Haar distributed on the Stiefel manifold.
inline Matrix positive_qr(const Matrix& g) {
  Eigen::HouseholderQR<Matrix> qr(g);
  Matrix q = qr.householderQ() * Matrix::Identity(g.rows(), g.cols());
  const Matrix& r = qr.matrixQR();
  for (Eigen::Index k = 0; k < g.cols(); ++k)
    if (r(k, k) < 0.0) q.col(k) = -q.col(k);
  return q;
}

inline void check_dims(bool ok, const std::string& what) {
  if (!ok) throw Error(ErrorKind::InvalidDims, what);
}

}  // namespace detail

/// Uniformly random m x d orthonormal basis.
inline SubspaceBasis haar_basis(int m, int d, std::uint64_t seed) {
  detail::check_dims(d >= 1 && d <= m, "haar_basis needs 1 <= d <= m");
  Rng rng(seed);
  return SubspaceBasis(detail::positive_qr(gaussian_matrix(m, d, rng)));
}

/// Unit vectors of R^d, uniform on the sphere, one per column.
inline Matrix sphere_coefficients(int d, int n, Rng& rng) {
  Matrix a = gaussian_matrix(d, n, rng);
  for (Eigen::Index j = 0; j < a.cols(); ++j) a.col(j).normalize();
  return a;
}

/// x_j = U a_j with a_j uniform on the unit sphere of R^d.
inline Matrix sample_subspace_points(const SubspaceBasis& u, int n, std::uint64_t seed) {
  detail::check_dims(n >= 1, "sample_subspace_points needs n >= 1");
  Rng rng(seed);
  return u.matrix() * sphere_coefficients(static_cast<int>(u.dim()), n, rng);
}

/// Two d-dimensional subspaces taken from 2d - t orthonormal vectors: U1 gets
/// the first d, U2 the last d, so they share exactly t directions.
inline std::pair<SubspaceBasis, SubspaceBasis> intersecting_pair(int m, int d, int t, std::uint64_t seed) {
  detail::check_dims(d >= 1 && t >= 0 && t <= d && 2 * d - t <= m, "intersecting_pair needs 0 <= t <= d, 2d - t <= m");
  const Matrix all = haar_basis(m, 2 * d - t, seed).matrix();
  return {SubspaceBasis(all.leftCols(d)), SubspaceBasis(all.rightCols(d))};
}

/// L subspaces of dimension d sharing one common d/3-dimensional subspace;
/// each keeps 2d/3 private directions drawn uniformly from the orthogonal
/// complement of the shared part. Basis layout: [private | shared].
inline std::vector<SubspaceBasis> shared_intersection_ensemble(int m, int L, int d, std::uint64_t seed) {
  detail::check_dims(d >= 3 && d % 3 == 0 && d <= m && L >= 1, "shared_intersection_ensemble needs d divisible by 3, d <= m");
  const int shared_dim = d / 3;
  const int own_dim = d - shared_dim;
  const Matrix shared = haar_basis(m, shared_dim, derive_seed(seed, 0)).matrix();
  const Matrix proj = Matrix::Identity(m, m) - shared * shared.transpose();
  std::vector<SubspaceBasis> out;
  out.reserve(L);
  for (int l = 0; l < L; ++l) {
    Rng rng(derive_seed(seed, static_cast<std::uint64_t>(l) + 1));
    // project twice; a single pass leaves ~1e-16 leakage along `shared`
    const Matrix g = proj * (proj * gaussian_matrix(m, own_dim, rng));
    Matrix basis(m, d);
    basis << detail::positive_qr(g), shared;
    out.emplace_back(std::move(basis));
  }
  return out;
}

enum class CorruptionOrder { NoiseThenErasure, ErasureThenNoise };

struct CorruptedPoints {
  Matrix points;
  IndexSets erased;  // sorted indices per column
};

/// Adds N(0, (sigma2/m) I) noise to every column and zeroes s coordinates per
/// column, chosen uniformly without replacement.
inline CorruptedPoints corrupt(const Matrix& points, double sigma2, int s, std::uint64_t seed,
                               CorruptionOrder order = CorruptionOrder::NoiseThenErasure) {
  const auto m = static_cast<int>(points.rows());
  detail::check_dims(sigma2 >= 0.0 && std::isfinite(sigma2), "sigma2 must be >= 0");
  detail::check_dims(s >= 0 && s < m, "erasure count must satisfy 0 <= s < m");
  CorruptedPoints out{points, IndexSets(points.cols())};
  Rng noise_rng(derive_seed(seed, 0));
  Rng erase_rng(derive_seed(seed, 1));

  auto add_noise = [&] {
    if (sigma2 == 0.0) return;
    const double scale = std::sqrt(sigma2 / m);
    out.points += scale * gaussian_matrix(points.rows(), points.cols(), noise_rng);
  };
  auto erase = [&] {
    if (s == 0) return;
    std::vector<int> idx(m);
    for (Eigen::Index j = 0; j < points.cols(); ++j) {
      std::iota(idx.begin(), idx.end(), 0);
      // partial Fisher-Yates
      for (int k = 0; k < s; ++k) {
        const auto r = k + static_cast<int>(uniform_index(erase_rng, static_cast<std::uint64_t>(m - k)));
        std::swap(idx[k], idx[r]);
      }
      std::vector<int> chosen(idx.begin(), idx.begin() + s);
      std::sort(chosen.begin(), chosen.end());
      for (int i : chosen) out.points(i, j) = 0.0;
      out.erased[j] = std::move(chosen);
    }
  };

  if (order == CorruptionOrder::NoiseThenErasure) {
    add_noise();
    erase();
  } else {
    erase();
    add_noise();
  }
  return out;
}

enum class OutlierMode { Sphere, Gaussian };

/// Sphere: uniform on the unit sphere of R^m. Gaussian: N(0, I/m).
inline Matrix sample_outliers(int m, int count, OutlierMode mode, std::uint64_t seed) {
  detail::check_dims(m >= 1 && count >= 0, "sample_outliers needs m >= 1, count >= 0");
  Rng rng(seed);
  if (count == 0) return Matrix(m, 0);
  Matrix x = gaussian_matrix(m, count, rng);
  if (mode == OutlierMode::Sphere) {
    for (Eigen::Index j = 0; j < x.cols(); ++j) x.col(j).normalize();
  } else {
    x /= std::sqrt(static_cast<double>(m));
  }
  return x;
}

// ---------------------------------------------------------------------------
// Density of z = |<a, b>| for a, b independent uniform on the unit sphere of R^d:
//   f(z) = (2/sqrt(pi)) Gamma(d/2) / Gamma((d-1)/2) (1 - z^2)^((d-3)/2),  z in [0,1].

inline double inner_product_abs_pdf_constant(int d) {
  detail::check_dims(d >= 2, "inner-product density needs d >= 2");
  return 2.0 / std::sqrt(std::numbers::pi) * std::exp(std::lgamma(0.5 * d) - std::lgamma(0.5 * (d - 1)));
}

inline double inner_product_abs_pdf(int d, double z) {
  const double c = inner_product_abs_pdf_constant(d);
  detail::check_dims(z >= 0.0 && z <= 1.0, "z must lie in [0, 1]");
  if (d == 3) return c;
  return c * std::pow(1.0 - z * z, 0.5 * (d - 3));
}

namespace detail {

inline double simpson_step(const std::function<double(double)>& f, double a, double b, double fa, double fm,
                           double fb, double whole, double tol, int depth) {
  const double m = 0.5 * (a + b);
  const double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
  const double flm = f(lm), frm = f(rm);
  const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
  const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
  const double delta = left + right - whole;
  if (depth <= 0 || std::abs(delta) <= 15.0 * tol) return left + right + delta / 15.0;
  return simpson_step(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1) +
         simpson_step(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1);
}

}  // namespace detail

/// Adaptive Simpson quadrature of f over [a, b].
inline double adaptive_simpson(const std::function<double(double)>& f, double a, double b, double tol = 1e-13,
                               int max_depth = 50) {
  if (a == b) return 0.0;
  const double fa = f(a), fb = f(b), fm = f(0.5 * (a + b));
  const double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
  return detail::simpson_step(f, a, b, fa, fm, fb, whole, tol, max_depth);
}

/// P(|<a, b>| <= z). Integrates in the angle theta = asin(z), where the
/// integrand C cos^(d-2)(theta) is smooth even for d = 2.
inline double inner_product_abs_cdf(int d, double z) {
  const double c = inner_product_abs_pdf_constant(d);
  detail::check_dims(z >= 0.0 && z <= 1.0, "z must lie in [0, 1]");
  const double upper = std::asin(z);
  const double p = d - 2.0;
  // split at fixed nodes so that the adaptive rule starts from a fine grid
  constexpr int pieces = 8;
  double total = 0.0;
  for (int k = 0; k < pieces; ++k) {
    const double a = upper * k / pieces, b = upper * (k + 1) / pieces;
    total += adaptive_simpson([p](double t) { return std::pow(std::cos(t), p); }, a, b, 1e-14);
  }
  return std::min(1.0, c * total);
}

/// CDF of a single sphere coordinate <u, e> for u uniform on the unit sphere
/// of R^d, on [-1, 1].
inline double sphere_coordinate_cdf(int d, double z) {
  const double a = std::clamp(std::abs(z), 0.0, 1.0);
  const double half = 0.5 * inner_product_abs_cdf(d, a);
  return z >= 0.0 ? 0.5 + half : 0.5 - half;
}

// ---------------------------------------------------------------------------
// Composite scenarios

struct UnionOptions {
  double sigma2 = 0.0;           // additive noise variance (per point)
  int erasures = 0;              // zeroed coordinates per inlier
  CorruptionOrder order = CorruptionOrder::NoiseThenErasure;
  int outliers = 0;
  OutlierMode outlier_mode = OutlierMode::Sphere;
  bool scale_noisy_inliers = false;  // multiply inliers by 1/sqrt(1 + sigma2)
};

/// Draws n_per[l] unit points from each subspace, corrupts them, and appends
/// outliers. Labels: l + 1 for subspace l, 0 for outliers.
inline GroundTruth union_of_subspaces(const std::vector<SubspaceBasis>& bases, const std::vector<int>& n_per,
                                      std::uint64_t seed, const UnionOptions& opts = {}) {
  detail::check_dims(!bases.empty() && bases.size() == n_per.size(), "one point count per subspace required");
  const Eigen::Index m = bases.front().ambient_dim();
  for (const auto& b : bases) detail::check_dims(b.ambient_dim() == m, "bases must share the ambient dimension");
  const int inliers = std::accumulate(n_per.begin(), n_per.end(), 0);
  detail::check_dims(inliers >= 1 && opts.outliers >= 0, "need at least one inlier");

  Matrix clean(m, inliers);
  Labels labels;
  labels.reserve(inliers + opts.outliers);
  Eigen::Index col = 0;
  for (std::size_t l = 0; l < bases.size(); ++l) {
    clean.middleCols(col, n_per[l]) = sample_subspace_points(bases[l], n_per[l], derive_seed(seed, 100 + l));
    labels.insert(labels.end(), n_per[l], static_cast<int>(l) + 1);
    col += n_per[l];
  }

  CorruptedPoints corrupted = corrupt(clean, opts.sigma2, opts.erasures, derive_seed(seed, 1), opts.order);
  if (opts.scale_noisy_inliers) corrupted.points /= std::sqrt(1.0 + opts.sigma2);

  Matrix all(m, inliers + opts.outliers);
  all.leftCols(inliers) = corrupted.points;
  if (opts.outliers > 0)
    all.rightCols(opts.outliers) =
        sample_outliers(static_cast<int>(m), opts.outliers, opts.outlier_mode, derive_seed(seed, 2));
  labels.insert(labels.end(), opts.outliers, 0);

  GroundTruth gt;
  gt.points = PointSet(std::move(all), std::move(labels));
  gt.bases = bases;
  gt.clean_points = std::move(clean);
  gt.outlier_mask.assign(inliers + opts.outliers, false);
  std::fill(gt.outlier_mask.begin() + inliers, gt.outlier_mask.end(), true);
  if (opts.erasures > 0) {
    corrupted.erased.resize(inliers + opts.outliers);
    gt.erased_sets = std::move(corrupted.erased);
  }
  return gt;
}

/// L independent Haar subspaces of dimension d in R^m.
inline std::vector<SubspaceBasis> random_subspaces(int m, int L, int d, std::uint64_t seed) {
  std::vector<SubspaceBasis> out;
  out.reserve(L);
  for (int l = 0; l < L; ++l) out.push_back(haar_basis(m, d, derive_seed(seed, static_cast<std::uint64_t>(l))));
  return out;
}

/// L mutually orthogonal d-dimensional subspaces (requires L d <= m).
inline std::vector<SubspaceBasis> orthogonal_subspaces(int m, int L, int d, std::uint64_t seed) {
  detail::check_dims(L >= 1 && d >= 1 && L * d <= m, "orthogonal_subspaces needs L d <= m");
  const Matrix all = haar_basis(m, L * d, seed).matrix();
  std::vector<SubspaceBasis> out;
  for (int l = 0; l < L; ++l) out.emplace_back(all.middleCols(static_cast<Eigen::Index>(l) * d, d));
  return out;
}

}  // namespace tsc
