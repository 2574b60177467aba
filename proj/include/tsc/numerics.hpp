#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "tsc/error.hpp"
#include "tsc/geometry.hpp"
#include "tsc/rng.hpp"

namespace tsc {

struct SpectralDecomposition {
  Vector eigenvalues;   // ascending
  Matrix eigenvectors;  // column i pairs with eigenvalues(i)
};

template <typename Derived>
void require_finite(const Eigen::MatrixBase<Derived>& m, const char* what) {
  if (!m.allFinite()) throw Error(ErrorKind::NonFinite, std::string(what) + " contains NaN or Inf");
}

/// Eigendecomposition of a real symmetric matrix. The input is symmetrized as
/// (A + A^T)/2 before factoring.
inline SpectralDecomposition sym_eig(const Matrix& a) {
  if (a.rows() != a.cols()) throw Error(ErrorKind::InvalidDims, "sym_eig needs a square matrix");
  require_finite(a, "sym_eig input");
  const Matrix sym = 0.5 * (a + a.transpose());
  Eigen::SelfAdjointEigenSolver<Matrix> solver(sym, Eigen::ComputeEigenvectors);
  if (solver.info() != Eigen::Success)
    throw Error(ErrorKind::NonFinite, "symmetric eigensolver did not converge");
  return {solver.eigenvalues(), solver.eigenvectors()};
}

/// Eigenvalues only, ascending.
inline Vector sym_eigenvalues(const Matrix& a) {
  if (a.rows() != a.cols()) throw Error(ErrorKind::InvalidDims, "sym_eig needs a square matrix");
  require_finite(a, "sym_eig input");
  const Matrix sym = 0.5 * (a + a.transpose());
  Eigen::SelfAdjointEigenSolver<Matrix> solver(sym, Eigen::EigenvaluesOnly);
  if (solver.info() != Eigen::Success)
    throw Error(ErrorKind::NonFinite, "symmetric eigensolver did not converge");
  return solver.eigenvalues();
}

/// Singular values of a dense matrix, descending.
inline Vector singular_values(const Matrix& a) {
  require_finite(a, "svd input");
  Eigen::BDCSVD<Matrix> svd(a);
  return svd.singularValues();
}

inline constexpr double kLeastSquaresRcond = 1e-10;

/// Minimum-norm least-squares solution of B w = y. Singular values below
/// 1e-10 * sigma_max are treated as zero.
template <typename DerivedB, typename DerivedY>
Vector least_squares(const Eigen::MatrixBase<DerivedB>& b, const Eigen::MatrixBase<DerivedY>& y) {
  if (b.rows() < 1 || b.cols() < 1) throw Error(ErrorKind::InvalidDims, "least_squares needs p, q >= 1");
  if (b.rows() != y.rows()) throw Error(ErrorKind::LengthMismatch, "least_squares: rows(B) != len(y)");
  require_finite(b, "least_squares matrix");
  require_finite(y, "least_squares rhs");
  Eigen::JacobiSVD<Matrix> svd(b.derived().eval(), Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Vector& s = svd.singularValues();
  const double cutoff = s.size() > 0 ? kLeastSquaresRcond * s(0) : 0.0;
  Vector coeffs = svd.matrixU().transpose() * y;
  for (Eigen::Index i = 0; i < s.size(); ++i)
    coeffs(i) = (s(i) > cutoff && s(i) > 0.0) ? coeffs(i) / s(i) : 0.0;
  return svd.matrixV() * coeffs;
}

// ---------------------------------------------------------------------------
// k-means

struct KMeansOptions {
  int restarts = 10;
  int max_iter = 100;
};

struct KMeansResult {
  Labels labels;     // 1-based, in [1, k]
  Matrix centroids;  // k x p
  double inertia = 0.0;
  int iterations = 0;
  std::vector<double> inertia_trace;  // inertia after each assignment step
};

namespace detail {

inline double sq_dist(const Matrix& rows, Eigen::Index i, const Matrix& centroids, Eigen::Index c) {
  return (rows.row(i) - centroids.row(c)).squaredNorm();
}

/// k-means++ seeding.
inline Matrix kmeanspp_init(const Matrix& rows, int k, Rng& rng) {
  const Eigen::Index n = rows.rows();
  Matrix centroids(k, rows.cols());
  std::vector<char> chosen(n, 0);
  auto first = static_cast<Eigen::Index>(uniform_index(rng, static_cast<std::uint64_t>(n)));
  centroids.row(0) = rows.row(first);
  chosen[first] = 1;
  std::vector<double> d2(n);
  for (Eigen::Index i = 0; i < n; ++i) d2[i] = sq_dist(rows, i, centroids, 0);

  for (int c = 1; c < k; ++c) {
    double total = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) total += d2[i];
    Eigen::Index pick = -1;
    if (total > 0.0) {
      const double target = uniform01(rng) * total;
      double acc = 0.0;
      for (Eigen::Index i = 0; i < n; ++i) {
        acc += d2[i];
        if (d2[i] > 0.0 && acc > target) {
          pick = i;
          break;
        }
      }
      if (pick < 0)  // rounding at the tail
        for (Eigen::Index i = n - 1; i >= 0; --i)
          if (d2[i] > 0.0) {
            pick = i;
            break;
          }
    } else {
      // Every row coincides with a chosen centroid; take an unused row.
      std::vector<Eigen::Index> unused;
      for (Eigen::Index i = 0; i < n; ++i)
        if (!chosen[i]) unused.push_back(i);
      pick = unused[uniform_index(rng, unused.size())];
    }
    chosen[pick] = 1;
    centroids.row(c) = rows.row(pick);
    for (Eigen::Index i = 0; i < n; ++i) d2[i] = std::min(d2[i], sq_dist(rows, i, centroids, c));
  }
  return centroids;
}

inline KMeansResult lloyd(const Matrix& rows, Matrix centroids, int max_iter) {
  const Eigen::Index n = rows.rows();
  const int k = static_cast<int>(centroids.rows());
  KMeansResult res;
  std::vector<int> assign(n, -1);
  std::vector<double> dist(n, 0.0);

  auto assign_step = [&]() {
    bool changed = false;
    double inertia = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
      int best = 0;
      double best_d = sq_dist(rows, i, centroids, 0);
      for (int c = 1; c < k; ++c) {
        const double dc = sq_dist(rows, i, centroids, c);
        if (dc < best_d) {
          best_d = dc;
          best = c;
        }
      }
      if (assign[i] != best) changed = true;
      assign[i] = best;
      dist[i] = best_d;
      inertia += best_d;
    }
    return std::pair{changed, inertia};
  };

  auto [changed, inertia] = assign_step();
  res.inertia_trace.push_back(inertia);
  int iter = 0;
  while (changed && iter < max_iter) {
    ++iter;
    // update step; an empty cluster takes the row farthest from its centroid
    Matrix sums = Matrix::Zero(k, rows.cols());
    std::vector<Eigen::Index> counts(k, 0);
    for (Eigen::Index i = 0; i < n; ++i) {
      sums.row(assign[i]) += rows.row(i);
      ++counts[assign[i]];
    }
    for (int c = 0; c < k; ++c) {
      if (counts[c] > 0) {
        centroids.row(c) = sums.row(c) / static_cast<double>(counts[c]);
        continue;
      }
      Eigen::Index far = 0;
      for (Eigen::Index i = 1; i < n; ++i)
        if (dist[i] > dist[far]) far = i;
      centroids.row(c) = rows.row(far);
      dist[far] = 0.0;
    }
    std::tie(changed, inertia) = assign_step();
    res.inertia_trace.push_back(inertia);
  }

  res.labels.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) res.labels[i] = assign[i] + 1;
  res.centroids = std::move(centroids);
  res.inertia = inertia;
  res.iterations = iter;
  return res;
}

}  // namespace detail

/// Lloyd's k-means with k-means++ seeding. Restart r draws from the sub-stream
/// derive_seed(seed, r); the lowest-inertia restart wins, ties going to the
/// lowest restart index.
inline KMeansResult kmeans(const Matrix& rows, int k, std::uint64_t seed, KMeansOptions opts = {}) {
  const Eigen::Index n = rows.rows();
  if (k < 1 || k > n)
    throw Error(ErrorKind::InvalidK, "k = " + std::to_string(k) + " outside [1, " + std::to_string(n) + "]");
  require_finite(rows, "kmeans input");
  const int restarts = std::max(1, opts.restarts);

  KMeansResult best;
  best.inertia = std::numeric_limits<double>::infinity();
  for (int r = 0; r < restarts; ++r) {
    Rng rng(derive_seed(seed, static_cast<std::uint64_t>(r)));
    KMeansResult res = detail::lloyd(rows, detail::kmeanspp_init(rows, k, rng), opts.max_iter);
    if (res.inertia < best.inertia) best = std::move(res);
  }
  return best;
}

}  // namespace tsc
