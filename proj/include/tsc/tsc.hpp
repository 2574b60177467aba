#pragma once

// Thresholding-based subspace clustering: build a q-nearest-neighbor graph
// under the spherical pseudo-distance arccos|<x_i, x_j>|, then run normalized
// spectral clustering on it.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <numeric>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include <Eigen/Dense>

#include "tsc/error.hpp"
#include "tsc/geometry.hpp"
#include "tsc/numerics.hpp"

namespace tsc {

enum class WeightVariant { ExpArccos, LeastSquares };

struct KnownSubspaces {
  int count = 1;
};

struct EstimateSubspaces {
  std::optional<int> max_count;  // caps the eigengap search; nullopt = N-1
};

using SubspaceCountPolicy = std::variant<KnownSubspaces, EstimateSubspaces>;

struct TscConfig {
  int q = 3;
  WeightVariant weight_variant = WeightVariant::ExpArccos;
  SubspaceCountPolicy num_subspaces = EstimateSubspaces{};
  std::uint64_t seed = 0;
  int kmeans_restarts = 10;
  int kmeans_max_iter = 100;
  // Divide inner products by the point norms. Switching this off uses raw
  // |<x_j, x_i>| (clamped to 1 inside arccos), which only makes sense for
  // inputs that are already unit norm.
  bool correlation_normalize = true;
};

using NeighborLists = std::vector<std::vector<int>>;

struct NeighborGraph {
  NeighborLists neighbor_sets;
  Matrix weights;    // Z, column j supported on neighbor_sets[j]
  Matrix adjacency;  // A = Z + Z^T
};

struct ClusterResult {
  Labels labels;  // 1-based
  int L_hat = 0;
  Vector laplacian_eigenvalues;  // ascending
  std::optional<int> eigengap_index;
  NeighborGraph graph;
};

struct EigengapEstimate {
  int L_hat = 0;
  int gap_index = 0;  // 1-based i maximizing lambda_{i+1} - lambda_i
};

namespace detail {

/// Columns scaled to unit norm (or returned as-is when normalization is off).
inline Matrix working_points(const PointSet& points, bool normalize) {
  if (!normalize) return points.data();
  return normalize_columns(points).data();
}

/// |<x_i, x_j>| for all pairs; exactly symmetric.
inline Matrix abs_gram(const Matrix& x) {
  const Eigen::Index n = x.cols();
  Matrix g = Matrix::Zero(n, n);
  g.selfadjointView<Eigen::Lower>().rankUpdate(x.transpose());
  g.triangularView<Eigen::StrictlyUpper>() = g.transpose();
  return g.cwiseAbs();
}

inline NeighborLists neighbors_from_correlations(const Matrix& corr, int q) {
  const auto n = static_cast<int>(corr.cols());
  if (q < 1) throw Error(ErrorKind::InvalidDims, "q must be >= 1");
  if (q > n - 1)
    throw Error(ErrorKind::QTooLarge,
                "q = " + std::to_string(q) + " exceeds N - 1 = " + std::to_string(n - 1));
  NeighborLists out(n);
  std::vector<int> cand;
  cand.reserve(n);
  for (int j = 0; j < n; ++j) {
    cand.clear();
    for (int i = 0; i < n; ++i)
      if (i != j) cand.push_back(i);
    auto closer = [&](int a, int b) {
      const double ca = corr(a, j), cb = corr(b, j);
      return ca > cb || (ca == cb && a < b);
    };
    std::partial_sort(cand.begin(), cand.begin() + q, cand.end(), closer);
    out[j].assign(cand.begin(), cand.begin() + q);
  }
  return out;
}

inline double exp_arccos_weight(double abs_corr) {
  return std::exp(-2.0 * std::acos(std::clamp(abs_corr, 0.0, 1.0)));
}

inline Matrix weights_from(const Matrix& x, const Matrix& corr, const NeighborLists& nbrs,
                           WeightVariant variant) {
  const Eigen::Index n = x.cols();
  if (static_cast<Eigen::Index>(nbrs.size()) != n)
    throw Error(ErrorKind::LengthMismatch, "one neighbor list per point required");
  Matrix z = Matrix::Zero(n, n);
  for (Eigen::Index j = 0; j < n; ++j) {
    const auto& s = nbrs[j];
    for (int i : s)
      if (i < 0 || i >= n || i == j)
        throw Error(ErrorKind::InvalidDims, "invalid neighbor index in list " + std::to_string(j));
    if (variant == WeightVariant::ExpArccos) {
      for (int i : s) z(i, j) = exp_arccos_weight(corr(i, j));
    } else {
      Matrix sub(x.rows(), static_cast<Eigen::Index>(s.size()));
      for (std::size_t k = 0; k < s.size(); ++k) sub.col(static_cast<Eigen::Index>(k)) = x.col(s[k]);
      const Vector w = least_squares(sub, x.col(j));
      for (std::size_t k = 0; k < s.size(); ++k) z(s[k], j) = std::abs(w(static_cast<Eigen::Index>(k)));
    }
  }
  return z;
}

}  // namespace detail

/// Matrix of |<x_i, x_j>| / (||x_i|| ||x_j||).
inline Matrix abs_correlations(const PointSet& points) {
  return detail::abs_gram(detail::working_points(points, true));
}

/// For each point, the q other points of largest absolute correlation, in
/// descending order; equal correlations go to the lower index.
inline NeighborLists select_neighbors(const PointSet& points, int q) {
  if (q > points.size() - 1)
    throw Error(ErrorKind::QTooLarge, "q = " + std::to_string(q) + " exceeds N - 1");
  return detail::neighbors_from_correlations(abs_correlations(points), q);
}

/// Weight matrix Z. ExpArccos: exp(-2 arccos(corr)). LeastSquares: absolute
/// minimum-norm coefficients of x_j in terms of its neighbors (after
/// normalizing every point).
inline Matrix compute_weights(const PointSet& points, const NeighborLists& neighbors, WeightVariant variant) {
  const Matrix x = detail::working_points(points, true);
  const Matrix corr = variant == WeightVariant::ExpArccos ? detail::abs_gram(x) : Matrix();
  return detail::weights_from(x, corr, neighbors, variant);
}

/// A = Z + Z^T.
inline Matrix assemble_adjacency(const Matrix& z) {
  if (z.rows() != z.cols()) throw Error(ErrorKind::InvalidDims, "Z must be square");
  return z + z.transpose();
}

/// I - D^{-1/2} A D^{-1/2}, written as D^{-1/2} (D - A) D^{-1/2} with
/// 0^{-1/2} := 0. An isolated node therefore gets an all-zero row and column
/// and contributes an exact zero eigenvalue.
inline Matrix normalized_laplacian(const Matrix& a) {
  if (a.rows() != a.cols()) throw Error(ErrorKind::InvalidDims, "adjacency must be square");
  const Eigen::Index n = a.rows();
  const Vector deg = a.rowwise().sum();
  Vector inv_sqrt(n);
  for (Eigen::Index i = 0; i < n; ++i) inv_sqrt(i) = deg(i) > kZeroNormTol ? 1.0 / std::sqrt(deg(i)) : 0.0;
  Matrix lap = -(inv_sqrt.asDiagonal() * a * inv_sqrt.asDiagonal());
  for (Eigen::Index i = 0; i < n; ++i) lap(i, i) = deg(i) > kZeroNormTol ? 1.0 + lap(i, i) : 0.0;
  // keep the result exactly symmetric
  lap.triangularView<Eigen::StrictlyUpper>() = lap.transpose();
  return lap;
}

/// L_hat = argmax_{i in [1, min(N-1, max_L)]} (lambda_{i+1} - lambda_i),
/// smallest i on ties.
inline EigengapEstimate estimate_L_eigengap(const Vector& eigenvalues, std::optional<int> max_L = std::nullopt) {
  const auto n = static_cast<int>(eigenvalues.size());
  if (n < 2) throw Error(ErrorKind::TooFewPoints, "eigengap needs at least 2 eigenvalues");
  int upper = n - 1;
  if (max_L) {
    if (*max_L < 1) throw Error(ErrorKind::Config, "max_L must be >= 1");
    upper = std::min(upper, *max_L);
  }
  int best = 1;
  double best_gap = eigenvalues(1) - eigenvalues(0);
  for (int i = 2; i <= upper; ++i) {
    const double gap = eigenvalues(i) - eigenvalues(i - 1);
    if (gap > best_gap) {
      best_gap = gap;
      best = i;
    }
  }
  return {best, best};
}

/// Rows of the first k eigenvectors, each scaled to unit norm, clustered with
/// k-means.
inline Labels spectral_cluster(const SpectralDecomposition& spectrum, int k, std::uint64_t seed,
                               KMeansOptions opts = {}) {
  const Eigen::Index n = spectrum.eigenvalues.size();
  if (k < 1 || k > n)
    throw Error(ErrorKind::InvalidK, "k = " + std::to_string(k) + " outside [1, " + std::to_string(n) + "]");
  Matrix embed = spectrum.eigenvectors.leftCols(k);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double norm = embed.row(i).norm();
    if (norm > kZeroNormTol)
      embed.row(i) /= norm;
    else
      embed.row(i).setZero();
  }
  return kmeans(embed, k, seed, opts).labels;
}

inline Labels spectral_cluster(const Matrix& laplacian, int k, std::uint64_t seed, KMeansOptions opts = {}) {
  return spectral_cluster(sym_eig(laplacian), k, seed, opts);
}

/// Builds S_j, Z and A for the given points.
inline NeighborGraph build_graph(const PointSet& points, int q, WeightVariant variant,
                                 bool correlation_normalize = true) {
  const Matrix x = detail::working_points(points, correlation_normalize);
  const Matrix corr = detail::abs_gram(x);
  NeighborGraph g;
  g.neighbor_sets = detail::neighbors_from_correlations(corr, q);
  g.weights = detail::weights_from(x, corr, g.neighbor_sets, variant);
  g.adjacency = assemble_adjacency(g.weights);
  return g;
}

inline ClusterResult run_tsc(const PointSet& points, const TscConfig& config) {
  if (points.size() < 2) throw Error(ErrorKind::TooFewPoints, "TSC needs N >= 2");
  if (config.q < 1) throw Error(ErrorKind::Config, "q must be >= 1");
  if (const auto* known = std::get_if<KnownSubspaces>(&config.num_subspaces); known && known->count < 1)
    throw Error(ErrorKind::Config, "number of subspaces must be >= 1");

  ClusterResult res;
  res.graph = build_graph(points, config.q, config.weight_variant, config.correlation_normalize);
  const SpectralDecomposition spectrum = sym_eig(normalized_laplacian(res.graph.adjacency));
  res.laplacian_eigenvalues = spectrum.eigenvalues;

  if (const auto* known = std::get_if<KnownSubspaces>(&config.num_subspaces)) {
    res.L_hat = known->count;
  } else {
    const auto est = estimate_L_eigengap(spectrum.eigenvalues, std::get<EstimateSubspaces>(config.num_subspaces).max_count);
    res.L_hat = est.L_hat;
    res.eigengap_index = est.gap_index;
  }
  res.labels = spectral_cluster(spectrum, res.L_hat, config.seed,
                                {config.kmeans_restarts, config.kmeans_max_iter});
  return res;
}

/// Neighbor count rule: max(3, ceil(n/20)), doubled when L is estimated.
inline int default_q(int points_per_cluster, bool L_known) {
  if (points_per_cluster < 1) throw Error(ErrorKind::InvalidDims, "n must be >= 1");
  const int base = std::max(3, (points_per_cluster + 19) / 20);
  return L_known ? base : 2 * base;
}

}  // namespace tsc
