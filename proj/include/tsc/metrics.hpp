#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "tsc/error.hpp"
#include "tsc/geometry.hpp"

namespace tsc {

struct MetricReport {
  double ce = 0.0;
  int el = 0;
  double fde = 0.0;
  std::optional<double> outlier_misclassification;
};

/// Maximum-weight assignment on a rectangular benefit matrix (rows <= cols
/// not required). Returns for each row the matched column, or -1.
/// O(n^3) shortest augmenting path on the padded square cost matrix.
inline std::vector<int> hungarian_max(const Matrix& benefit) {
  const auto rows = static_cast<int>(benefit.rows());
  const auto cols = static_cast<int>(benefit.cols());
  const int n = std::max(rows, cols);
  if (n == 0) return {};
  const double top = benefit.size() > 0 ? benefit.maxCoeff() : 0.0;
  // cost[i][j] = top - benefit, padded cells cost `top` (zero benefit)
  auto cost = [&](int i, int j) {
    return (i < rows && j < cols) ? top - benefit(i, j) : top;
  };
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0), minv(n + 1);
  std::vector<int> p(n + 1, 0), way(n + 1, 0);
  std::vector<char> used(n + 1);
  for (int i = 1; i <= n; ++i) {
    p[0] = i;
    int j0 = 0;
    std::fill(minv.begin(), minv.end(), inf);
    std::fill(used.begin(), used.end(), 0);
    do {
      used[j0] = 1;
      const int i0 = p[j0];
      double delta = inf;
      int j1 = 0;
      for (int j = 1; j <= n; ++j) {
        if (used[j]) continue;
        const double cur = cost(i0 - 1, j - 1) - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (int j = 0; j <= n; ++j) {
        if (used[j]) {
          u[p[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (p[j0] != 0);
    do {
      const int j1 = way[j0];
      p[j0] = p[j1];
      j0 = j1;
    } while (j0 != 0);
  }
  std::vector<int> match(rows, -1);
  for (int j = 1; j <= n; ++j)
    if (p[j] >= 1 && p[j] <= rows && j <= cols) match[p[j] - 1] = j - 1;
  return match;
}

namespace detail {

/// Maps arbitrary label values to 0..k-1 in increasing order.
inline std::vector<int> compact_labels(const Labels& labels, int& k) {
  std::map<int, int> ids;
  for (int l : labels) ids.emplace(l, 0);
  int next = 0;
  for (auto& [label, id] : ids) id = next++;
  k = next;
  std::vector<int> out(labels.size());
  for (std::size_t i = 0; i < labels.size(); ++i) out[i] = ids[labels[i]];
  return out;
}

}  // namespace detail

/// Confusion matrix, rows = true clusters, cols = estimated clusters.
inline Matrix confusion_matrix(const Labels& truth, const Labels& estimate) {
  if (truth.size() != estimate.size()) throw Error(ErrorKind::LengthMismatch, "label vectors differ in length");
  int kt = 0, ke = 0;
  const auto t = detail::compact_labels(truth, kt);
  const auto e = detail::compact_labels(estimate, ke);
  Matrix conf = Matrix::Zero(kt, ke);
  for (std::size_t i = 0; i < t.size(); ++i) conf(t[i], e[i]) += 1.0;
  return conf;
}

/// Fraction of points left unmatched by the best one-to-one pairing of true
/// and estimated clusters.
inline double clustering_error(const Labels& truth, const Labels& estimate) {
  if (truth.size() != estimate.size()) throw Error(ErrorKind::LengthMismatch, "label vectors differ in length");
  if (truth.empty()) return 0.0;
  const Matrix conf = confusion_matrix(truth, estimate);
  const auto match = hungarian_max(conf);
  double matched = 0.0;
  for (std::size_t r = 0; r < match.size(); ++r)
    if (match[r] >= 0) matched += conf(static_cast<Eigen::Index>(r), match[r]);
  return 1.0 - matched / static_cast<double>(truth.size());
}

/// 0 if L_hat == L, 1 if overestimated, -1 if underestimated.
inline int el_error(int L_true, int L_hat) {
  if (L_true < 1 || L_hat < 1) throw Error(ErrorKind::InvalidDims, "subspace counts must be >= 1");
  return L_true == L_hat ? 0 : (L_true < L_hat ? 1 : -1);
}

/// 1 - (1/N) sum_i ||b_i restricted to x_i's cluster|| / ||b_i||, b_i the i-th
/// column of A. Columns with zero norm count as fully wrong (ratio 0).
inline double feature_detection_error(const Matrix& adjacency, const Labels& truth) {
  const Eigen::Index n = adjacency.cols();
  if (adjacency.rows() != n) throw Error(ErrorKind::InvalidDims, "adjacency must be square");
  if (static_cast<Eigen::Index>(truth.size()) != n)
    throw Error(ErrorKind::LengthMismatch, "label count differs from adjacency size");
  if (n == 0) return 0.0;
  double sum = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    const double total = adjacency.col(i).norm();
    if (!(total > kZeroNormTol)) continue;
    double within = 0.0;
    for (Eigen::Index k = 0; k < n; ++k)
      if (truth[k] == truth[i]) within += adjacency(k, i) * adjacency(k, i);
    sum += std::sqrt(within) / total;
  }
  return 1.0 - sum / static_cast<double>(n);
}

struct OutlierConfusion {
  double misclassification_error = 0.0;
  int false_negatives = 0;  // outliers declared inliers
  int false_positives = 0;  // inliers declared outliers
};

inline OutlierConfusion outlier_confusion(const std::vector<bool>& flags, const std::vector<bool>& truth) {
  if (flags.size() != truth.size()) throw Error(ErrorKind::LengthMismatch, "flag vectors differ in length");
  OutlierConfusion out;
  for (std::size_t i = 0; i < flags.size(); ++i) {
    if (truth[i] && !flags[i]) ++out.false_negatives;
    if (!truth[i] && flags[i]) ++out.false_positives;
  }
  if (!flags.empty())
    out.misclassification_error =
        static_cast<double>(out.false_negatives + out.false_positives) / static_cast<double>(flags.size());
  return out;
}

}  // namespace tsc
