#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include <Eigen/Dense>

#include "tsc/error.hpp"
#include "tsc/geometry.hpp"

namespace tsc {

/// c = sqrt(6), calibrated for unit-norm inliers and uniform-on-sphere outliers.
inline const double kNoiselessOutlierC = std::sqrt(6.0);
/// c = 2.3 sqrt(6), calibrated for noisy inliers and N(0, I/m) outliers.
inline const double kNoisyOutlierC = 2.3 * std::sqrt(6.0);

struct OutlierReport {
  std::vector<double> scores;  // max_{i != j} |<x_i, x_j>|
  double threshold = 0.0;      // c sqrt(log N) / sqrt(m)
  std::vector<bool> flags;     // true = outlier
};

/// max_{i != j} |<x_i, x_j>| for every j, on raw (not renormalized) points.
/// Works in column blocks so memory stays O(N * block).
inline std::vector<double> max_abs_inner_products(const Matrix& x, Eigen::Index block = 512) {
  const Eigen::Index n = x.cols();
  std::vector<double> best(n, 0.0);
  Matrix g;
  for (Eigen::Index start = 0; start < n; start += block) {
    const Eigen::Index len = std::min(block, n - start);
    // only blocks at or after `start` are needed; symmetry fills the rest
    const Eigen::Index rest = n - start;
    g.noalias() = x.middleCols(start, len).transpose() * x.rightCols(rest);
    for (Eigen::Index a = 0; a < len; ++a) {
      const Eigen::Index j = start + a;
      for (Eigen::Index b = a + 1; b < rest; ++b) {
        const Eigen::Index i = start + b;
        const double v = std::abs(g(a, b));
        if (v > best[j]) best[j] = v;
        if (v > best[i]) best[i] = v;
      }
    }
  }
  return best;
}

/// Flags x_j as an outlier when max_{i != j} |<x_i, x_j>| < c sqrt(log N) / sqrt(m).
inline OutlierReport detect_outliers(const PointSet& points, double c) {
  const Eigen::Index n = points.size();
  if (n < 2) throw Error(ErrorKind::TooFewPoints, "outlier detection needs N >= 2");
  if (!(c > 0.0) || !std::isfinite(c)) throw Error(ErrorKind::Config, "c must be positive and finite");
  if (!points.data().allFinite()) throw Error(ErrorKind::NonFinite, "points contain NaN or Inf");

  OutlierReport rep;
  rep.scores = max_abs_inner_products(points.data());
  rep.threshold = c * std::sqrt(std::log(static_cast<double>(n))) / std::sqrt(static_cast<double>(points.dim()));
  rep.flags.resize(n);
  for (Eigen::Index j = 0; j < n; ++j) rep.flags[j] = rep.scores[j] < rep.threshold;
  return rep;
}

}  // namespace tsc
