#include "lace/kmeans.hpp"

#include <limits>

#include "lace/error.hpp"

namespace lace {

namespace {

Matrix plus_plus_init(const Matrix& points, int k, Rng& rng) {
  const Eigen::Index n = points.rows();
  Matrix centers(k, points.cols());
  std::uniform_int_distribution<Eigen::Index> pick(0, n - 1);
  centers.row(0) = points.row(pick(rng));
  Vector closest(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    closest[i] = (points.row(i) - centers.row(0)).squaredNorm();
  }
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (int c = 1; c < k; ++c) {
    const double total = closest.sum();
    Eigen::Index chosen = 0;
    if (total > 0.0) {
      double target = unit(rng) * total;
      chosen = n - 1;
      for (Eigen::Index i = 0; i < n; ++i) {
        target -= closest[i];
        if (target < 0.0) {
          chosen = i;
          break;
        }
      }
    } else {
      chosen = pick(rng);
    }
    centers.row(c) = points.row(chosen);
    for (Eigen::Index i = 0; i < n; ++i) {
      closest[i] = std::min(closest[i], (points.row(i) - centers.row(c)).squaredNorm());
    }
  }
  return centers;
}

KMeansResult lloyd(const Matrix& points, Matrix centers, int max_iterations) {
  const Eigen::Index n = points.rows();
  const Eigen::Index k = centers.rows();
  KMeansResult result;
  result.labels.assign(n, -1);
  Vector best_d2(n);
  for (int iter = 0; iter < max_iterations; ++iter) {
    bool changed = false;
    for (Eigen::Index i = 0; i < n; ++i) {
      int best = 0;
      double best_dist = std::numeric_limits<double>::infinity();
      for (Eigen::Index c = 0; c < k; ++c) {
        const double d2 = (points.row(i) - centers.row(c)).squaredNorm();
        if (d2 < best_dist) {
          best_dist = d2;
          best = static_cast<int>(c);
        }
      }
      best_d2[i] = best_dist;
      if (result.labels[i] != best) {
        result.labels[i] = best;
        changed = true;
      }
    }
    if (!changed && iter > 0) break;

    Matrix sums = Matrix::Zero(k, points.cols());
    std::vector<Eigen::Index> counts(k, 0);
    for (Eigen::Index i = 0; i < n; ++i) {
      sums.row(result.labels[i]) += points.row(i);
      ++counts[result.labels[i]];
    }
    for (Eigen::Index c = 0; c < k; ++c) {
      if (counts[c] > 0) {
        centers.row(c) = sums.row(c) / static_cast<double>(counts[c]);
      } else {
        // Empty cluster: move it onto the worst-served point.
        Eigen::Index far = 0;
        best_d2.maxCoeff(&far);
        centers.row(c) = points.row(far);
        best_d2[far] = 0.0;
      }
    }
  }
  result.inertia = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    result.inertia += (points.row(i) - centers.row(result.labels[i])).squaredNorm();
  }
  result.centers = std::move(centers);
  return result;
}

}  // namespace

KMeansResult kmeans(const Matrix& points, int k, std::uint64_t seed,
                    int restarts, int max_iterations) {
  if (k < 1) throw ArgumentError("kmeans: k must be >= 1");
  if (points.rows() < k) {
    throw ArgumentError("kmeans: k=" + std::to_string(k) + " exceeds n=" +
                        std::to_string(points.rows()));
  }
  Rng rng(seed);
  KMeansResult best;
  best.inertia = std::numeric_limits<double>::infinity();
  for (int r = 0; r < std::max(1, restarts); ++r) {
    KMeansResult run = lloyd(points, plus_plus_init(points, k, rng), max_iterations);
    if (run.inertia < best.inertia) best = std::move(run);
  }
  return best;
}

}  // namespace lace
