#pragma once

#include <cstdint>
#include <vector>

#include "lace/matrix.hpp"

namespace lace {

struct KMeansResult {
  std::vector<int> labels;
  Matrix centers;
  double inertia = 0.0;  // sum of squared distances to assigned centers
};

// Lloyd's algorithm with k-means++ seeding; the restart with the lowest
// inertia wins (first one on ties). Rows are points.
KMeansResult kmeans(const Matrix& points, int k, std::uint64_t seed,
                    int restarts = 50, int max_iterations = 300);

}  // namespace lace
