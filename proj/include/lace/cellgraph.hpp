#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "lace/geometry.hpp"
#include "lace/ingest.hpp"

namespace lace {

enum class GraphKind { kKnn, kThreshold, kTopK };

// Undirected, unweighted graph over cells. Edges are stored once as (i, j)
// with i < j, sorted lexicographically.
class CellGraph {
 public:
  using Edge = std::pair<std::uint32_t, std::uint32_t>;

  CellGraph() = default;
  // Canonicalizes the edge list (orders endpoints, sorts, removes
  // duplicates). Self-loops and out-of-range endpoints are rejected.
  CellGraph(size_t n, std::vector<Edge> edges, GraphKind kind = GraphKind::kKnn,
            double parameter = 0.0);

  size_t node_count() const { return n_; }
  size_t edge_count() const { return edges_.size(); }
  const std::vector<Edge>& edges() const { return edges_; }
  GraphKind kind() const { return kind_; }
  double parameter() const { return parameter_; }

  // Sorted neighbor list of node v.
  std::span<const std::uint32_t> neighbors(size_t v) const {
    return {adjacency_.data() + offsets_[v], adjacency_.data() + offsets_[v + 1]};
  }
  size_t degree(size_t v) const { return offsets_[v + 1] - offsets_[v]; }

  // "i,j" per line, lexicographic order.
  std::string to_csv() const;

 private:
  size_t n_ = 0;
  std::vector<Edge> edges_;
  GraphKind kind_ = GraphKind::kKnn;
  double parameter_ = 0.0;
  std::vector<size_t> offsets_{0};
  std::vector<std::uint32_t> adjacency_;
};

// Union-symmetrized k-nearest-neighbor graph over centroids.
CellGraph knn_graph(std::span<const Point> centroids, int k);
CellGraph knn_graph(const CellSet& cells, int k);

// Edge iff centroid distance is strictly below `radius`.
CellGraph threshold_graph(std::span<const Point> centroids, double radius);
CellGraph threshold_graph(const CellSet& cells, double radius);

}  // namespace lace
