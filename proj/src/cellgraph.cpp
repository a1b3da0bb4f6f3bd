#include "lace/cellgraph.hpp"

#include <algorithm>

#include "lace/error.hpp"
#include "lace/spatial_index.hpp"

namespace lace {

CellGraph::CellGraph(size_t n, std::vector<Edge> edges, GraphKind kind,
                     double parameter)
    : n_(n), edges_(std::move(edges)), kind_(kind), parameter_(parameter) {
  for (Edge& e : edges_) {
    if (e.first == e.second) {
      throw ArgumentError("cell graph: self-loop at node " +
                          std::to_string(e.first));
    }
    if (e.first >= n_ || e.second >= n_) {
      throw ArgumentError("cell graph: edge endpoint out of range");
    }
    if (e.first > e.second) std::swap(e.first, e.second);
  }
  std::sort(edges_.begin(), edges_.end());
  edges_.erase(std::unique(edges_.begin(), edges_.end()), edges_.end());

  std::vector<size_t> degree(n_, 0);
  for (const Edge& e : edges_) {
    ++degree[e.first];
    ++degree[e.second];
  }
  offsets_.assign(n_ + 1, 0);
  for (size_t v = 0; v < n_; ++v) offsets_[v + 1] = offsets_[v] + degree[v];
  adjacency_.resize(offsets_[n_]);
  std::vector<size_t> fill(offsets_.begin(), offsets_.end() - 1);
  // Edges are sorted, so each list comes out ascending.
  for (const Edge& e : edges_) adjacency_[fill[e.first]++] = e.second;
  for (const Edge& e : edges_) adjacency_[fill[e.second]++] = e.first;
  for (size_t v = 0; v < n_; ++v) {
    std::sort(adjacency_.begin() + offsets_[v], adjacency_.begin() + offsets_[v + 1]);
  }
}

std::string CellGraph::to_csv() const {
  std::string out;
  for (const Edge& e : edges_) {
    out += std::to_string(e.first) + "," + std::to_string(e.second) + "\n";
  }
  return out;
}

CellGraph knn_graph(std::span<const Point> centroids, int k) {
  const size_t n = centroids.size();
  if (k <= 0) throw ArgumentError("knn graph: k must be positive");
  if (static_cast<size_t>(k) >= n) {
    throw ArgumentError("knn graph: k=" + std::to_string(k) +
                        " must be smaller than n=" + std::to_string(n));
  }
  KdTree tree(centroids);
  std::vector<CellGraph::Edge> edges;
  edges.reserve(n * static_cast<size_t>(k));
  for (size_t i = 0; i < n; ++i) {
    const auto self = static_cast<std::uint32_t>(i);
    for (const Neighbor& nb : tree.nearest(centroids[i], k, self)) {
      edges.emplace_back(self, nb.index);
    }
  }
  return CellGraph(n, std::move(edges), GraphKind::kKnn, k);
}

CellGraph knn_graph(const CellSet& cells, int k) {
  return knn_graph(cells.centroids(), k);
}

CellGraph threshold_graph(std::span<const Point> centroids, double radius) {
  if (!(radius > 0.0)) throw ArgumentError("threshold graph: radius must be > 0");
  const size_t n = centroids.size();
  KdTree tree(centroids);
  std::vector<CellGraph::Edge> edges;
  for (size_t i = 0; i < n; ++i) {
    for (std::uint32_t j : tree.within(centroids[i], radius)) {
      if (j > i) edges.emplace_back(static_cast<std::uint32_t>(i), j);
    }
  }
  return CellGraph(n, std::move(edges), GraphKind::kThreshold, radius);
}

CellGraph threshold_graph(const CellSet& cells, double radius) {
  return threshold_graph(cells.centroids(), radius);
}

}  // namespace lace
