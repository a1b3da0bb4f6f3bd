#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "lace/matrix.hpp"

namespace lace {

struct WeightedEdge {
  std::uint32_t i = 0;
  std::uint32_t j = 0;
  double weight = 0.0;
};

// Undirected weighted graph without self-loops. Edges are stored once with
// i < j, sorted; weights must be positive.
class WeightedGraph {
 public:
  WeightedGraph() = default;
  WeightedGraph(size_t n, std::vector<WeightedEdge> edges);

  size_t node_count() const { return n_; }
  const std::vector<WeightedEdge>& edges() const { return edges_; }
  double total_weight() const { return total_weight_; }   // m
  double strength(size_t v) const { return strength_[v]; }  // weighted degree

  struct Arc {
    std::uint32_t to;
    double weight;
  };
  std::span<const Arc> arcs(size_t v) const {
    return {arcs_.data() + offsets_[v], arcs_.data() + offsets_[v + 1]};
  }

 private:
  size_t n_ = 0;
  std::vector<WeightedEdge> edges_;
  double total_weight_ = 0.0;
  std::vector<double> strength_;
  std::vector<size_t> offsets_{0};
  std::vector<Arc> arcs_;
};

// Fuzzy k-nearest-neighbor graph of the rows of `points` (smooth kNN
// kernel with per-node rho/sigma, fuzzy-union symmetrization).
WeightedGraph umap_connectivity(const Matrix& points, int n_neighbors = 15);

struct Partition {
  std::vector<int> community;  // contiguous ids 0..count-1
  int count = 0;
  double quality = 0.0;        // modularity at `resolution`
  double resolution = 1.0;
};

// Relabels ids in order of first appearance.
std::vector<int> canonical_membership(std::span<const int> membership, int* count = nullptr);

double modularity(const WeightedGraph& g, std::span<const int> membership, double gamma);

struct LeidenOptions {
  double theta = 0.01;          // refinement randomness
  int max_iterations = 50;      // outer iterations; stops earlier when stable
  bool refine = true;           // false degenerates to Louvain
};

// Modularity maximization. `quality_trace`, when given, receives Q after
// each outer iteration.
Partition leiden(const WeightedGraph& g, double gamma, Rng& rng,
                 const LeidenOptions& options = {},
                 std::vector<double>* quality_trace = nullptr);

// True when every community induces a connected subgraph.
bool communities_connected(const WeightedGraph& g, std::span<const int> membership);

struct ScanEntry {
  double gamma = 0.0;
  int count = 0;
  double quality = 0.0;
};

struct ScanResult {
  Partition partition;
  bool exact = false;  // partition has exactly the target count
  std::vector<ScanEntry> entries;
};

struct ScanOptions {
  double gamma_lo = 0.1;
  double gamma_hi = 3.0;
  int steps = 30;
  int restarts = 3;
  LeidenOptions leiden;
};

// Leiden over geometrically spaced resolutions, keeping the best run with
// the requested number of communities (or the nearest count).
ScanResult resolution_scan(const WeightedGraph& g, int target_count, std::uint64_t seed,
                           const ScanOptions& options = {});

std::string scan_to_json(const ScanResult& scan);

struct KMeansPartition {
  Partition partition;  // quality/resolution unused
  double inertia = 0.0;
};

KMeansPartition kmeans_baseline(const Matrix& points, int k, std::uint64_t seed,
                                int restarts = 50);

}  // namespace lace
