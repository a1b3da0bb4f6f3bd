#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "lace/cellgraph.hpp"
#include "lace/ingest.hpp"
#include "lace/matrix.hpp"

namespace lace {

// Size and regularity descriptors of one cell polygon. Axis lengths are
// those of the ellipse with the same second central moments.
struct Morphology {
  double area = 0.0;
  double major_axis = 0.0;
  double minor_axis = 0.0;
  double perimeter = 0.0;
  double solidity = 0.0;
  double eccentricity = 0.0;
  double roundness = 0.0;

  std::array<double, 7> values() const {
    return {area, major_axis, minor_axis, perimeter, solidity, eccentricity, roundness};
  }
};

Morphology morphological_features(std::span<const Point> polygon);
inline Morphology morphological_features(const Cell& cell) {
  return morphological_features(cell.polygon);
}

struct ShapeModeOptions {
  int modes = 4;
  int resample_points = 64;
  int pca_components = 10;
  int registration_rounds = 3;
  // Spectral clustering runs on at most this many distinct contours; the
  // rest take the mode of their nearest clustered contour.
  int max_spectral_points = 600;
  // Registered contours closer than this in PCA space count as identical.
  double identical_tolerance = 1e-6;
};

struct ShapeModes {
  std::vector<int> mode_per_cell;
  int mode_count = 4;
};

// Contour resampled at `count` points equally spaced in arc length,
// starting at the first vertex.
std::vector<Point> resample_contour(std::span<const Point> polygon, int count);

// Unsupervised shape classes from registered contours: PCA followed by
// spectral clustering. Modes are numbered by descending population.
ShapeModes shape_modes(const CellSet& cells, std::uint64_t seed,
                       const ShapeModeOptions& options = {});

// Per-node degree, degree centrality, betweenness, closeness, clustering
// coefficient (n x 5).
Matrix topo_features(const CellGraph& graph);

// Unnormalized Brandes betweenness; each unordered pair counted once.
std::vector<double> betweenness_centrality(const CellGraph& graph);

// Mean, std (population), min, max, median of the distances to the k
// nearest other centroids (n x 5).
Matrix neighbor_distance_stats(std::span<const Point> centroids, int k = 10);

struct FeatureOptions {
  std::vector<double> thresholds{50.0, 100.0, 200.0};
  int nn_k = 10;
  bool include_laplace = true;
  bool shape_mode_one_hot = false;
  bool standardize = true;
  std::uint64_t shape_seed = 0;
  ShapeModeOptions shape;
};

struct FeatureMatrix {
  Matrix values;
  std::vector<std::string> column_names;
  bool standardized = false;
};

// Column layout: 7 morphology | shape mode | 5 topology per threshold
// graph | 5 neighbor-distance stats | Laplace coordinate (optional).
FeatureMatrix assemble_feature_matrix(const CellSet& cells, const ShapeModes& modes,
                                      std::span<const CellGraph> threshold_graphs,
                                      const Matrix& nn_stats,
                                      std::optional<std::span<const double>> laplace,
                                      const FeatureOptions& options = {});

// Runs every feature stage on the cells.
FeatureMatrix compute_features(const CellSet& cells,
                               std::optional<std::span<const double>> laplace,
                               const FeatureOptions& options = {});

// Column-wise z-score; constant columns become 0.
void standardize_columns(Matrix& values);

// Header row, then one row per cell in ascending id order.
std::string features_to_csv(const FeatureMatrix& features, const CellSet& cells);

}  // namespace lace
