#include "lace/features.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <map>
#include <numbers>
#include <numeric>

#include <Eigen/Eigenvalues>

#include "lace/csv.hpp"
#include "lace/error.hpp"
#include "lace/kmeans.hpp"
#include "lace/spatial_index.hpp"

namespace lace {

// ---------------------------------------------------------------------------
// Morphology

Morphology morphological_features(std::span<const Point> polygon) {
  Morphology m;
  m.area = std::abs(signed_area(polygon));
  m.perimeter = perimeter(polygon);
  if (!(m.area > 1e-12 * std::max(1.0, m.perimeter * m.perimeter))) {
    throw ValidationError("morphology: degenerate polygon");
  }
  const CentralMoments mom = normalized_central_moments(polygon);
  const double half_trace = 0.5 * (mom.xx + mom.yy);
  const double spread = std::hypot(0.5 * (mom.xx - mom.yy), mom.xy);
  const double lambda_max = half_trace + spread;
  const double lambda_min = std::max(0.0, half_trace - spread);
  m.major_axis = 4.0 * std::sqrt(lambda_max);
  m.minor_axis = 4.0 * std::sqrt(lambda_min);
  m.eccentricity = std::sqrt(std::max(0.0, 1.0 - lambda_min / lambda_max));

  const std::vector<Point> hull = convex_hull(polygon);
  m.solidity = std::min(1.0, m.area / std::abs(signed_area(hull)));
  m.roundness = 4.0 * std::numbers::pi * m.area / (m.perimeter * m.perimeter);
  return m;
}

// ---------------------------------------------------------------------------
// Shape modes

std::vector<Point> resample_contour(std::span<const Point> polygon, int count) {
  const size_t n = polygon.size();
  std::vector<double> cumulative(n + 1, 0.0);
  for (size_t i = 0; i < n; ++i) {
    cumulative[i + 1] = cumulative[i] + distance(polygon[i], polygon[(i + 1) % n]);
  }
  const double total = cumulative[n];
  std::vector<Point> out;
  out.reserve(count);
  size_t edge = 0;
  for (int k = 0; k < count; ++k) {
    const double target = total * k / count;
    while (edge + 1 < n && cumulative[edge + 1] <= target) ++edge;
    const double len = cumulative[edge + 1] - cumulative[edge];
    const double t = len > 0.0 ? (target - cumulative[edge]) / len : 0.0;
    const Point a = polygon[edge];
    const Point b = polygon[(edge + 1) % n];
    out.push_back(a + t * (b - a));
  }
  return out;
}

namespace {

using Contour = std::vector<Point>;

void normalize_contour(Contour& c) {
  Point mean;
  for (const Point& p : c) mean = mean + p;
  mean = (1.0 / c.size()) * mean;
  double sq = 0.0;
  for (Point& p : c) {
    p = p - mean;
    sq += p.x * p.x + p.y * p.y;
  }
  const double rms = std::sqrt(sq / c.size());
  if (rms > 0.0) {
    for (Point& p : c) p = (1.0 / rms) * p;
  }
}

Contour mirrored(const Contour& c) {
  // Reflection flips orientation, so traverse backwards to keep it.
  Contour out(c.size());
  for (size_t i = 0; i < c.size(); ++i) {
    const Point p = c[(c.size() - i) % c.size()];
    out[i] = {-p.x, p.y};
  }
  return out;
}

// Best cyclic shift, optional reflection and rotation of `c` onto `ref`.
Contour register_onto(const Contour& c, const Contour& ref) {
  const size_t n = c.size();
  double ref_sq = 0.0;
  for (const Point& q : ref) ref_sq += q.x * q.x + q.y * q.y;
  const Contour candidates[2] = {c, mirrored(c)};

  double best_cost = std::numeric_limits<double>::infinity();
  int best_candidate = 0;
  size_t best_shift = 0;
  double best_angle = 0.0;
  constexpr double kTieTolerance = 1e-9;
  for (int which = 0; which < 2; ++which) {
    const Contour& cand = candidates[which];
    double cand_sq = 0.0;
    for (const Point& p : cand) cand_sq += p.x * p.x + p.y * p.y;
    for (size_t s = 0; s < n; ++s) {
      double dot = 0.0;
      double crs = 0.0;
      for (size_t i = 0; i < n; ++i) {
        const Point p = cand[(i + s) % n];
        const Point q = ref[i];
        dot += p.x * q.x + p.y * q.y;
        crs += p.x * q.y - p.y * q.x;
      }
      const double cost = cand_sq + ref_sq - 2.0 * std::hypot(dot, crs);
      // Exact symmetries produce ties; keep the earliest candidate so that
      // congruent inputs register identically.
      if (cost < best_cost - kTieTolerance) {
        best_cost = cost;
        best_candidate = which;
        best_shift = s;
        best_angle = std::atan2(crs, dot);
      }
    }
  }
  const Contour& cand = candidates[best_candidate];
  const double cs = std::cos(best_angle);
  const double sn = std::sin(best_angle);
  Contour out(n);
  for (size_t i = 0; i < n; ++i) {
    const Point p = cand[(i + best_shift) % n];
    out[i] = {cs * p.x - sn * p.y, sn * p.x + cs * p.y};
  }
  return out;
}

// Relabels so that label 0 is the most populous; ties by first occurrence.
std::vector<int> canonical_labels(const std::vector<int>& labels) {
  std::map<int, std::pair<size_t, size_t>> stats;  // label -> (count, first)
  for (size_t i = 0; i < labels.size(); ++i) {
    auto [it, inserted] = stats.try_emplace(labels[i], 0, i);
    ++it->second.first;
  }
  std::vector<std::pair<int, std::pair<size_t, size_t>>> order(stats.begin(), stats.end());
  std::sort(order.begin(), order.end(), [](const auto& a, const auto& b) {
    if (a.second.first != b.second.first) return a.second.first > b.second.first;
    return a.second.second < b.second.second;
  });
  std::map<int, int> remap;
  for (size_t r = 0; r < order.size(); ++r) remap[order[r].first] = static_cast<int>(r);
  std::vector<int> out(labels.size());
  for (size_t i = 0; i < labels.size(); ++i) out[i] = remap[labels[i]];
  return out;
}

std::vector<int> spectral_clusters(const Matrix& points, int k, std::uint64_t seed) {
  const Eigen::Index n = points.rows();
  Matrix d2(n, n);
  std::vector<double> dists;
  dists.reserve(static_cast<size_t>(n * (n - 1) / 2));
  for (Eigen::Index i = 0; i < n; ++i) {
    d2(i, i) = 0.0;
    for (Eigen::Index j = i + 1; j < n; ++j) {
      const double v = (points.row(i) - points.row(j)).squaredNorm();
      d2(i, j) = d2(j, i) = v;
      dists.push_back(std::sqrt(v));
    }
  }
  // Bandwidth: median pairwise distance.
  std::nth_element(dists.begin(), dists.begin() + dists.size() / 2, dists.end());
  double sigma = dists[dists.size() / 2];
  if (!(sigma > 0.0)) sigma = 1.0;
  Eigen::MatrixXd affinity = (-d2.array() / (2.0 * sigma * sigma)).exp().matrix();
  affinity.diagonal().setZero();
  Vector inv_sqrt_degree = affinity.rowwise().sum().cwiseMax(1e-300).cwiseSqrt().cwiseInverse();
  Eigen::MatrixXd normalized =
      inv_sqrt_degree.asDiagonal() * affinity * inv_sqrt_degree.asDiagonal();
  // Leading eigenvectors of D^-1/2 W D^-1/2 are the trailing ones of the
  // symmetric normalized Laplacian.
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(normalized);
  Matrix embedding = eig.eigenvectors().rightCols(k);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double norm = embedding.row(i).norm();
    if (norm > 0.0) embedding.row(i) /= norm;
  }
  return kmeans(embedding, k, seed, 10).labels;
}

}  // namespace

ShapeModes shape_modes(const CellSet& cells, std::uint64_t seed,
                       const ShapeModeOptions& options) {
  const size_t n = cells.size();
  if (n < static_cast<size_t>(options.modes)) {
    throw ArgumentError("shape modes: need at least " + std::to_string(options.modes) +
                        " cells, got " + std::to_string(n));
  }
  const int m = options.resample_points;
  std::vector<Contour> contours;
  contours.reserve(n);
  for (const Cell& cell : cells.cells) {
    Contour c = resample_contour(cell.polygon, m);
    normalize_contour(c);
    contours.push_back(std::move(c));
  }

  // Generalized Procrustes: register to a reference, then refine the
  // reference as the normalized mean of the registered set.
  Contour reference = contours[0];
  std::vector<Contour> registered(n);
  for (int round = 0; round < std::max(1, options.registration_rounds); ++round) {
    Contour mean(m);
    for (size_t i = 0; i < n; ++i) {
      registered[i] = register_onto(contours[i], reference);
      for (int j = 0; j < m; ++j) mean[j] = mean[j] + registered[i][j];
    }
    normalize_contour(mean);
    reference = std::move(mean);
  }

  Matrix flat(static_cast<Eigen::Index>(n), 2 * m);
  for (size_t i = 0; i < n; ++i) {
    for (int j = 0; j < m; ++j) {
      flat(static_cast<Eigen::Index>(i), 2 * j) = registered[i][j].x;
      flat(static_cast<Eigen::Index>(i), 2 * j + 1) = registered[i][j].y;
    }
  }
  const Eigen::RowVectorXd column_mean = flat.colwise().mean();
  flat.rowwise() -= column_mean;
  const Eigen::MatrixXd cov = (flat.transpose() * flat) / static_cast<double>(n);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(cov);
  const int comps = std::min<int>(options.pca_components, 2 * m);
  const Matrix pca = flat * eig.eigenvectors().rightCols(comps);

  // Collapse identical contours; fewer distinct shapes than modes means
  // each distinct shape is its own mode.
  std::vector<int> group(n, -1);
  std::vector<size_t> representatives;
  for (size_t i = 0; i < n; ++i) {
    for (size_t g = 0; g < representatives.size(); ++g) {
      const double d = (pca.row(static_cast<Eigen::Index>(i)) -
                        pca.row(static_cast<Eigen::Index>(representatives[g])))
                           .norm();
      if (d <= options.identical_tolerance) {
        group[i] = static_cast<int>(g);
        break;
      }
    }
    if (group[i] < 0) {
      group[i] = static_cast<int>(representatives.size());
      representatives.push_back(i);
    }
  }

  std::vector<int> labels(n);
  if (representatives.size() <= static_cast<size_t>(options.modes)) {
    labels = group;
  } else {
    Rng rng(seed);
    std::vector<size_t> landmarks = representatives;
    if (landmarks.size() > static_cast<size_t>(options.max_spectral_points)) {
      std::shuffle(landmarks.begin(), landmarks.end(), rng);
      landmarks.resize(options.max_spectral_points);
      std::sort(landmarks.begin(), landmarks.end());
    }
    Matrix landmark_points(static_cast<Eigen::Index>(landmarks.size()), comps);
    for (size_t l = 0; l < landmarks.size(); ++l) {
      landmark_points.row(static_cast<Eigen::Index>(l)) =
          pca.row(static_cast<Eigen::Index>(landmarks[l]));
    }
    const std::vector<int> landmark_labels =
        spectral_clusters(landmark_points, options.modes, seed);
    for (size_t i = 0; i < n; ++i) {
      size_t nearest = 0;
      double best = std::numeric_limits<double>::infinity();
      for (size_t l = 0; l < landmarks.size(); ++l) {
        const double d = (pca.row(static_cast<Eigen::Index>(i)) -
                          landmark_points.row(static_cast<Eigen::Index>(l)))
                             .squaredNorm();
        if (d < best) {
          best = d;
          nearest = l;
        }
      }
      labels[i] = landmark_labels[nearest];
    }
  }
  return {canonical_labels(labels), options.modes};
}

// ---------------------------------------------------------------------------
// Topology

namespace {

struct PathStats {
  std::vector<double> betweenness;
  std::vector<double> closeness;
};

// One BFS per source yields both Brandes dependencies and distance sums.
PathStats shortest_path_stats(const CellGraph& graph) {
  const size_t n = graph.node_count();
  PathStats out{std::vector<double>(n, 0.0), std::vector<double>(n, 0.0)};
  std::vector<std::int64_t> dist(n);
  std::vector<double> sigma(n);
  std::vector<double> delta(n);
  std::vector<std::uint32_t> order;
  order.reserve(n);
  std::vector<std::uint32_t> queue(n);
  for (size_t s = 0; s < n; ++s) {
    std::fill(dist.begin(), dist.end(), -1);
    std::fill(sigma.begin(), sigma.end(), 0.0);
    order.clear();
    dist[s] = 0;
    sigma[s] = 1.0;
    size_t head = 0;
    size_t tail = 0;
    queue[tail++] = static_cast<std::uint32_t>(s);
    std::int64_t distance_sum = 0;
    while (head < tail) {
      const std::uint32_t v = queue[head++];
      order.push_back(v);
      distance_sum += dist[v];
      for (std::uint32_t w : graph.neighbors(v)) {
        if (dist[w] < 0) {
          dist[w] = dist[v] + 1;
          queue[tail++] = w;
        }
        if (dist[w] == dist[v] + 1) sigma[w] += sigma[v];
      }
    }
    const size_t reached = order.size();
    out.closeness[s] = distance_sum > 0
                           ? static_cast<double>(reached - 1) / static_cast<double>(distance_sum)
                           : 0.0;
    for (std::uint32_t v : order) delta[v] = 0.0;
    for (size_t i = order.size(); i-- > 0;) {
      const std::uint32_t w = order[i];
      for (std::uint32_t v : graph.neighbors(w)) {
        if (dist[v] == dist[w] - 1) delta[v] += sigma[v] / sigma[w] * (1.0 + delta[w]);
      }
      if (w != s) out.betweenness[w] += delta[w];
    }
  }
  // Undirected: every pair was visited from both ends.
  for (double& b : out.betweenness) b *= 0.5;
  return out;
}

std::vector<double> clustering_coefficients(const CellGraph& graph) {
  const size_t n = graph.node_count();
  std::vector<double> triangles(n, 0.0);
  for (const auto& [u, v] : graph.edges()) {
    const auto a = graph.neighbors(u);
    const auto b = graph.neighbors(v);
    size_t common = 0;
    size_t i = 0;
    size_t j = 0;
    while (i < a.size() && j < b.size()) {
      if (a[i] < b[j]) {
        ++i;
      } else if (b[j] < a[i]) {
        ++j;
      } else {
        ++common;
        ++i;
        ++j;
      }
    }
    // Each triangle at u is seen from its two edges at u.
    triangles[u] += 0.5 * static_cast<double>(common);
    triangles[v] += 0.5 * static_cast<double>(common);
  }
  std::vector<double> out(n, 0.0);
  for (size_t v = 0; v < n; ++v) {
    const double deg = static_cast<double>(graph.degree(v));
    if (deg >= 2.0) out[v] = 2.0 * triangles[v] / (deg * (deg - 1.0));
  }
  return out;
}

}  // namespace

std::vector<double> betweenness_centrality(const CellGraph& graph) {
  return shortest_path_stats(graph).betweenness;
}

Matrix topo_features(const CellGraph& graph) {
  const size_t n = graph.node_count();
  if (n == 0) throw ArgumentError("topology: graph has no nodes");
  const PathStats paths = shortest_path_stats(graph);
  const std::vector<double> clustering = clustering_coefficients(graph);
  Matrix out(static_cast<Eigen::Index>(n), 5);
  for (size_t v = 0; v < n; ++v) {
    const auto r = static_cast<Eigen::Index>(v);
    const double deg = static_cast<double>(graph.degree(v));
    out(r, 0) = deg;
    out(r, 1) = n > 1 ? deg / static_cast<double>(n - 1) : 0.0;
    out(r, 2) = paths.betweenness[v];
    out(r, 3) = paths.closeness[v];
    out(r, 4) = clustering[v];
  }
  return out;
}

Matrix neighbor_distance_stats(std::span<const Point> centroids, int k) {
  const size_t n = centroids.size();
  if (k < 1 || n <= static_cast<size_t>(k)) {
    throw ArgumentError("neighbor distances: need n > k (n=" + std::to_string(n) +
                        ", k=" + std::to_string(k) + ")");
  }
  KdTree tree(centroids);
  Matrix out(static_cast<Eigen::Index>(n), 5);
  std::vector<double> d;
  for (size_t i = 0; i < n; ++i) {
    const auto nbs = tree.nearest(centroids[i], k, static_cast<std::uint32_t>(i));
    d.clear();
    for (const Neighbor& nb : nbs) d.push_back(nb.distance);  // ascending
    const double mean = std::accumulate(d.begin(), d.end(), 0.0) / k;
    double var = 0.0;
    for (double v : d) var += (v - mean) * (v - mean);
    const double median = k % 2 == 1 ? d[k / 2] : 0.5 * (d[k / 2 - 1] + d[k / 2]);
    const auto r = static_cast<Eigen::Index>(i);
    out(r, 0) = mean;
    out(r, 1) = std::sqrt(var / k);
    out(r, 2) = d.front();
    out(r, 3) = d.back();
    out(r, 4) = median;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Assembly

void standardize_columns(Matrix& values) {
  const Eigen::Index n = values.rows();
  for (Eigen::Index c = 0; c < values.cols(); ++c) {
    auto col = values.col(c);
    if (n == 0) continue;
    const double mean = col.mean();
    col.array() -= mean;
    const double sd = std::sqrt(col.squaredNorm() / static_cast<double>(n));
    // A spread at rounding level (e.g. solidity of convex cells) is constant.
    if (!(sd > 1e-12 * std::max(1.0, std::abs(mean)))) {
      col.setZero();
      continue;
    }
    col /= sd;
  }
}

FeatureMatrix assemble_feature_matrix(const CellSet& cells, const ShapeModes& modes,
                                      std::span<const CellGraph> threshold_graphs,
                                      const Matrix& nn_stats,
                                      std::optional<std::span<const double>> laplace,
                                      const FeatureOptions& options) {
  const size_t n = cells.size();
  auto require = [n](size_t got, const char* what) {
    if (got != n) {
      throw Error(std::string("feature assembly: ") + what + " has " + std::to_string(got) +
                  " rows, expected " + std::to_string(n));
    }
  };
  require(modes.mode_per_cell.size(), "shape modes");
  for (const CellGraph& g : threshold_graphs) require(g.node_count(), "threshold graph");
  require(static_cast<size_t>(nn_stats.rows()), "neighbor stats");
  if (nn_stats.cols() != 5) throw Error("feature assembly: neighbor stats need 5 columns");
  if (options.include_laplace) {
    if (!laplace) throw Error("feature assembly: Laplace coordinates missing");
    require(laplace->size(), "Laplace coordinates");
  }

  FeatureMatrix out;
  auto& names = out.column_names;
  names = {"area", "major_axis_length", "minor_axis_length", "perimeter",
           "solidity", "eccentricity", "roundness"};
  if (options.shape_mode_one_hot) {
    for (int m = 0; m < modes.mode_count; ++m) names.push_back("shape_mode_" + std::to_string(m));
  } else {
    names.push_back("shape_mode");
  }
  for (const CellGraph& g : threshold_graphs) {
    const std::string suffix = "_r" + format_double(g.parameter());
    for (const char* base : {"degree", "degree_centrality", "betweenness", "closeness",
                             "clustering"}) {
      names.push_back(base + suffix);
    }
  }
  for (const char* base : {"nn_dist_mean", "nn_dist_std", "nn_dist_min", "nn_dist_max",
                           "nn_dist_median"}) {
    names.push_back(base);
  }
  if (options.include_laplace) names.push_back("laplace_coordinate");

  Matrix values(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(names.size()));
  for (size_t i = 0; i < n; ++i) {
    const auto r = static_cast<Eigen::Index>(i);
    Eigen::Index c = 0;
    for (double v : morphological_features(cells.cells[i]).values()) values(r, c++) = v;
    if (options.shape_mode_one_hot) {
      for (int m = 0; m < modes.mode_count; ++m) {
        values(r, c++) = modes.mode_per_cell[i] == m ? 1.0 : 0.0;
      }
    } else {
      values(r, c++) = modes.mode_per_cell[i];
    }
    c += 5 * static_cast<Eigen::Index>(threshold_graphs.size());
    for (Eigen::Index k = 0; k < 5; ++k) values(r, c++) = nn_stats(r, k);
    if (options.include_laplace) values(r, c++) = (*laplace)[i];
  }
  const Eigen::Index topo_start = options.shape_mode_one_hot ? 7 + modes.mode_count : 8;
  for (size_t g = 0; g < threshold_graphs.size(); ++g) {
    values.middleCols(topo_start + 5 * static_cast<Eigen::Index>(g), 5) =
        topo_features(threshold_graphs[g]);
  }
  for (Eigen::Index i = 0; i < values.size(); ++i) {
    if (!std::isfinite(values.data()[i])) throw Error("feature assembly: non-finite value");
  }
  if (options.standardize) standardize_columns(values);
  out.values = std::move(values);
  out.standardized = options.standardize;
  return out;
}

FeatureMatrix compute_features(const CellSet& cells,
                               std::optional<std::span<const double>> laplace,
                               const FeatureOptions& options) {
  const std::vector<Point> centroids = cells.centroids();
  const ShapeModes modes = shape_modes(cells, options.shape_seed, options.shape);
  std::vector<CellGraph> graphs;
  for (double r : options.thresholds) graphs.push_back(threshold_graph(centroids, r));
  const Matrix nn = neighbor_distance_stats(centroids, options.nn_k);
  return assemble_feature_matrix(cells, modes, graphs, nn, laplace, options);
}

std::string features_to_csv(const FeatureMatrix& features, const CellSet& cells) {
  std::vector<size_t> order(cells.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](size_t a, size_t b) { return cells.cells[a].id < cells.cells[b].id; });
  std::vector<std::int64_t> ids;
  Matrix sorted(features.values.rows(), features.values.cols());
  for (size_t r = 0; r < order.size(); ++r) {
    ids.push_back(cells.cells[order[r]].id);
    sorted.row(static_cast<Eigen::Index>(r)) =
        features.values.row(static_cast<Eigen::Index>(order[r]));
  }
  return id_matrix_to_csv(ids, features.column_names, sorted);
}

}  // namespace lace
