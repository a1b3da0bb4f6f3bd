#include "lace/community.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <numeric>
#include <unordered_map>

#include <json.hpp>

#include "lace/error.hpp"
#include "lace/kmeans.hpp"

namespace lace {

// ---------------------------------------------------------------------------
// WeightedGraph

WeightedGraph::WeightedGraph(size_t n, std::vector<WeightedEdge> edges)
    : n_(n), edges_(std::move(edges)), strength_(n, 0.0) {
  for (WeightedEdge& e : edges_) {
    if (e.i == e.j) throw ArgumentError("weighted graph: self-loop");
    if (e.i >= n || e.j >= n) throw ArgumentError("weighted graph: endpoint out of range");
    if (!(e.weight > 0.0) || !std::isfinite(e.weight)) {
      throw ArgumentError("weighted graph: weights must be positive and finite");
    }
    if (e.i > e.j) std::swap(e.i, e.j);
  }
  std::sort(edges_.begin(), edges_.end(), [](const WeightedEdge& a, const WeightedEdge& b) {
    return a.i < b.i || (a.i == b.i && a.j < b.j);
  });
  for (size_t k = 1; k < edges_.size(); ++k) {
    if (edges_[k].i == edges_[k - 1].i && edges_[k].j == edges_[k - 1].j) {
      throw ArgumentError("weighted graph: duplicate edge");
    }
  }
  std::vector<size_t> degree(n, 0);
  for (const WeightedEdge& e : edges_) {
    total_weight_ += e.weight;
    strength_[e.i] += e.weight;
    strength_[e.j] += e.weight;
    ++degree[e.i];
    ++degree[e.j];
  }
  offsets_.assign(n + 1, 0);
  for (size_t v = 0; v < n; ++v) offsets_[v + 1] = offsets_[v] + degree[v];
  arcs_.resize(offsets_[n]);
  std::vector<size_t> fill(offsets_.begin(), offsets_.end() - 1);
  for (const WeightedEdge& e : edges_) {
    arcs_[fill[e.i]++] = {e.j, e.weight};
    arcs_[fill[e.j]++] = {e.i, e.weight};
  }
  for (size_t v = 0; v < n; ++v) {
    std::sort(arcs_.begin() + offsets_[v], arcs_.begin() + offsets_[v + 1],
              [](const Arc& a, const Arc& b) { return a.to < b.to; });
  }
}

// ---------------------------------------------------------------------------
// Fuzzy connectivity

WeightedGraph umap_connectivity(const Matrix& points, int n_neighbors) {
  const auto n = static_cast<size_t>(points.rows());
  if (n_neighbors < 1 || n <= static_cast<size_t>(n_neighbors)) {
    throw ArgumentError("umap connectivity: need n > n_neighbors (n=" + std::to_string(n) +
                        ", n_neighbors=" + std::to_string(n_neighbors) + ")");
  }
  const auto k = static_cast<size_t>(n_neighbors);
  const double target = std::log2(static_cast<double>(n_neighbors));

  // Directed memberships, keyed by (i, j).
  std::vector<std::vector<std::pair<std::uint32_t, double>>> directed(n);
  std::vector<std::pair<double, std::uint32_t>> dist(n);
  for (size_t i = 0; i < n; ++i) {
    dist.clear();
    for (size_t j = 0; j < n; ++j) {
      if (j == i) continue;
      dist.emplace_back((points.row(static_cast<Eigen::Index>(i)) -
                         points.row(static_cast<Eigen::Index>(j)))
                            .norm(),
                        static_cast<std::uint32_t>(j));
    }
    std::partial_sort(dist.begin(), dist.begin() + static_cast<std::ptrdiff_t>(k), dist.end());
    const double rho = dist[0].first;
    auto membership_sum = [&](double sigma) {
      double s = 0.0;
      for (size_t q = 0; q < k; ++q) s += std::exp(-std::max(0.0, dist[q].first - rho) / sigma);
      return s;
    };
    double lo = 1e-8;
    double hi = 1e3;
    for (int step = 0; step < 64; ++step) {
      const double mid = 0.5 * (lo + hi);
      if (membership_sum(mid) > target) {
        hi = mid;
      } else {
        lo = mid;
      }
    }
    const double sigma = 0.5 * (lo + hi);
    for (size_t q = 0; q < k; ++q) {
      const double w = std::exp(-std::max(0.0, dist[q].first - rho) / sigma);
      directed[i].emplace_back(dist[q].second, w);
    }
    std::sort(directed[i].begin(), directed[i].end());
  }

  auto lookup = [&directed](size_t from, std::uint32_t to) {
    const auto& list = directed[from];
    auto it = std::lower_bound(list.begin(), list.end(), std::make_pair(to, -1.0));
    return (it != list.end() && it->first == to) ? it->second : -1.0;
  };
  std::vector<WeightedEdge> edges;
  for (size_t i = 0; i < n; ++i) {
    for (const auto& [j, w_ij] : directed[i]) {
      double w_ji = lookup(j, static_cast<std::uint32_t>(i));
      // Each unordered pair once: from the lower index, or from i when j
      // did not select i.
      if (w_ji >= 0.0 && j < i) continue;
      w_ji = std::max(0.0, w_ji);
      const double w = w_ij + w_ji - w_ij * w_ji;
      if (w > 0.0) edges.push_back({static_cast<std::uint32_t>(i), j, std::min(1.0, w)});
    }
  }
  return WeightedGraph(n, std::move(edges));
}

// ---------------------------------------------------------------------------
// Modularity

std::vector<int> canonical_membership(std::span<const int> membership, int* count) {
  std::unordered_map<int, int> remap;
  std::vector<int> out(membership.size());
  for (size_t i = 0; i < membership.size(); ++i) {
    auto [it, inserted] = remap.try_emplace(membership[i], static_cast<int>(remap.size()));
    out[i] = it->second;
  }
  if (count) *count = static_cast<int>(remap.size());
  return out;
}

namespace {

// Working graph for Leiden levels: may carry self-loops after aggregation.
struct LevelGraph {
  size_t n = 0;
  std::vector<size_t> offsets;
  std::vector<std::uint32_t> to;
  std::vector<double> weight;
  std::vector<double> self;    // A_vv (twice the internal weight)
  std::vector<double> degree;  // row sums of A including self
  double two_m = 0.0;
};

LevelGraph level_from(const WeightedGraph& g) {
  LevelGraph lg;
  lg.n = g.node_count();
  lg.offsets.assign(lg.n + 1, 0);
  lg.self.assign(lg.n, 0.0);
  lg.degree.assign(lg.n, 0.0);
  for (size_t v = 0; v < lg.n; ++v) {
    for (const auto& arc : g.arcs(v)) {
      lg.to.push_back(arc.to);
      lg.weight.push_back(arc.weight);
    }
    lg.offsets[v + 1] = lg.to.size();
    lg.degree[v] = g.strength(v);
  }
  lg.two_m = 2.0 * g.total_weight();
  return lg;
}

double level_quality(const LevelGraph& g, const std::vector<int>& membership, double gamma) {
  if (g.two_m <= 0.0) return 0.0;
  std::vector<double> internal(g.n, 0.0);
  std::vector<double> total(g.n, 0.0);
  for (size_t v = 0; v < g.n; ++v) {
    const int c = membership[v];
    internal[c] += g.self[v];
    total[c] += g.degree[v];
    for (size_t a = g.offsets[v]; a < g.offsets[v + 1]; ++a) {
      if (membership[g.to[a]] == c) internal[c] += g.weight[a];
    }
  }
  double q = 0.0;
  for (size_t c = 0; c < g.n; ++c) q += internal[c] - gamma * total[c] * total[c] / g.two_m;
  return q / g.two_m;
}

std::vector<std::uint32_t> random_order(size_t n, Rng& rng) {
  std::vector<std::uint32_t> order(n);
  std::iota(order.begin(), order.end(), 0u);
  for (size_t i = n; i > 1; --i) {
    std::uniform_int_distribution<size_t> pick(0, i - 1);
    std::swap(order[i - 1], order[pick(rng)]);
  }
  return order;
}

// Sparse accumulator over community ids.
class Accumulator {
 public:
  explicit Accumulator(size_t n) : value_(n, 0.0), seen_(n, 0) {}
  void add(int key, double w) {
    if (!seen_[key]) {
      seen_[key] = 1;
      keys_.push_back(key);
    }
    value_[key] += w;
  }
  double get(int key) const { return value_[key]; }
  const std::vector<int>& keys() const { return keys_; }
  void clear() {
    for (int k : keys_) {
      value_[k] = 0.0;
      seen_[k] = 0;
    }
    keys_.clear();
  }

 private:
  std::vector<double> value_;
  std::vector<char> seen_;
  std::vector<int> keys_;
};

void move_nodes_fast(const LevelGraph& g, std::vector<int>& membership, double gamma,
                     Rng& rng) {
  const size_t n = g.n;
  std::vector<double> community_degree(n, 0.0);
  std::vector<size_t> community_size(n, 0);
  for (size_t v = 0; v < n; ++v) {
    community_degree[membership[v]] += g.degree[v];
    ++community_size[membership[v]];
  }
  std::vector<int> free_ids;
  for (size_t c = n; c-- > 0;) {
    if (community_size[c] == 0) free_ids.push_back(static_cast<int>(c));
  }
  const auto order = random_order(n, rng);
  std::deque<std::uint32_t> queue(order.begin(), order.end());
  std::vector<char> queued(n, 1);
  Accumulator links(n);

  while (!queue.empty()) {
    const std::uint32_t v = queue.front();
    queue.pop_front();
    queued[v] = 0;
    const int current = membership[v];
    for (size_t a = g.offsets[v]; a < g.offsets[v + 1]; ++a) {
      links.add(membership[g.to[a]], g.weight[a]);
    }
    const double kv = g.degree[v];
    community_degree[current] -= kv;
    --community_size[current];

    int best = current;
    double best_gain = links.get(current) - gamma * kv * community_degree[current] / g.two_m;
    for (int c : links.keys()) {
      if (c == current) continue;
      const double gain = links.get(c) - gamma * kv * community_degree[c] / g.two_m;
      if (gain > best_gain) {
        best_gain = gain;
        best = c;
      }
    }
    if (best_gain < 0.0) {
      // An empty community (gain 0) beats every option.
      if (community_size[current] == 0) {
        best = current;
      } else {
        best = free_ids.back();
        free_ids.pop_back();
      }
    }
    membership[v] = best;
    community_degree[best] += kv;
    ++community_size[best];
    if (best != current) {
      if (community_size[current] == 0) free_ids.push_back(current);
      for (size_t a = g.offsets[v]; a < g.offsets[v + 1]; ++a) {
        const std::uint32_t u = g.to[a];
        if (!queued[u] && membership[u] != best) {
          queued[u] = 1;
          queue.push_back(u);
        }
      }
    }
    links.clear();
  }
}

std::vector<int> refine_partition(const LevelGraph& g, const std::vector<int>& membership,
                                  double gamma, double theta, Rng& rng) {
  const size_t n = g.n;
  std::vector<int> refined(n);
  std::iota(refined.begin(), refined.end(), 0);
  std::vector<double> refined_degree(g.degree);
  std::vector<size_t> refined_size(n, 1);
  std::vector<double> community_degree(n, 0.0);
  std::vector<double> external(n, 0.0);  // weight from v into the rest of its community
  for (size_t v = 0; v < n; ++v) {
    community_degree[membership[v]] += g.degree[v];
    for (size_t a = g.offsets[v]; a < g.offsets[v + 1]; ++a) {
      if (membership[g.to[a]] == membership[v]) external[v] += g.weight[a];
    }
  }
  // Weight between a refined community and the rest of its community.
  std::vector<double> refined_external(external);

  Accumulator links(n);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<int> options;
  std::vector<double> gains;
  for (std::uint32_t v : random_order(n, rng)) {
    if (refined_size[refined[v]] != 1) continue;
    const int c = membership[v];
    const double kv = g.degree[v];
    const double total = community_degree[c];
    if (external[v] < gamma * kv * (total - kv) / g.two_m) continue;

    for (size_t a = g.offsets[v]; a < g.offsets[v + 1]; ++a) {
      const std::uint32_t u = g.to[a];
      if (membership[u] == c) links.add(refined[u], g.weight[a]);
    }
    options.assign(1, refined[v]);
    gains.assign(1, 0.0);
    for (int r : links.keys()) {
      if (r == refined[v]) continue;
      const double kr = refined_degree[r];
      if (refined_external[r] < gamma * kr * (total - kr) / g.two_m) continue;
      const double gain = links.get(r) - gamma * kv * kr / g.two_m;
      if (gain >= 0.0) {
        options.push_back(r);
        gains.push_back(gain);
      }
    }
    int chosen = refined[v];
    if (options.size() > 1) {
      const double top = *std::max_element(gains.begin(), gains.end());
      std::vector<double> cumulative(gains.size());
      double acc = 0.0;
      for (size_t o = 0; o < gains.size(); ++o) {
        acc += std::exp((gains[o] - top) / theta);
        cumulative[o] = acc;
      }
      const double draw = unit(rng) * acc;
      size_t pick = 0;
      while (pick + 1 < cumulative.size() && cumulative[pick] <= draw) ++pick;
      chosen = options[pick];
    }
    if (chosen != refined[v]) {
      const int old = refined[v];
      refined_degree[old] -= kv;
      refined_size[old] = 0;
      refined[v] = chosen;
      refined_degree[chosen] += kv;
      ++refined_size[chosen];
      refined_external[chosen] += external[v] - 2.0 * links.get(chosen);
    }
    links.clear();
  }
  return refined;
}

// `groups` must be canonical (0..count-1).
LevelGraph aggregate(const LevelGraph& g, const std::vector<int>& groups, int count) {
  LevelGraph out;
  out.n = static_cast<size_t>(count);
  out.self.assign(out.n, 0.0);
  out.degree.assign(out.n, 0.0);
  out.two_m = g.two_m;
  out.offsets.assign(out.n + 1, 0);
  std::vector<std::vector<std::uint32_t>> members(out.n);
  for (size_t v = 0; v < g.n; ++v) members[groups[v]].push_back(static_cast<std::uint32_t>(v));
  Accumulator links(out.n);
  for (size_t c = 0; c < out.n; ++c) {
    for (std::uint32_t v : members[c]) {
      out.self[c] += g.self[v];
      out.degree[c] += g.degree[v];
      for (size_t a = g.offsets[v]; a < g.offsets[v + 1]; ++a) {
        const int cu = groups[g.to[a]];
        if (cu == static_cast<int>(c)) {
          out.self[c] += g.weight[a];
        } else {
          links.add(cu, g.weight[a]);
        }
      }
    }
    std::vector<int> keys = links.keys();
    std::sort(keys.begin(), keys.end());
    for (int k : keys) {
      out.to.push_back(static_cast<std::uint32_t>(k));
      out.weight.push_back(links.get(k));
    }
    out.offsets[c + 1] = out.to.size();
    links.clear();
  }
  return out;
}

// Splits every community into its connected components.
std::vector<int> split_components(const LevelGraph& g, const std::vector<int>& membership,
                                  int* count) {
  std::vector<int> out(g.n, -1);
  int next = 0;
  std::vector<std::uint32_t> stack;
  for (size_t s = 0; s < g.n; ++s) {
    if (out[s] >= 0) continue;
    out[s] = next;
    stack.assign(1, static_cast<std::uint32_t>(s));
    while (!stack.empty()) {
      const std::uint32_t v = stack.back();
      stack.pop_back();
      for (size_t a = g.offsets[v]; a < g.offsets[v + 1]; ++a) {
        const std::uint32_t u = g.to[a];
        if (out[u] < 0 && membership[u] == membership[v]) {
          out[u] = next;
          stack.push_back(u);
        }
      }
    }
    ++next;
  }
  *count = next;
  return out;
}

std::vector<int> leiden_pass(const LevelGraph& base, std::vector<int> initial, double gamma,
                             Rng& rng, const LeidenOptions& options) {
  LevelGraph graph = base;
  std::vector<int> partition = canonical_membership(initial);
  std::vector<int> node_to_level(base.n);
  std::iota(node_to_level.begin(), node_to_level.end(), 0);

  while (true) {
    move_nodes_fast(graph, partition, gamma, rng);
    int count = 0;
    partition = canonical_membership(partition, &count);
    if (static_cast<size_t>(count) == graph.n) break;

    int refined_count = 0;
    std::vector<int> refined =
        options.refine
            ? canonical_membership(refine_partition(graph, partition, gamma, options.theta, rng),
                                   &refined_count)
            : partition;
    if (!options.refine) refined_count = count;
    if (static_cast<size_t>(refined_count) == graph.n) {
      // Refinement merged nothing; continue from the connected pieces.
      int pieces = 0;
      std::vector<int> split = split_components(graph, partition, &pieces);
      if (pieces == count) {
        refined = partition;
        refined_count = count;
      } else {
        partition = std::move(split);
        continue;
      }
    }
    LevelGraph next = aggregate(graph, refined, refined_count);
    std::vector<int> next_partition(static_cast<size_t>(refined_count));
    for (size_t v = 0; v < graph.n; ++v) next_partition[refined[v]] = partition[v];
    for (int& x : node_to_level) x = refined[x];
    graph = std::move(next);
    partition = std::move(next_partition);
  }
  std::vector<int> out(base.n);
  for (size_t v = 0; v < base.n; ++v) out[v] = partition[node_to_level[v]];
  return canonical_membership(out);
}

}  // namespace

double modularity(const WeightedGraph& g, std::span<const int> membership, double gamma) {
  if (membership.size() != g.node_count()) {
    throw ArgumentError("modularity: membership size does not match graph");
  }
  const std::vector<int> canon = canonical_membership(membership);
  return level_quality(level_from(g), canon, gamma);
}

Partition leiden(const WeightedGraph& g, double gamma, Rng& rng, const LeidenOptions& options,
                 std::vector<double>* quality_trace) {
  const LevelGraph base = level_from(g);
  std::vector<int> membership(base.n);
  std::iota(membership.begin(), membership.end(), 0);
  if (quality_trace) quality_trace->clear();
  for (int it = 0; it < options.max_iterations; ++it) {
    std::vector<int> next = leiden_pass(base, membership, gamma, rng, options);
    const bool stable = next == membership;
    membership = std::move(next);
    if (quality_trace) quality_trace->push_back(level_quality(base, membership, gamma));
    if (stable) break;
  }
  Partition p;
  p.community = canonical_membership(membership, &p.count);
  p.quality = level_quality(base, p.community, gamma);
  p.resolution = gamma;
  return p;
}

bool communities_connected(const WeightedGraph& g, std::span<const int> membership) {
  const LevelGraph lg = level_from(g);
  int count = 0;
  std::vector<int> canon = canonical_membership(membership, &count);
  int pieces = 0;
  split_components(lg, canon, &pieces);
  return pieces == count;
}

// ---------------------------------------------------------------------------
// Resolution scan

ScanResult resolution_scan(const WeightedGraph& g, int target_count, std::uint64_t seed,
                           const ScanOptions& options) {
  if (target_count < 1) throw ArgumentError("resolution scan: target count must be >= 1");
  if (options.steps < 1 || !(options.gamma_lo > 0.0) || options.gamma_hi < options.gamma_lo) {
    throw ArgumentError("resolution scan: invalid gamma grid");
  }
  ScanResult result;
  std::vector<Partition> runs;
  for (int s = 0; s < options.steps; ++s) {
    const double t = options.steps == 1 ? 0.0 : static_cast<double>(s) / (options.steps - 1);
    const double gamma = options.gamma_lo * std::pow(options.gamma_hi / options.gamma_lo, t);
    Partition best;
    best.quality = -std::numeric_limits<double>::infinity();
    for (int r = 0; r < std::max(1, options.restarts); ++r) {
      std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                        static_cast<std::uint32_t>(s), static_cast<std::uint32_t>(r)};
      Rng rng(seq);
      Partition p = leiden(g, gamma, rng, options.leiden);
      if (p.quality > best.quality) best = std::move(p);
    }
    result.entries.push_back({gamma, best.count, best.quality});
    runs.push_back(std::move(best));
  }
  size_t chosen = 0;
  auto better = [&](size_t a, size_t b) {  // is a preferable to b
    const int da = std::abs(runs[a].count - target_count);
    const int db = std::abs(runs[b].count - target_count);
    if (da != db) return da < db;
    return runs[a].quality > runs[b].quality;
  };
  for (size_t r = 1; r < runs.size(); ++r) {
    if (better(r, chosen)) chosen = r;
  }
  result.exact = runs[chosen].count == target_count;
  result.partition = std::move(runs[chosen]);
  return result;
}

std::string scan_to_json(const ScanResult& scan) {
  nlohmann::json doc;
  doc["selected"] = {{"gamma", scan.partition.resolution},
                     {"communities", scan.partition.count},
                     {"modularity", scan.partition.quality},
                     {"exact", scan.exact}};
  nlohmann::json entries = nlohmann::json::array();
  for (const ScanEntry& e : scan.entries) {
    entries.push_back({{"gamma", e.gamma}, {"communities", e.count}, {"modularity", e.quality}});
  }
  doc["scan"] = std::move(entries);
  return doc.dump(2) + "\n";
}

// ---------------------------------------------------------------------------
// k-means baseline

KMeansPartition kmeans_baseline(const Matrix& points, int k, std::uint64_t seed, int restarts) {
  const KMeansResult km = kmeans(points, k, seed, restarts);
  KMeansPartition out;
  out.partition.community = canonical_membership(km.labels, &out.partition.count);
  out.partition.quality = std::numeric_limits<double>::quiet_NaN();
  out.partition.resolution = std::numeric_limits<double>::quiet_NaN();
  out.inertia = km.inertia;
  return out;
}

}  // namespace lace
