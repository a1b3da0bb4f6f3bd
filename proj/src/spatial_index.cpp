#include "lace/spatial_index.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace lace {

namespace {

constexpr size_t kLeafSize = 8;

double coord(Point p, int axis) { return axis == 0 ? p.x : p.y; }

}  // namespace

KdTree::KdTree(std::span<const Point> points)
    : points_(points.begin(), points.end()), order_(points.size()) {
  std::iota(order_.begin(), order_.end(), 0u);
  build(0, order_.size(), 0);
}

void KdTree::build(size_t lo, size_t hi, int depth) {
  if (hi - lo <= kLeafSize) return;
  const int axis = depth % 2;
  const size_t mid = lo + (hi - lo) / 2;
  std::nth_element(order_.begin() + lo, order_.begin() + mid,
                   order_.begin() + hi,
                   [&](std::uint32_t a, std::uint32_t b) {
                     const double ca = coord(points_[a], axis);
                     const double cb = coord(points_[b], axis);
                     return ca < cb || (ca == cb && a < b);
                   });
  build(lo, mid, depth + 1);
  build(mid + 1, hi, depth + 1);
}

std::vector<Neighbor> KdTree::nearest(Point query, size_t k,
                                      std::uint32_t skip) const {
  std::vector<Candidate> heap;
  heap.reserve(k + 1);
  if (k > 0 && !order_.empty()) {
    search_nearest(0, order_.size(), 0, query, k, skip, heap);
  }
  std::sort_heap(heap.begin(), heap.end());
  std::vector<Neighbor> out;
  out.reserve(heap.size());
  for (const Candidate& c : heap) out.push_back({c.index, std::sqrt(c.d2)});
  return out;
}

void KdTree::search_nearest(size_t lo, size_t hi, int depth, Point q, size_t k,
                            std::uint32_t skip,
                            std::vector<Candidate>& heap) const {
  auto offer = [&](std::uint32_t idx) {
    if (idx == skip) return;
    const Candidate c{squared_distance(q, points_[idx]), idx};
    if (heap.size() < k) {
      heap.push_back(c);
      std::push_heap(heap.begin(), heap.end());
    } else if (c < heap.front()) {
      std::pop_heap(heap.begin(), heap.end());
      heap.back() = c;
      std::push_heap(heap.begin(), heap.end());
    }
  };
  if (hi - lo <= kLeafSize) {
    for (size_t i = lo; i < hi; ++i) offer(order_[i]);
    return;
  }
  const int axis = depth % 2;
  const size_t mid = lo + (hi - lo) / 2;
  const std::uint32_t pivot = order_[mid];
  const double diff = coord(q, axis) - coord(points_[pivot], axis);
  const bool go_left = diff < 0.0;
  if (go_left) {
    search_nearest(lo, mid, depth + 1, q, k, skip, heap);
  } else {
    search_nearest(mid + 1, hi, depth + 1, q, k, skip, heap);
  }
  offer(pivot);
  // Ties must be visited, so prune only on strictly larger plane distance.
  if (heap.size() < k || diff * diff <= heap.front().d2) {
    if (go_left) {
      search_nearest(mid + 1, hi, depth + 1, q, k, skip, heap);
    } else {
      search_nearest(lo, mid, depth + 1, q, k, skip, heap);
    }
  }
}

std::vector<std::uint32_t> KdTree::within(Point query, double radius) const {
  std::vector<std::uint32_t> out;
  if (!order_.empty() && radius > 0.0) {
    search_within(0, order_.size(), 0, query, radius * radius, out);
  }
  std::sort(out.begin(), out.end());
  return out;
}

void KdTree::search_within(size_t lo, size_t hi, int depth, Point q, double r2,
                           std::vector<std::uint32_t>& out) const {
  if (hi - lo <= kLeafSize) {
    for (size_t i = lo; i < hi; ++i) {
      if (squared_distance(q, points_[order_[i]]) < r2) out.push_back(order_[i]);
    }
    return;
  }
  const int axis = depth % 2;
  const size_t mid = lo + (hi - lo) / 2;
  const std::uint32_t pivot = order_[mid];
  const double diff = coord(q, axis) - coord(points_[pivot], axis);
  if (squared_distance(q, points_[pivot]) < r2) out.push_back(pivot);
  if (diff < 0.0 || diff * diff < r2) search_within(lo, mid, depth + 1, q, r2, out);
  if (diff >= 0.0 || diff * diff < r2) search_within(mid + 1, hi, depth + 1, q, r2, out);
}

}  // namespace lace
