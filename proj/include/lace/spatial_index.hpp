#pragma once

#include <cstdint>
#include <limits>
#include <span>
#include <vector>

#include "lace/geometry.hpp"

namespace lace {

struct Neighbor {
  std::uint32_t index = 0;
  double distance = 0.0;
};

// Static 2D kd-tree over a point set. Neighbor order is by (distance,
// index), so equidistant points resolve to the lower index.
class KdTree {
 public:
  static constexpr std::uint32_t kNoSkip = std::numeric_limits<std::uint32_t>::max();

  explicit KdTree(std::span<const Point> points);

  size_t size() const { return points_.size(); }

  // The k nearest points to `query`, ascending, never returning `skip`.
  std::vector<Neighbor> nearest(Point query, size_t k,
                                std::uint32_t skip = kNoSkip) const;

  // Indices of points strictly closer than `radius`, ascending by index.
  std::vector<std::uint32_t> within(Point query, double radius) const;

 private:
  struct Candidate {
    double d2;
    std::uint32_t index;
    bool operator<(const Candidate& o) const {
      return d2 < o.d2 || (d2 == o.d2 && index < o.index);
    }
  };

  void build(size_t lo, size_t hi, int depth);
  void search_nearest(size_t lo, size_t hi, int depth, Point q, size_t k,
                      std::uint32_t skip, std::vector<Candidate>& heap) const;
  void search_within(size_t lo, size_t hi, int depth, Point q, double r2,
                     std::vector<std::uint32_t>& out) const;

  std::vector<Point> points_;
  std::vector<std::uint32_t> order_;  // tree layout: positions -> point index
};

}  // namespace lace
