#pragma once

#include <span>
#include <vector>

namespace lace {

struct Point {
  double x = 0.0;
  double y = 0.0;

  friend bool operator==(const Point&, const Point&) = default;
};

inline Point operator-(Point a, Point b) { return {a.x - b.x, a.y - b.y}; }
inline Point operator+(Point a, Point b) { return {a.x + b.x, a.y + b.y}; }
inline Point operator*(double s, Point p) { return {s * p.x, s * p.y}; }

double squared_distance(Point a, Point b);
double distance(Point a, Point b);

// Shoelace signed area; positive for counter-clockwise vertex order in a
// y-up frame (equivalently, positive orientation of the coordinates).
double signed_area(std::span<const Point> polygon);

// Area-weighted polygon centroid. Requires nonzero signed area.
Point polygon_centroid(std::span<const Point> polygon);

double perimeter(std::span<const Point> polygon);

// Andrew's monotone chain. Returns the hull with positive orientation and
// without collinear points.
std::vector<Point> convex_hull(std::span<const Point> points);

// True when no two non-adjacent edges touch and no adjacent edges overlap.
bool is_simple_polygon(std::span<const Point> polygon);

// Even-odd rule; points exactly on the boundary may fall either way.
bool point_in_polygon(std::span<const Point> polygon, Point p);

// Second central moments of the polygon region, divided by its area:
// (mu20, mu11, mu02). Computed exactly from Green's theorem.
struct CentralMoments {
  double xx = 0.0;
  double xy = 0.0;
  double yy = 0.0;
};
CentralMoments normalized_central_moments(std::span<const Point> polygon);

// Sutherland-Hodgman clip against the axis-aligned box [0,w] x [0,h].
std::vector<Point> clip_to_box(std::span<const Point> polygon, double width,
                               double height);

}  // namespace lace
