#include "lace/geometry.hpp"

#include <algorithm>
#include <cmath>

namespace lace {

namespace {

double cross(Point o, Point a, Point b) {
  return (a.x - o.x) * (b.y - o.y) - (a.y - o.y) * (b.x - o.x);
}

int sign(double v) { return (v > 0.0) - (v < 0.0); }

bool on_segment(Point a, Point b, Point p) {
  return std::min(a.x, b.x) <= p.x && p.x <= std::max(a.x, b.x) &&
         std::min(a.y, b.y) <= p.y && p.y <= std::max(a.y, b.y);
}

bool segments_touch(Point a, Point b, Point c, Point d) {
  const int d1 = sign(cross(c, d, a));
  const int d2 = sign(cross(c, d, b));
  const int d3 = sign(cross(a, b, c));
  const int d4 = sign(cross(a, b, d));
  if (d1 * d2 < 0 && d3 * d4 < 0) return true;
  if (d1 == 0 && on_segment(c, d, a)) return true;
  if (d2 == 0 && on_segment(c, d, b)) return true;
  if (d3 == 0 && on_segment(a, b, c)) return true;
  if (d4 == 0 && on_segment(a, b, d)) return true;
  return false;
}

}  // namespace

double squared_distance(Point a, Point b) {
  const double dx = a.x - b.x;
  const double dy = a.y - b.y;
  return dx * dx + dy * dy;
}

double distance(Point a, Point b) { return std::sqrt(squared_distance(a, b)); }

double signed_area(std::span<const Point> polygon) {
  const size_t n = polygon.size();
  if (n < 3) return 0.0;
  // Shift to the first vertex to limit cancellation for far-away polygons.
  const Point o = polygon[0];
  double twice = 0.0;
  for (size_t i = 1; i + 1 < n; ++i) {
    twice += cross(o, polygon[i], polygon[i + 1]);
  }
  return 0.5 * twice;
}

Point polygon_centroid(std::span<const Point> polygon) {
  const size_t n = polygon.size();
  const Point o = polygon[0];
  double twice_area = 0.0;
  double cx = 0.0;
  double cy = 0.0;
  for (size_t i = 0; i < n; ++i) {
    const Point p = polygon[i] - o;
    const Point q = polygon[(i + 1) % n] - o;
    const double c = p.x * q.y - q.x * p.y;
    twice_area += c;
    cx += (p.x + q.x) * c;
    cy += (p.y + q.y) * c;
  }
  return {o.x + cx / (3.0 * twice_area), o.y + cy / (3.0 * twice_area)};
}

double perimeter(std::span<const Point> polygon) {
  double total = 0.0;
  for (size_t i = 0; i < polygon.size(); ++i) {
    total += distance(polygon[i], polygon[(i + 1) % polygon.size()]);
  }
  return total;
}

std::vector<Point> convex_hull(std::span<const Point> points) {
  std::vector<Point> pts(points.begin(), points.end());
  std::sort(pts.begin(), pts.end(), [](Point a, Point b) {
    return a.x < b.x || (a.x == b.x && a.y < b.y);
  });
  pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
  if (pts.size() < 3) return pts;

  std::vector<Point> hull(2 * pts.size());
  size_t k = 0;
  for (const Point& p : pts) {
    while (k >= 2 && cross(hull[k - 2], hull[k - 1], p) <= 0.0) --k;
    hull[k++] = p;
  }
  for (size_t i = pts.size() - 1, lower = k + 1; i-- > 0;) {
    while (k >= lower && cross(hull[k - 2], hull[k - 1], pts[i]) <= 0.0) --k;
    hull[k++] = pts[i];
  }
  hull.resize(k - 1);
  return hull;
}

bool is_simple_polygon(std::span<const Point> polygon) {
  const size_t n = polygon.size();
  if (n < 3) return false;
  for (size_t i = 0; i < n; ++i) {
    const Point a = polygon[i];
    const Point b = polygon[(i + 1) % n];
    if (a == b) return false;
    for (size_t j = i + 1; j < n; ++j) {
      const Point c = polygon[j];
      const Point d = polygon[(j + 1) % n];
      const bool adjacent = (j == i + 1) || (i == 0 && j == n - 1);
      if (adjacent) {
        // Adjacent edges share one vertex; they must not fold back onto
        // each other.
        const Point shared = (j == i + 1) ? b : a;
        const Point other_first = (j == i + 1) ? a : b;
        const Point other_second = (j == i + 1) ? d : c;
        if (cross(shared, other_first, other_second) == 0.0) {
          const Point u = other_first - shared;
          const Point v = other_second - shared;
          if (u.x * v.x + u.y * v.y > 0.0) return false;
        }
        continue;
      }
      if (segments_touch(a, b, c, d)) return false;
    }
  }
  return true;
}

bool point_in_polygon(std::span<const Point> polygon, Point p) {
  bool inside = false;
  const size_t n = polygon.size();
  for (size_t i = 0, j = n - 1; i < n; j = i++) {
    const Point a = polygon[i];
    const Point b = polygon[j];
    if ((a.y > p.y) != (b.y > p.y)) {
      const double x_cross = a.x + (p.y - a.y) * (b.x - a.x) / (b.y - a.y);
      if (p.x < x_cross) inside = !inside;
    }
  }
  return inside;
}

CentralMoments normalized_central_moments(std::span<const Point> polygon) {
  const Point c = polygon_centroid(polygon);
  const size_t n = polygon.size();
  double twice_area = 0.0;
  double ixx = 0.0;
  double iyy = 0.0;
  double ixy = 0.0;
  for (size_t i = 0; i < n; ++i) {
    const Point p = polygon[i] - c;
    const Point q = polygon[(i + 1) % n] - c;
    const double k = p.x * q.y - q.x * p.y;
    twice_area += k;
    ixx += (p.x * p.x + p.x * q.x + q.x * q.x) * k;
    iyy += (p.y * p.y + p.y * q.y + q.y * q.y) * k;
    ixy += (p.x * q.y + 2.0 * p.x * p.y + 2.0 * q.x * q.y + q.x * p.y) * k;
  }
  const double area = 0.5 * twice_area;
  return {ixx / (12.0 * area), ixy / (24.0 * area), iyy / (12.0 * area)};
}

std::vector<Point> clip_to_box(std::span<const Point> polygon, double width,
                               double height) {
  std::vector<Point> out(polygon.begin(), polygon.end());
  // Each edge of the box: keep points with value(p) >= 0.
  auto clip = [&out](auto value) {
    std::vector<Point> in;
    in.swap(out);
    const size_t n = in.size();
    for (size_t i = 0; i < n; ++i) {
      const Point cur = in[i];
      const Point prev = in[(i + n - 1) % n];
      const double vc = value(cur);
      const double vp = value(prev);
      if (vc >= 0.0) {
        if (vp < 0.0) {
          const double t = vp / (vp - vc);
          out.push_back(prev + t * (cur - prev));
        }
        out.push_back(cur);
      } else if (vp >= 0.0) {
        const double t = vp / (vp - vc);
        out.push_back(prev + t * (cur - prev));
      }
    }
  };
  clip([](Point p) { return p.x; });
  clip([width](Point p) { return width - p.x; });
  clip([](Point p) { return p.y; });
  clip([height](Point p) { return height - p.y; });

  // Drop repeated vertices introduced at box corners. Intersections are
  // snapped onto the box to absorb interpolation round-off.
  std::vector<Point> cleaned;
  for (Point p : out) {
    p.x = std::clamp(p.x, 0.0, width);
    p.y = std::clamp(p.y, 0.0, height);
    if (cleaned.empty() || !(cleaned.back() == p)) cleaned.push_back(p);
  }
  while (cleaned.size() > 1 && cleaned.front() == cleaned.back()) {
    cleaned.pop_back();
  }
  return cleaned;
}

}  // namespace lace
