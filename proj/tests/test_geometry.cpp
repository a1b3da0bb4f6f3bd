#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "lace/geometry.hpp"

using namespace lace;

namespace {

std::vector<Point> square(double x0, double y0, double s) {
  return {{x0, y0}, {x0 + s, y0}, {x0 + s, y0 + s}, {x0, y0 + s}};
}

std::vector<Point> regular(int k, double r, Point c = {0, 0}) {
  std::vector<Point> p;
  for (int i = 0; i < k; ++i) {
    const double t = 2 * std::numbers::pi * i / k;
    p.push_back({c.x + r * std::cos(t), c.y + r * std::sin(t)});
  }
  return p;
}

}  // namespace

TEST_SUITE("geometry") {

TEST_CASE("shoelace area and orientation") {
  auto sq = square(0, 0, 1);
  CHECK(signed_area(sq) == doctest::Approx(1.0));
  std::reverse(sq.begin(), sq.end());
  CHECK(signed_area(sq) == doctest::Approx(-1.0));
}

TEST_CASE("centroid of a square is its center") {
  const Point c = polygon_centroid(square(2, 3, 4));
  CHECK(c.x == doctest::Approx(4.0));
  CHECK(c.y == doctest::Approx(5.0));
}

TEST_CASE("centroid matches a Monte Carlo estimate on an L shape") {
  const std::vector<Point> l{{0, 0}, {3, 0}, {3, 1}, {1, 1}, {1, 3}, {0, 3}};
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(0.0, 3.0);
  double sx = 0, sy = 0;
  int hits = 0;
  for (int i = 0; i < 200000; ++i) {
    const Point p{u(rng), u(rng)};
    if (point_in_polygon(l, p)) {
      sx += p.x;
      sy += p.y;
      ++hits;
    }
  }
  const Point c = polygon_centroid(l);
  CHECK(c.x == doctest::Approx(sx / hits).epsilon(0.01));
  CHECK(c.y == doctest::Approx(sy / hits).epsilon(0.01));
  CHECK(signed_area(l) == doctest::Approx(5.0));
}

TEST_CASE("perimeter and hull") {
  CHECK(perimeter(square(0, 0, 2)) == doctest::Approx(8.0));
  const std::vector<Point> pts{{0, 0}, {2, 0}, {1, 1}, {2, 2}, {0, 2}, {1, 0.5}};
  const auto hull = convex_hull(pts);
  CHECK(hull.size() == 4);
  CHECK(signed_area(hull) == doctest::Approx(4.0));
}

TEST_CASE("simplicity") {
  CHECK(is_simple_polygon(square(0, 0, 1)));
  const std::vector<Point> bowtie{{0, 0}, {1, 1}, {1, 0}, {0, 1}};
  CHECK_FALSE(is_simple_polygon(bowtie));
  const std::vector<Point> spike{{0, 0}, {2, 0}, {1, 0}, {1, 1}};
  CHECK_FALSE(is_simple_polygon(spike));
}

TEST_CASE("central moments of a rectangle") {
  // w x h rectangle: mu_xx / A = w^2 / 12.
  const std::vector<Point> r{{0, 0}, {4, 0}, {4, 2}, {0, 2}};
  const CentralMoments m = normalized_central_moments(r);
  CHECK(m.xx == doctest::Approx(16.0 / 12.0));
  CHECK(m.yy == doctest::Approx(4.0 / 12.0));
  CHECK(m.xy == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("clipping keeps the part inside the box") {
  const auto clipped = clip_to_box(square(-1, -1, 2), 10, 10);
  CHECK(signed_area(clipped) == doctest::Approx(1.0));
  for (const Point& p : clipped) {
    CHECK(p.x >= 0.0);
    CHECK(p.y >= 0.0);
  }
  const auto inside = clip_to_box(regular(16, 3, {5, 5}), 10, 10);
  CHECK(signed_area(inside) == doctest::Approx(signed_area(regular(16, 3))));
  CHECK(clip_to_box(square(20, 20, 1), 10, 10).empty());
}

}  // TEST_SUITE
