#include <doctest.h>

#include <cmath>
#include <random>

#include "lace/error.hpp"
#include "lace/laplace.hpp"

using namespace lace;

namespace {

RoiMask rectangle(int w, int h) {
  RoiMask m;
  m.width = w;
  m.height = h;
  m.codes.assign(static_cast<size_t>(w) * h, 1);
  for (int x = 0; x < w; ++x) {
    m.codes[x] = 2;
    m.codes[static_cast<size_t>(h - 1) * w + x] = 3;
  }
  return m;
}

double max_rectangle_error(const LaplaceField& f) {
  double err = 0;
  for (int y = 0; y < f.height; ++y)
    for (int x = 0; x < f.width; ++x)
      err = std::max(err, std::abs(f.at(x, y) - (f.height - 1.0 - y) / (f.height - 1.0)));
  return err;
}

// Annulus with INFERIOR inside r1 and SUPERIOR outside r2; the continuous
// solution is log(r / r1) / log(r2 / r1).
double annulus_error(int n) {
  RoiMask m;
  m.width = n;
  m.height = n;
  m.codes.assign(static_cast<size_t>(n) * n, 1);
  const double c = n / 2.0, r1 = 0.15 * n, r2 = 0.45 * n;
  for (int y = 0; y < n; ++y)
    for (int x = 0; x < n; ++x) {
      const double r = std::hypot(x + 0.5 - c, y + 0.5 - c);
      if (r < r1) m.codes[static_cast<size_t>(y) * n + x] = 3;
      if (r > r2) m.codes[static_cast<size_t>(y) * n + x] = 2;
    }
  LaplaceOptions o;
  o.tolerance = 1e-9;
  const LaplaceField f = solve_laplace(m, o);
  double err = 0;
  for (int y = 0; y < n; ++y)
    for (int x = 0; x < n; ++x) {
      if (f.code(x, y) != RoiCode::kInterior) continue;
      const double r = std::hypot(x + 0.5 - c, y + 0.5 - c);
      err = std::max(err, std::abs(f.at(x, y) - std::log(r / r1) / std::log(r2 / r1)));
    }
  return err;
}

Cell box_cell(std::int64_t id, double x0, double y0, double x1, double y1) {
  return make_cell(id, {{x0, y0}, {x1, y0}, {x1, y1}, {x0, y1}});
}

}  // namespace

TEST_SUITE("laplace") {

TEST_CASE("rectangle gives the linear profile") {
  const LaplaceField f = solve_laplace(rectangle(64, 128));
  CHECK(max_rectangle_error(f) <= 1e-4);
  CHECK(f.residual < 1e-6);
}

TEST_CASE("rectangle without the multilevel start") {
  LaplaceOptions o;
  o.multilevel = false;
  CHECK(max_rectangle_error(solve_laplace(rectangle(20, 40), o)) <= 1e-4);
}

TEST_CASE("single interior row is one half") {
  const LaplaceField f = solve_laplace(rectangle(7, 3));
  for (int x = 0; x < 7; ++x) CHECK(f.at(x, 1) == doctest::Approx(0.5).epsilon(1e-6));
}

TEST_CASE("L-shaped region obeys the maximum principle") {
  RoiMask m = rectangle(40, 40);
  for (int y = 1; y < 25; ++y)
    for (int x = 20; x < 40; ++x) m.codes[static_cast<size_t>(y) * 40 + x] = 0;
  for (int x = 20; x < 40; ++x) m.codes[x] = 0;
  const LaplaceField f = solve_laplace(m);
  CHECK(f.residual <= 1e-6);
  for (size_t i = 0; i < f.potential.size(); ++i) {
    if (f.codes[i] != 1) continue;
    CHECK(f.potential[i] >= 0.0);
    CHECK(f.potential[i] <= 1.0);
  }
}

TEST_CASE("refinement reduces the error on an annulus") {
  const double e32 = annulus_error(32);
  const double e64 = annulus_error(64);
  const double e128 = annulus_error(128);
  CHECK(e64 < e32);
  CHECK(e128 < e64);
}

TEST_CASE("errors: unreachable interior, bad omega, no convergence") {
  RoiMask m = rectangle(10, 10);
  // Two interior pixels walled off by OUTSIDE.
  for (int y = 3; y < 7; ++y)
    for (int x = 3; x < 7; ++x) m.codes[static_cast<size_t>(y) * 10 + x] = 0;
  m.codes[4 * 10 + 4] = 1;
  m.codes[4 * 10 + 5] = 1;
  CHECK_THROWS_AS(solve_laplace(m), ValidationError);

  LaplaceOptions o;
  o.omega = 2.0;
  CHECK_THROWS_AS(solve_laplace(rectangle(8, 8), o), ArgumentError);

  o.omega = 1.9;
  o.max_iterations = 2;
  o.multilevel = false;
  try {
    solve_laplace(rectangle(30, 60), o);
    FAIL("expected ConvergenceError");
  } catch (const ConvergenceError& e) {
    CHECK(e.residual() > 1e-6);
  }
}

TEST_CASE("cell coordinates: symmetric cell sits at one half") {
  const LaplaceField f = solve_laplace(rectangle(20, 101));
  CellSet cs;
  cs.width = 20;
  cs.height = 101;
  cs.cells.push_back(box_cell(1, 5.2, 40.2, 9.8, 60.8));
  const auto lc = cell_laplace_coordinates(f, cs);
  CHECK(lc.ell[0] == doctest::Approx(0.5).epsilon(1e-6));
  CHECK(lc.warnings.empty());
}

TEST_CASE("cell coordinates equal a brute-force pixel scan") {
  RoiMask m = rectangle(30, 30);
  for (int y = 5; y < 20; ++y) m.codes[static_cast<size_t>(y) * 30 + 25] = 0;
  const LaplaceField f = solve_laplace(m);
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  CellSet cs;
  cs.width = 30;
  cs.height = 30;
  for (int i = 0; i < 25; ++i) {
    const double x = 3 + 24 * u(rng), y = 3 + 24 * u(rng), r = 1 + 2 * u(rng);
    cs.cells.push_back(make_cell(i, {{x - r, y - r}, {x + r, y - 0.5 * r}, {x + 0.3 * r, y + r}}));
  }
  const auto lc = cell_laplace_coordinates(f, cs);
  for (size_t i = 0; i < cs.size(); ++i) {
    double sum = 0;
    int count = 0;
    for (int y = 0; y < 30; ++y)
      for (int x = 0; x < 30; ++x)
        if (f.code(x, y) == RoiCode::kInterior && point_in_polygon(cs.cells[i].polygon, {x + 0.5, y + 0.5})) {
          sum += f.at(x, y);
          ++count;
        }
    if (count > 0) CHECK(lc.ell[i] == doctest::Approx(sum / count).epsilon(1e-12));
    CHECK(lc.ell[i] >= 0.0);
    CHECK(lc.ell[i] <= 1.0);
  }
}

TEST_CASE("cells off the interior fall back with a warning") {
  const LaplaceField f = solve_laplace(rectangle(10, 10));
  CellSet cs;
  cs.width = 10;
  cs.height = 10;
  cs.cells.push_back(box_cell(3, 2.0, 0.1, 4.0, 0.9));  // inside the superior row only
  const auto lc = cell_laplace_coordinates(f, cs);
  REQUIRE(lc.warnings.size() == 1);
  CHECK(lc.warnings[0].find("3") != std::string::npos);
  CHECK(lc.ell[0] == doctest::Approx(8.0 / 9.0).epsilon(1e-5));
}

TEST_CASE("coordinates do not depend on cell ids") {
  const LaplaceField f = solve_laplace(rectangle(12, 12));
  CellSet a;
  a.width = a.height = 12;
  a.cells = {box_cell(1, 1, 1, 4, 4), box_cell(2, 6, 6, 9, 10)};
  CellSet b = a;
  b.cells[0].id = 90;
  b.cells[1].id = 17;
  CHECK(cell_laplace_coordinates(f, a).ell == cell_laplace_coordinates(f, b).ell);
}

TEST_CASE("pgm dump scales to 16 bits") {
  const LaplaceField f = solve_laplace(rectangle(4, 3));
  const PgmImage img = field_to_pgm(f);
  CHECK(img.maxval == 65535);
  CHECK(img.at(0, 0) == 65535);
  CHECK(img.at(0, 2) == 0);
  CHECK(img.at(0, 1) == 32768);
}

}  // TEST_SUITE
