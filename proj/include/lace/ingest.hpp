#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "lace/geometry.hpp"
#include "lace/pgm.hpp"

namespace lace {

// One segmented cell. The polygon is stored with positive orientation
// (counter-clockwise in a y-up frame) and the centroid is the area-weighted
// polygon centroid.
struct Cell {
  std::int64_t id = 0;
  std::vector<Point> polygon;
  Point centroid;

  double area() const { return signed_area(polygon); }
};

struct CellSet {
  std::vector<Cell> cells;
  int width = 0;
  int height = 0;

  size_t size() const { return cells.size(); }
  std::vector<Point> centroids() const;
};

enum class RoiCode : std::uint8_t {
  kOutside = 0,
  kInterior = 1,
  kSuperior = 2,
  kInferior = 3,
};

struct RoiMask {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> codes;  // row-major

  RoiCode at(int x, int y) const {
    return static_cast<RoiCode>(codes[static_cast<size_t>(y) * width + x]);
  }
  bool contains(int x, int y) const {
    return x >= 0 && y >= 0 && x < width && y < height;
  }
};

enum class CellFormat { kJsonPolygons, kLabelRaster };

CellFormat parse_cell_format(std::string_view name);

// Builds a validated cell: orientation normalized, centroid computed.
// Throws ValidationError naming the id for degenerate or self-intersecting
// polygons.
Cell make_cell(std::int64_t id, std::vector<Point> polygon);

// Validates ids and extents; cells must already be built with make_cell.
void validate_cell_set(const CellSet& cells);

CellSet parse_cells_json(std::string_view text);
CellSet cells_from_label_raster(const PgmImage& labels);
CellSet load_cells(const std::filesystem::path& path, CellFormat format);

std::string cells_to_json(const CellSet& cells);
void write_cells_json(const std::filesystem::path& path, const CellSet& cells);

// Outer contour of the pixels for which `inside(x, y)` holds, traced along
// pixel edges. The region must be 4-connected and contain (start_x,
// start_y), which must be its first pixel in raster order. Collinear
// vertices are not emitted, so a filled k x k block yields 4 corners.
template <typename InsideFn>
std::vector<Point> trace_outer_contour(int start_x, int start_y,
                                       InsideFn inside);

RoiMask roi_mask_from_pgm(const PgmImage& image);
RoiMask load_roi_mask(const std::filesystem::path& path);
void validate_roi_mask(const RoiMask& mask);
PgmImage roi_mask_to_pgm(const RoiMask& mask);

// ---------------------------------------------------------------------------

template <typename InsideFn>
std::vector<Point> trace_outer_contour(int start_x, int start_y,
                                       InsideFn inside) {
  struct Dir {
    int dx;
    int dy;
  };
  auto floor_half = [](int twice) { return twice >= 0 ? twice / 2 : (twice - 1) / 2; };
  std::vector<Point> vertices;
  vertices.push_back({static_cast<double>(start_x), static_cast<double>(start_y)});
  int vx = start_x + 1;
  int vy = start_y;
  Dir d{1, 0};
  while (!(vx == start_x && vy == start_y)) {
    const Dir left{-d.dy, d.dx};
    // Pixels ahead of the vertex, on either side of the travel direction.
    const int ahead_left_x = floor_half(2 * vx + d.dx + left.dx);
    const int ahead_left_y = floor_half(2 * vy + d.dy + left.dy);
    const int ahead_right_x = floor_half(2 * vx + d.dx - left.dx);
    const int ahead_right_y = floor_half(2 * vy + d.dy - left.dy);
    const bool al = inside(ahead_left_x, ahead_left_y);
    const bool ar = inside(ahead_right_x, ahead_right_y);
    Dir next = d;
    if (!al) {
      next = left;
    } else if (ar) {
      next = Dir{d.dy, -d.dx};
    }
    if (next.dx != d.dx || next.dy != d.dy) {
      vertices.push_back({static_cast<double>(vx), static_cast<double>(vy)});
    }
    d = next;
    vx += d.dx;
    vy += d.dy;
  }
  return vertices;
}

}  // namespace lace
