#include "lace/laplace.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "lace/error.hpp"

namespace lace {

namespace {

constexpr int kCoarsestSide = 24;

bool is_open(std::uint8_t c) { return c != static_cast<std::uint8_t>(RoiCode::kOutside); }

void check_reachability(const RoiMask& mask) {
  const size_t count = mask.codes.size();
  std::vector<char> seen(count, 0);
  std::vector<size_t> stack;
  for (size_t i = 0; i < count; ++i) {
    const auto c = static_cast<RoiCode>(mask.codes[i]);
    if (c == RoiCode::kSuperior || c == RoiCode::kInferior) {
      seen[i] = 1;
      stack.push_back(i);
    }
  }
  const int w = mask.width;
  const int h = mask.height;
  while (!stack.empty()) {
    const size_t cur = stack.back();
    stack.pop_back();
    const int x = static_cast<int>(cur % w);
    const int y = static_cast<int>(cur / w);
    const int nx[4] = {x - 1, x + 1, x, x};
    const int ny[4] = {y, y, y - 1, y + 1};
    for (int k = 0; k < 4; ++k) {
      if (nx[k] < 0 || ny[k] < 0 || nx[k] >= w || ny[k] >= h) continue;
      const size_t idx = static_cast<size_t>(ny[k]) * w + nx[k];
      if (!seen[idx] && mask.codes[idx] == static_cast<std::uint8_t>(RoiCode::kInterior)) {
        seen[idx] = 1;
        stack.push_back(idx);
      }
    }
  }
  for (size_t i = 0; i < count; ++i) {
    if (mask.codes[i] == static_cast<std::uint8_t>(RoiCode::kInterior) && !seen[i]) {
      throw ValidationError("laplace: interior pixel (" + std::to_string(i % w) + ", " +
                            std::to_string(i / w) + ") is not connected to any boundary");
    }
  }
}

RoiMask coarsen(const RoiMask& fine) {
  RoiMask coarse;
  coarse.width = (fine.width + 1) / 2;
  coarse.height = (fine.height + 1) / 2;
  coarse.codes.assign(static_cast<size_t>(coarse.width) * coarse.height, 0);
  for (int y = 0; y < coarse.height; ++y) {
    for (int x = 0; x < coarse.width; ++x) {
      bool sup = false;
      bool inf = false;
      bool interior = false;
      for (int dy = 0; dy < 2; ++dy) {
        for (int dx = 0; dx < 2; ++dx) {
          const int fx = 2 * x + dx;
          const int fy = 2 * y + dy;
          if (!fine.contains(fx, fy)) continue;
          const RoiCode c = fine.at(fx, fy);
          sup |= c == RoiCode::kSuperior;
          inf |= c == RoiCode::kInferior;
          interior |= c == RoiCode::kInterior;
        }
      }
      RoiCode c = RoiCode::kOutside;
      if (sup) {
        c = RoiCode::kSuperior;
      } else if (inf) {
        c = RoiCode::kInferior;
      } else if (interior) {
        c = RoiCode::kInterior;
      }
      coarse.codes[static_cast<size_t>(y) * coarse.width + x] = static_cast<std::uint8_t>(c);
    }
  }
  return coarse;
}

std::vector<double> initial_guess(const RoiMask& mask, const LaplaceOptions& options) {
  std::vector<double> p(mask.codes.size(), 0.5);
  if (options.multilevel && std::min(mask.width, mask.height) >= 2 * kCoarsestSide) {
    try {
      const RoiMask coarse = coarsen(mask);
      const LaplaceField coarse_field = solve_laplace(coarse, options);
      for (int y = 0; y < mask.height; ++y) {
        for (int x = 0; x < mask.width; ++x) {
          if (coarse.at(x / 2, y / 2) != RoiCode::kOutside) {
            p[static_cast<size_t>(y) * mask.width + x] = coarse_field.at(x / 2, y / 2);
          }
        }
      }
    } catch (const Error&) {
      // The coarse mask can lose connectivity on thin regions; start flat.
    }
  }
  for (size_t i = 0; i < p.size(); ++i) {
    switch (static_cast<RoiCode>(mask.codes[i])) {
      case RoiCode::kSuperior: p[i] = 1.0; break;
      case RoiCode::kInferior: p[i] = 0.0; break;
      case RoiCode::kOutside: p[i] = 0.0; break;
      case RoiCode::kInterior: break;
    }
  }
  return p;
}

}  // namespace

LaplaceField solve_laplace(const RoiMask& mask, const LaplaceOptions& options) {
  validate_roi_mask(mask);
  check_reachability(mask);
  if (!(options.omega > 0.0 && options.omega < 2.0)) {
    throw ArgumentError("laplace: omega must lie in (0, 2)");
  }
  LaplaceField field;
  field.width = mask.width;
  field.height = mask.height;
  field.codes = mask.codes;
  field.potential = initial_guess(mask, options);

  const int w = mask.width;
  const int h = mask.height;
  const std::uint8_t* codes = mask.codes.data();
  double* p = field.potential.data();
  const std::uint8_t interior = static_cast<std::uint8_t>(RoiCode::kInterior);

  double max_update = std::numeric_limits<double>::infinity();
  int iter = 0;
  while (iter < options.max_iterations) {
    max_update = 0.0;
    for (int color = 0; color < 2; ++color) {
      for (int y = 0; y < h; ++y) {
        const size_t row = static_cast<size_t>(y) * w;
        for (int x = (y + color) % 2; x < w; x += 2) {
          const size_t i = row + x;
          if (codes[i] != interior) continue;
          // Mirror condition: a closed neighbor reflects the pixel itself,
          // which reduces to averaging over the open neighbors.
          double sum = 0.0;
          int open = 0;
          if (x > 0 && is_open(codes[i - 1])) { sum += p[i - 1]; ++open; }
          if (x + 1 < w && is_open(codes[i + 1])) { sum += p[i + 1]; ++open; }
          if (y > 0 && is_open(codes[i - w])) { sum += p[i - w]; ++open; }
          if (y + 1 < h && is_open(codes[i + w])) { sum += p[i + w]; ++open; }
          const double delta = options.omega * (sum / open - p[i]);
          p[i] += delta;
          max_update = std::max(max_update, std::abs(delta));
        }
      }
    }
    ++iter;
    if (max_update < options.tolerance) break;
  }
  field.iterations = iter;
  field.residual = max_update;
  if (!(max_update < options.tolerance)) {
    throw ConvergenceError("laplace: no convergence after " + std::to_string(iter) +
                               " iterations (last update " + std::to_string(max_update) + ")",
                           max_update);
  }
  for (size_t i = 0; i < field.potential.size(); ++i) {
    if (codes[i] == interior) field.potential[i] = std::clamp(field.potential[i], 0.0, 1.0);
  }
  return field;
}

LaplaceCoordinates cell_laplace_coordinates(const LaplaceField& field, const CellSet& cells) {
  LaplaceCoordinates out;
  out.ell.reserve(cells.size());
  const auto interior = static_cast<std::uint8_t>(RoiCode::kInterior);
  for (const Cell& cell : cells.cells) {
    double min_x = std::numeric_limits<double>::infinity();
    double min_y = min_x;
    double max_x = -min_x;
    double max_y = -min_x;
    for (const Point& v : cell.polygon) {
      min_x = std::min(min_x, v.x);
      min_y = std::min(min_y, v.y);
      max_x = std::max(max_x, v.x);
      max_y = std::max(max_y, v.y);
    }
    const int x0 = std::max(0, static_cast<int>(std::floor(min_x - 0.5)));
    const int y0 = std::max(0, static_cast<int>(std::floor(min_y - 0.5)));
    const int x1 = std::min(field.width - 1, static_cast<int>(std::ceil(max_x - 0.5)));
    const int y1 = std::min(field.height - 1, static_cast<int>(std::ceil(max_y - 0.5)));
    double sum = 0.0;
    size_t count = 0;
    for (int y = y0; y <= y1; ++y) {
      for (int x = x0; x <= x1; ++x) {
        const size_t i = static_cast<size_t>(y) * field.width + x;
        if (field.codes[i] != interior) continue;
        if (point_in_polygon(cell.polygon, {x + 0.5, y + 0.5})) {
          sum += field.potential[i];
          ++count;
        }
      }
    }
    if (count > 0) {
      out.ell.push_back(sum / static_cast<double>(count));
      continue;
    }
    double best = std::numeric_limits<double>::infinity();
    double value = 0.0;
    for (int y = 0; y < field.height; ++y) {
      for (int x = 0; x < field.width; ++x) {
        const size_t i = static_cast<size_t>(y) * field.width + x;
        if (field.codes[i] != interior) continue;
        const double d = squared_distance(cell.centroid, {x + 0.5, y + 0.5});
        if (d < best) {
          best = d;
          value = field.potential[i];
        }
      }
    }
    if (!std::isfinite(best)) throw ValidationError("laplace: mask has no interior pixels");
    out.ell.push_back(value);
    out.warnings.push_back("cell " + std::to_string(cell.id) +
                           " covers no interior pixel; using nearest interior pixel");
  }
  return out;
}

PgmImage field_to_pgm(const LaplaceField& field) {
  PgmImage image;
  image.width = field.width;
  image.height = field.height;
  image.maxval = 65535;
  image.pixels.resize(field.potential.size());
  for (size_t i = 0; i < field.potential.size(); ++i) {
    const double v = field.codes[i] == 0 ? 0.0 : std::clamp(field.potential[i], 0.0, 1.0);
    image.pixels[i] = static_cast<std::uint16_t>(std::lround(65535.0 * v));
  }
  return image;
}

}  // namespace lace
