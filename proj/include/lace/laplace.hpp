#pragma once

#include <string>
#include <vector>

#include "lace/ingest.hpp"
#include "lace/pgm.hpp"

namespace lace {

struct LaplaceOptions {
  double tolerance = 1e-6;   // max-norm of one full sweep's update
  int max_iterations = 200000;
  double omega = 1.9;        // SOR relaxation factor
  // Seed the iteration with the solution on a 2x coarser mask, recursively.
  bool multilevel = true;
};

// Harmonic potential over the non-OUTSIDE pixels of a mask: 1 on SUPERIOR,
// 0 on INFERIOR, zero normal flux where the region meets OUTSIDE or the
// image border.
struct LaplaceField {
  int width = 0;
  int height = 0;
  std::vector<double> potential;      // row-major; 0 at OUTSIDE pixels
  std::vector<std::uint8_t> codes;    // copy of the mask codes
  double residual = 0.0;
  int iterations = 0;

  double at(int x, int y) const { return potential[static_cast<size_t>(y) * width + x]; }
  RoiCode code(int x, int y) const {
    return static_cast<RoiCode>(codes[static_cast<size_t>(y) * width + x]);
  }
};

// Red-black Gauss-Seidel with over-relaxation on the 5-point stencil.
// Throws ValidationError if an interior pixel cannot reach a boundary pixel
// and ConvergenceError (carrying the last update norm) after max_iterations.
LaplaceField solve_laplace(const RoiMask& mask, const LaplaceOptions& options = {});

struct LaplaceCoordinates {
  std::vector<double> ell;
  std::vector<std::string> warnings;
};

// Mean potential over the INTERIOR pixels whose centers fall inside each
// cell polygon; cells covering none use the interior pixel nearest to the
// centroid and produce a warning.
LaplaceCoordinates cell_laplace_coordinates(const LaplaceField& field, const CellSet& cells);

// 16-bit dump, value = round(65535 * P).
PgmImage field_to_pgm(const LaplaceField& field);

}  // namespace lace
