#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "lace/ingest.hpp"

namespace lace {

struct BandSpec {
  std::string name;
  double thickness = 0.2;        // fraction of the image height
  double density = 1e-3;         // cells per square pixel
  double radius_mean = 7.0;      // px, radius of the equal-area disc
  double radius_std = 1.0;
  double eccentricity_mean = 0.5;
  // Probability of a three-lobed outline instead of an ellipse.
  double shape_mode_bias = 0.5;
};

struct SynthConfig {
  int width = 2000;
  int height = 1500;
  std::vector<BandSpec> bands;   // bottom band first
  double min_separation = 12.0;
  std::uint64_t seed = 0;

  void validate() const;

  // {"width", "height", "min_separation", "seed", "bands": [{...}]}; missing
  // keys keep their defaults, unknown keys are rejected.
  static SynthConfig from_json(std::string_view text);
  std::string to_json() const;
};

// Five bands loosely modelled on cortical layers VI, V, III, II, I (bottom to
// top): sparse round cells at the top, a dense band of small cells below it,
// large cells deeper down.
SynthConfig synthetic_cortex_5(std::uint64_t seed = 0);

struct SynthInstance {
  CellSet cells;
  RoiMask mask;
  std::vector<int> truth;         // band index per cell, parallel to cells
  std::vector<double> band_top;   // y of each band's upper edge (image rows grow down)
  std::vector<double> band_bottom;
};

SynthInstance generate(const SynthConfig& cfg);

// Band whose [top, bottom) y-range holds `y`.
int band_of(const SynthInstance& instance, double y);

std::string truth_to_csv(const SynthInstance& instance);

// cells.json, mask.pgm, truth.csv
void write_instance(const std::filesystem::path& dir, const SynthInstance& instance);

}  // namespace lace
