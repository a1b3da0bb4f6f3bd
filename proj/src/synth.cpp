#include "lace/synth.hpp"

#include <algorithm>
#include <cmath>
#include <initializer_list>
#include <numbers>
#include <random>
#include <sstream>
#include <unordered_map>

#include <json.hpp>

#include "lace/error.hpp"
#include "lace/matrix.hpp"

namespace lace {

namespace {

// Uniform grid of accepted centers for the separation test.
class SeparationGrid {
 public:
  explicit SeparationGrid(double spacing) : spacing_(spacing) {}

  bool admits(Point p) const {
    if (spacing_ <= 0.0) return true;
    const auto [cx, cy] = cell_of(p);
    for (std::int64_t dy = -1; dy <= 1; ++dy) {
      for (std::int64_t dx = -1; dx <= 1; ++dx) {
        auto it = buckets_.find(key(cx + dx, cy + dy));
        if (it == buckets_.end()) continue;
        for (const Point& q : it->second) {
          if (squared_distance(p, q) < spacing_ * spacing_) return false;
        }
      }
    }
    return true;
  }

  void insert(Point p) {
    if (spacing_ <= 0.0) return;
    const auto [cx, cy] = cell_of(p);
    buckets_[key(cx, cy)].push_back(p);
  }

 private:
  std::pair<std::int64_t, std::int64_t> cell_of(Point p) const {
    return {static_cast<std::int64_t>(std::floor(p.x / spacing_)),
            static_cast<std::int64_t>(std::floor(p.y / spacing_))};
  }
  static std::int64_t key(std::int64_t x, std::int64_t y) { return (x << 32) ^ (y & 0xffffffff); }

  double spacing_;
  std::unordered_map<std::int64_t, std::vector<Point>> buckets_;
};

constexpr int kOutlineVertices = 32;

std::vector<Point> outline(Point center, double radius, double eccentricity, double angle,
                           bool lobed) {
  // Semi-axes with a * b = r^2 keep the area of the radius-r disc.
  const double squash = std::pow(1.0 - eccentricity * eccentricity, 0.25);
  const double a = radius / squash;
  const double b = radius * squash;
  const double c = std::cos(angle);
  const double s = std::sin(angle);
  std::vector<Point> poly;
  poly.reserve(kOutlineVertices);
  for (int k = 0; k < kOutlineVertices; ++k) {
    const double t = 2.0 * std::numbers::pi * k / kOutlineVertices;
    double px;
    double py;
    if (lobed) {
      const double r = radius * (1.0 + 0.25 * std::cos(3.0 * t));
      px = r * std::cos(t);
      py = r * std::sin(t);
    } else {
      px = a * std::cos(t);
      py = b * std::sin(t);
    }
    poly.push_back({center.x + c * px - s * py, center.y + s * px + c * py});
  }
  return poly;
}

}  // namespace

void SynthConfig::validate() const {
  if (width <= 2 || height <= 2) throw ArgumentError("synth: extent must exceed 2x2");
  if (bands.empty()) throw ArgumentError("synth: no bands");
  double total = 0.0;
  for (const BandSpec& b : bands) {
    if (!(b.thickness > 0.0)) throw ArgumentError("synth: band thickness must be positive");
    if (!(b.density > 0.0)) throw ArgumentError("synth: band density must be positive");
    if (!(b.radius_mean > 0.0) || b.radius_std < 0.0) {
      throw ArgumentError("synth: invalid radius distribution");
    }
    if (b.eccentricity_mean < 0.0 || b.eccentricity_mean >= 1.0) {
      throw ArgumentError("synth: eccentricity must lie in [0, 1)");
    }
    if (b.shape_mode_bias < 0.0 || b.shape_mode_bias > 1.0) {
      throw ArgumentError("synth: shape_mode_bias must lie in [0, 1]");
    }
    total += b.thickness;
  }
  if (std::abs(total - 1.0) > 1e-9) throw ArgumentError("synth: band thicknesses must sum to 1");
  if (!(min_separation >= 0.0)) throw ArgumentError("synth: min_separation must be >= 0");
}

namespace {

void check_keys(const nlohmann::json& obj, std::initializer_list<const char*> allowed,
                const char* where) {
  if (!obj.is_object()) throw ValidationError(std::string(where) + ": expected a JSON object");
  for (const auto& [key, value] : obj.items()) {
    bool known = false;
    for (const char* a : allowed) known |= key == a;
    if (!known) throw ValidationError(std::string(where) + ": unknown key '" + key + "'");
  }
}

template <typename T>
void maybe(const nlohmann::json& obj, const char* key, T& out) {
  if (!obj.contains(key)) return;
  try {
    out = obj.at(key).get<T>();
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("synth config: bad value for '") + key + "': " + e.what());
  }
}

}  // namespace

SynthConfig SynthConfig::from_json(std::string_view text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(std::string("synth config: ") + e.what());
  }
  check_keys(doc, {"width", "height", "min_separation", "seed", "bands"}, "synth config");
  SynthConfig cfg = synthetic_cortex_5();
  maybe(doc, "width", cfg.width);
  maybe(doc, "height", cfg.height);
  maybe(doc, "min_separation", cfg.min_separation);
  maybe(doc, "seed", cfg.seed);
  if (doc.contains("bands")) {
    if (!doc["bands"].is_array()) throw ValidationError("synth config: 'bands' must be an array");
    cfg.bands.clear();
    for (const auto& b : doc["bands"]) {
      check_keys(b,
                 {"name", "thickness", "density", "radius_mean", "radius_std",
                  "eccentricity_mean", "shape_mode_bias"},
                 "synth config band");
      BandSpec spec;
      maybe(b, "name", spec.name);
      maybe(b, "thickness", spec.thickness);
      maybe(b, "density", spec.density);
      maybe(b, "radius_mean", spec.radius_mean);
      maybe(b, "radius_std", spec.radius_std);
      maybe(b, "eccentricity_mean", spec.eccentricity_mean);
      maybe(b, "shape_mode_bias", spec.shape_mode_bias);
      cfg.bands.push_back(spec);
    }
  }
  try {
    cfg.validate();
  } catch (const ArgumentError& e) {
    throw ValidationError(e.what());
  }
  return cfg;
}

std::string SynthConfig::to_json() const {
  nlohmann::ordered_json doc;
  doc["width"] = width;
  doc["height"] = height;
  doc["min_separation"] = min_separation;
  doc["seed"] = seed;
  doc["bands"] = nlohmann::ordered_json::array();
  for (const BandSpec& b : bands) {
    doc["bands"].push_back({{"name", b.name},
                            {"thickness", b.thickness},
                            {"density", b.density},
                            {"radius_mean", b.radius_mean},
                            {"radius_std", b.radius_std},
                            {"eccentricity_mean", b.eccentricity_mean},
                            {"shape_mode_bias", b.shape_mode_bias}});
  }
  return doc.dump(2) + "\n";
}

SynthConfig synthetic_cortex_5(std::uint64_t seed) {
  SynthConfig cfg;
  cfg.seed = seed;
  cfg.min_separation = 12.0;
  cfg.bands = {
      {"VI", 0.22, 0.9e-3, 7.0, 1.5, 0.60, 0.30},
      {"V", 0.22, 0.7e-3, 11.0, 2.0, 0.50, 0.70},
      {"III", 0.24, 1.1e-3, 7.0, 1.2, 0.55, 0.60},
      {"II", 0.12, 2.0e-3, 5.0, 1.0, 0.50, 0.50},
      {"I", 0.20, 0.35e-3, 6.0, 1.5, 0.35, 0.05},
  };
  return cfg;
}

int band_of(const SynthInstance& instance, double y) {
  for (size_t b = 0; b < instance.band_top.size(); ++b) {
    if (y >= instance.band_top[b] && y < instance.band_bottom[b]) return static_cast<int>(b);
  }
  return -1;
}

SynthInstance generate(const SynthConfig& cfg) {
  cfg.validate();
  SynthInstance out;
  out.cells.width = cfg.width;
  out.cells.height = cfg.height;
  const double w = cfg.width;
  const double h = cfg.height;
  double below = 0.0;
  for (size_t b = 0; b < cfg.bands.size(); ++b) {
    out.band_bottom.push_back(h * (1.0 - below));
    below += cfg.bands[b].thickness;
    out.band_top.push_back(b + 1 == cfg.bands.size() ? 0.0 : h * (1.0 - below));
  }
  out.band_bottom[0] = h;

  SeparationGrid grid(cfg.min_separation);
  std::int64_t next_id = 1;
  for (size_t b = 0; b < cfg.bands.size(); ++b) {
    const BandSpec& spec = cfg.bands[b];
    std::seed_seq seq{static_cast<std::uint32_t>(cfg.seed),
                      static_cast<std::uint32_t>(cfg.seed >> 32), static_cast<std::uint32_t>(b)};
    Rng rng(seq);
    const double top = out.band_top[b];
    const double bottom = out.band_bottom[b];
    const double area = w * (bottom - top);
    std::poisson_distribution<long> count_dist(spec.density * area);
    const long target = count_dist(rng);
    std::uniform_real_distribution<double> ux(0.0, w);
    std::uniform_real_distribution<double> uy(top, bottom);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::normal_distribution<double> radius_dist(spec.radius_mean, spec.radius_std);
    std::normal_distribution<double> ecc_dist(spec.eccentricity_mean, 0.1);
    const long budget = std::max<long>(100, 100 * target);
    long placed = 0;
    long attempts = 0;
    while (placed < target) {
      if (attempts++ >= budget) {
        std::ostringstream msg;
        msg << "synth: band " << b << " (" << spec.name << ") placed " << placed << " of "
            << target << " cells after " << budget
            << " attempts; density too high for min_separation " << cfg.min_separation;
        throw GenerationError(msg.str());
      }
      const Point center{ux(rng), uy(rng)};
      const double radius = std::max(1.5, radius_dist(rng));
      const double ecc = std::clamp(ecc_dist(rng), 0.0, 0.95);
      const double angle = unit(rng) * std::numbers::pi;
      const bool lobed = unit(rng) < spec.shape_mode_bias;
      if (!grid.admits(center)) continue;
      std::vector<Point> poly =
          clip_to_box(outline(center, radius, ecc, angle, lobed), w, h);
      if (poly.size() < 3 || signed_area(poly) < 1.0) continue;
      Cell cell;
      try {
        cell = make_cell(next_id, std::move(poly));
      } catch (const ValidationError&) {
        continue;  // clipping can fold a lobed outline onto the border
      }
      if (band_of(out, cell.centroid.y) != static_cast<int>(b)) continue;
      grid.insert(center);
      out.cells.cells.push_back(std::move(cell));
      out.truth.push_back(static_cast<int>(b));
      ++next_id;
      ++placed;
    }
  }

  out.mask.width = cfg.width;
  out.mask.height = cfg.height;
  out.mask.codes.assign(static_cast<size_t>(cfg.width) * cfg.height,
                        static_cast<std::uint8_t>(RoiCode::kInterior));
  for (int x = 0; x < cfg.width; ++x) {
    out.mask.codes[x] = static_cast<std::uint8_t>(RoiCode::kSuperior);
    out.mask.codes[static_cast<size_t>(cfg.height - 1) * cfg.width + x] =
        static_cast<std::uint8_t>(RoiCode::kInferior);
  }
  validate_cell_set(out.cells);
  return out;
}

std::string truth_to_csv(const SynthInstance& instance) {
  std::string s = "cell_id,band\n";
  for (size_t i = 0; i < instance.cells.size(); ++i) {
    s += std::to_string(instance.cells.cells[i].id) + "," + std::to_string(instance.truth[i]) +
         "\n";
  }
  return s;
}

void write_instance(const std::filesystem::path& dir, const SynthInstance& instance) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("cannot create directory " + dir.string() + ": " + ec.message());
  write_cells_json(dir / "cells.json", instance.cells);
  write_pgm(dir / "mask.pgm", roi_mask_to_pgm(instance.mask));
  write_file(dir / "truth.csv", truth_to_csv(instance));
}

}  // namespace lace
