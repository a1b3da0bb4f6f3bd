#include "lace/ingest.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <unordered_set>

#include <json.hpp>

#include "lace/error.hpp"

namespace lace {

using nlohmann::json;

std::vector<Point> CellSet::centroids() const {
  std::vector<Point> out;
  out.reserve(cells.size());
  for (const Cell& c : cells) out.push_back(c.centroid);
  return out;
}

CellFormat parse_cell_format(std::string_view name) {
  if (name == "json-polygons" || name == "json") return CellFormat::kJsonPolygons;
  if (name == "label-raster" || name == "pgm") return CellFormat::kLabelRaster;
  throw ArgumentError("unknown cell format '" + std::string(name) + "'");
}

Cell make_cell(std::int64_t id, std::vector<Point> polygon) {
  const std::string who = "cell " + std::to_string(id);
  if (id < 0) throw ValidationError(who + ": negative id");
  if (polygon.size() < 3) {
    throw ValidationError(who + ": polygon needs at least 3 vertices");
  }
  for (const Point& p : polygon) {
    if (!std::isfinite(p.x) || !std::isfinite(p.y)) {
      throw ValidationError(who + ": non-finite vertex");
    }
  }
  double area = signed_area(polygon);
  if (area == 0.0) throw ValidationError(who + ": zero-area polygon");
  if (!is_simple_polygon(polygon)) {
    throw ValidationError(who + ": self-intersecting polygon");
  }
  if (area < 0.0) std::reverse(polygon.begin(), polygon.end());
  Cell cell;
  cell.id = id;
  cell.centroid = polygon_centroid(polygon);
  cell.polygon = std::move(polygon);
  return cell;
}

void validate_cell_set(const CellSet& cells) {
  if (cells.cells.empty()) throw ValidationError("cell set is empty");
  if (cells.width <= 0 || cells.height <= 0) {
    throw ValidationError("image extent must be positive");
  }
  std::unordered_set<std::int64_t> seen;
  for (const Cell& c : cells.cells) {
    if (!seen.insert(c.id).second) {
      throw ValidationError("duplicate cell id " + std::to_string(c.id));
    }
    for (const Point& p : c.polygon) {
      if (p.x < 0.0 || p.y < 0.0 || p.x > cells.width || p.y > cells.height) {
        throw ValidationError("cell " + std::to_string(c.id) +
                              ": vertex outside image extent");
      }
    }
    if (!(c.area() > 0.0)) {
      throw ValidationError("cell " + std::to_string(c.id) +
                            ": polygon area not positive");
    }
  }
}

CellSet parse_cells_json(std::string_view text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ParseError("cells json: parse error at byte " +
                     std::to_string(e.byte) + ": " + e.what());
  }
  CellSet out;
  try {
    const auto& extent = doc.at("image_extent");
    if (!extent.is_array() || extent.size() != 2) {
      throw ParseError("cells json: image_extent must be [W, H]");
    }
    out.width = extent[0].get<int>();
    out.height = extent[1].get<int>();
    for (const auto& entry : doc.at("cells")) {
      std::vector<Point> polygon;
      for (const auto& v : entry.at("polygon")) {
        if (!v.is_array() || v.size() != 2) {
          throw ParseError("cells json: vertex must be [x, y]");
        }
        polygon.push_back({v[0].get<double>(), v[1].get<double>()});
      }
      out.cells.push_back(
          make_cell(entry.at("id").get<std::int64_t>(), std::move(polygon)));
    }
  } catch (const json::exception& e) {
    throw ParseError(std::string("cells json: ") + e.what());
  }
  validate_cell_set(out);
  return out;
}

CellSet cells_from_label_raster(const PgmImage& labels) {
  const int w = labels.width;
  const int h = labels.height;
  // Largest 4-connected component per label; ties keep the first in
  // raster order.
  struct Component {
    int start_x = 0;
    int start_y = 0;
    size_t size = 0;
  };
  std::map<std::uint16_t, Component> best;
  std::vector<std::int32_t> component_of(labels.pixels.size(), -1);
  std::vector<Component> components;
  std::vector<size_t> stack;
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const size_t idx = static_cast<size_t>(y) * w + x;
      const std::uint16_t label = labels.pixels[idx];
      if (label == 0 || component_of[idx] >= 0) continue;
      const auto comp_id = static_cast<std::int32_t>(components.size());
      Component comp{x, y, 0};
      stack.assign(1, idx);
      component_of[idx] = comp_id;
      while (!stack.empty()) {
        const size_t cur = stack.back();
        stack.pop_back();
        ++comp.size;
        const int cx = static_cast<int>(cur % w);
        const int cy = static_cast<int>(cur / w);
        const int nx[4] = {cx - 1, cx + 1, cx, cx};
        const int ny[4] = {cy, cy, cy - 1, cy + 1};
        for (int k = 0; k < 4; ++k) {
          if (nx[k] < 0 || ny[k] < 0 || nx[k] >= w || ny[k] >= h) continue;
          const size_t nidx = static_cast<size_t>(ny[k]) * w + nx[k];
          if (labels.pixels[nidx] == label && component_of[nidx] < 0) {
            component_of[nidx] = comp_id;
            stack.push_back(nidx);
          }
        }
      }
      components.push_back(comp);
      auto it = best.find(label);
      if (it == best.end() || comp.size > it->second.size) best[label] = comp;
    }
  }

  CellSet out;
  out.width = w;
  out.height = h;
  for (const auto& [label, comp] : best) {
    const std::int32_t comp_id =
        component_of[static_cast<size_t>(comp.start_y) * w + comp.start_x];
    auto inside = [&](int x, int y) {
      return x >= 0 && y >= 0 && x < w && y < h &&
             component_of[static_cast<size_t>(y) * w + x] == comp_id;
    };
    std::vector<Point> polygon =
        trace_outer_contour(comp.start_x, comp.start_y, inside);
    // Traced contours may touch themselves at a pixel corner (diagonal
    // notches), which the strict simplicity check would reject.
    if (signed_area(polygon) < 0.0) std::reverse(polygon.begin(), polygon.end());
    Cell cell;
    cell.id = label;
    cell.centroid = polygon_centroid(polygon);
    cell.polygon = std::move(polygon);
    out.cells.push_back(std::move(cell));
  }
  validate_cell_set(out);
  return out;
}

CellSet load_cells(const std::filesystem::path& path, CellFormat format) {
  const std::string bytes = read_file(path);
  if (format == CellFormat::kJsonPolygons) return parse_cells_json(bytes);
  return cells_from_label_raster(parse_pgm(bytes));
}

std::string cells_to_json(const CellSet& cells) {
  json doc;
  doc["image_extent"] = {cells.width, cells.height};
  json list = json::array();
  for (const Cell& c : cells.cells) {
    json polygon = json::array();
    for (const Point& p : c.polygon) polygon.push_back({p.x, p.y});
    list.push_back({{"id", c.id}, {"polygon", std::move(polygon)}});
  }
  doc["cells"] = std::move(list);
  return doc.dump() + "\n";
}

void write_cells_json(const std::filesystem::path& path, const CellSet& cells) {
  write_file(path, cells_to_json(cells));
}

RoiMask roi_mask_from_pgm(const PgmImage& image) {
  if (image.maxval > 255) {
    throw ParseError("roi mask: expected an 8-bit PGM");
  }
  RoiMask mask;
  mask.width = image.width;
  mask.height = image.height;
  mask.codes.resize(image.pixels.size());
  for (size_t i = 0; i < image.pixels.size(); ++i) {
    if (image.pixels[i] > 3) {
      throw ParseError("roi mask: pixel value " +
                       std::to_string(image.pixels[i]) + " at offset " +
                       std::to_string(i) + " is not a region code (0-3)");
    }
    mask.codes[i] = static_cast<std::uint8_t>(image.pixels[i]);
  }
  validate_roi_mask(mask);
  return mask;
}

RoiMask load_roi_mask(const std::filesystem::path& path) {
  return roi_mask_from_pgm(read_pgm(path));
}

void validate_roi_mask(const RoiMask& mask) {
  bool superior = false;
  bool inferior = false;
  for (std::uint8_t c : mask.codes) {
    superior |= c == static_cast<std::uint8_t>(RoiCode::kSuperior);
    inferior |= c == static_cast<std::uint8_t>(RoiCode::kInferior);
  }
  if (!superior) throw ValidationError("roi mask: no superior boundary");
  if (!inferior) throw ValidationError("roi mask: no inferior boundary");
  for (int y = 0; y < mask.height; ++y) {
    for (int x = 0; x < mask.width; ++x) {
      if (mask.at(x, y) != RoiCode::kInterior) continue;
      bool connected = false;
      const int nx[4] = {x - 1, x + 1, x, x};
      const int ny[4] = {y, y, y - 1, y + 1};
      for (int k = 0; k < 4 && !connected; ++k) {
        connected = mask.contains(nx[k], ny[k]) &&
                    mask.at(nx[k], ny[k]) != RoiCode::kOutside;
      }
      if (!connected) {
        throw ValidationError("roi mask: isolated interior pixel at (" +
                              std::to_string(x) + ", " + std::to_string(y) +
                              ")");
      }
    }
  }
}

PgmImage roi_mask_to_pgm(const RoiMask& mask) {
  PgmImage image;
  image.width = mask.width;
  image.height = mask.height;
  image.maxval = 255;
  image.pixels.assign(mask.codes.begin(), mask.codes.end());
  return image;
}

}  // namespace lace
