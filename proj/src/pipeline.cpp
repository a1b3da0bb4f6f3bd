#include "lace/pipeline.hpp"

#include <algorithm>
#include <map>
#include <numeric>
#include <sstream>

#include <json.hpp>

#include "lace/cellgraph.hpp"
#include "lace/csv.hpp"
#include "lace/error.hpp"
#include "lace/pgm.hpp"

namespace lace {

using nlohmann::ordered_json;

namespace {

template <typename T>
void take(const ordered_json& doc, const char* key, T& out) {
  try {
    out = doc.at(key).get<T>();
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("config: bad value for '") + key + "': " + e.what());
  }
}

PipelineConfig from_document(const ordered_json& doc) {
  PipelineConfig c;
  take(doc, "cell_format", c.cell_format);
  take(doc, "knn_k", c.knn_k);
  take(doc, "thresholds", c.thresholds);
  take(doc, "nn_k", c.nn_k);
  take(doc, "shape_modes", c.shape_modes);
  take(doc, "shape_mode_one_hot", c.shape_mode_one_hot);
  take(doc, "laplace_tolerance", c.laplace_tolerance);
  take(doc, "laplace_omega", c.laplace_omega);
  take(doc, "alpha", c.train.alpha);
  take(doc, "alpha_p", c.train.alpha_p);
  take(doc, "alpha_n", c.train.alpha_n);
  take(doc, "tau", c.train.tau);
  take(doc, "lambda2", c.train.lambda2);
  take(doc, "epochs", c.train.epochs);
  take(doc, "learning_rate", c.train.learning_rate);
  take(doc, "hidden", c.train.hidden);
  take(doc, "output", c.train.output);
  take(doc, "n_neighbors", c.n_neighbors);
  take(doc, "target_k", c.target_k);
  take(doc, "gamma_lo", c.gamma_lo);
  take(doc, "gamma_hi", c.gamma_hi);
  take(doc, "gamma_steps", c.gamma_steps);
  take(doc, "leiden_restarts", c.leiden_restarts);
  take(doc, "leiden_theta", c.leiden_theta);
  take(doc, "kmeans_restarts", c.kmeans_restarts);
  take(doc, "seed", c.seed);
  c.train.seed = c.seed;
  c.validate();
  return c;
}

ordered_json to_document(const PipelineConfig& c) {
  ordered_json doc;
  doc["cell_format"] = c.cell_format;
  doc["knn_k"] = c.knn_k;
  doc["thresholds"] = c.thresholds;
  doc["nn_k"] = c.nn_k;
  doc["shape_modes"] = c.shape_modes;
  doc["shape_mode_one_hot"] = c.shape_mode_one_hot;
  doc["laplace_tolerance"] = c.laplace_tolerance;
  doc["laplace_omega"] = c.laplace_omega;
  doc["alpha"] = c.train.alpha;
  doc["alpha_p"] = c.train.alpha_p;
  doc["alpha_n"] = c.train.alpha_n;
  doc["tau"] = c.train.tau;
  doc["lambda2"] = c.train.lambda2;
  doc["epochs"] = c.train.epochs;
  doc["learning_rate"] = c.train.learning_rate;
  doc["hidden"] = c.train.hidden;
  doc["output"] = c.train.output;
  doc["n_neighbors"] = c.n_neighbors;
  doc["target_k"] = c.target_k;
  doc["gamma_lo"] = c.gamma_lo;
  doc["gamma_hi"] = c.gamma_hi;
  doc["gamma_steps"] = c.gamma_steps;
  doc["leiden_restarts"] = c.leiden_restarts;
  doc["leiden_theta"] = c.leiden_theta;
  doc["kmeans_restarts"] = c.kmeans_restarts;
  doc["seed"] = c.seed;
  return doc;
}

void merge(ordered_json& base, const ordered_json& update) {
  if (!update.is_object()) throw ValidationError("config: top level must be a JSON object");
  for (const auto& [key, value] : update.items()) {
    if (!base.contains(key)) throw ValidationError("config: unknown key '" + key + "'");
    base[key] = value;
  }
}

}  // namespace

PipelineConfig PipelineConfig::from_json(std::string_view text) {
  ordered_json parsed;
  try {
    parsed = ordered_json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(std::string("config: ") + e.what());
  }
  ordered_json doc = to_document(PipelineConfig{});
  merge(doc, parsed);
  return from_document(doc);
}

PipelineConfig PipelineConfig::load(const std::filesystem::path& path) {
  return from_json(read_file(path));
}

std::string PipelineConfig::to_json() const { return to_document(*this).dump(2) + "\n"; }

void PipelineConfig::apply_override(std::string_view assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string_view::npos || eq == 0) {
    throw ArgumentError("--set expects key=value, got '" + std::string(assignment) + "'");
  }
  const std::string key(assignment.substr(0, eq));
  const std::string raw(assignment.substr(eq + 1));
  ordered_json value;
  try {
    value = ordered_json::parse(raw);
  } catch (const nlohmann::json::parse_error&) {
    value = raw;
  }
  ordered_json doc = to_document(*this);
  merge(doc, ordered_json{{key, value}});
  *this = from_document(doc);
}

void PipelineConfig::validate() const {
  parse_cell_format(cell_format);
  if (knn_k < 1) throw ValidationError("config: knn_k must be >= 1");
  if (nn_k < 1) throw ValidationError("config: nn_k must be >= 1");
  for (double t : thresholds) {
    if (!(t > 0.0)) throw ValidationError("config: thresholds must be positive");
  }
  if (shape_modes < 1) throw ValidationError("config: shape_modes must be >= 1");
  if (!(laplace_tolerance > 0.0)) throw ValidationError("config: laplace_tolerance must be > 0");
  if (!(laplace_omega > 0.0 && laplace_omega < 2.0)) {
    throw ValidationError("config: laplace_omega must lie in (0, 2)");
  }
  try {
    train.validate();
  } catch (const ArgumentError& e) {
    throw ValidationError(std::string("config: ") + e.what());
  }
  if (n_neighbors < 1) throw ValidationError("config: n_neighbors must be >= 1");
  if (target_k < 1) throw ValidationError("config: target_k must be >= 1");
  if (!(gamma_lo > 0.0) || gamma_hi < gamma_lo) {
    throw ValidationError("config: need 0 < gamma_lo <= gamma_hi");
  }
  if (gamma_steps < 1 || leiden_restarts < 1 || kmeans_restarts < 1) {
    throw ValidationError("config: step and restart counts must be >= 1");
  }
  if (!(leiden_theta > 0.0)) throw ValidationError("config: leiden_theta must be > 0");
}

FeatureOptions PipelineConfig::feature_options() const {
  FeatureOptions o;
  o.thresholds = thresholds;
  o.nn_k = nn_k;
  o.include_laplace = true;
  o.shape_mode_one_hot = shape_mode_one_hot;
  o.standardize = true;
  o.shape_seed = seed;
  o.shape.modes = shape_modes;
  return o;
}

ContrastiveConfig PipelineConfig::contrastive() const {
  ContrastiveConfig c = train;
  c.seed = seed;
  return c;
}

ScanOptions PipelineConfig::scan_options() const {
  ScanOptions o;
  o.gamma_lo = gamma_lo;
  o.gamma_hi = gamma_hi;
  o.steps = gamma_steps;
  o.restarts = leiden_restarts;
  o.leiden.theta = leiden_theta;
  return o;
}

// ---------------------------------------------------------------------------

std::vector<double> laplace_stage(const CellSet& cells, const RoiMask& mask,
                                  const PipelineConfig& cfg, LaplaceField* field_out,
                                  std::vector<std::string>* warnings) {
  if (mask.width != cells.width || mask.height != cells.height) {
    throw ValidationError("laplace: mask is " + std::to_string(mask.width) + "x" +
                          std::to_string(mask.height) + " but the cells cover " +
                          std::to_string(cells.width) + "x" + std::to_string(cells.height));
  }
  LaplaceOptions options;
  options.tolerance = cfg.laplace_tolerance;
  options.omega = cfg.laplace_omega;
  LaplaceField field = solve_laplace(mask, options);
  LaplaceCoordinates coords = cell_laplace_coordinates(field, cells);
  if (warnings) warnings->insert(warnings->end(), coords.warnings.begin(), coords.warnings.end());
  if (field_out) *field_out = std::move(field);
  return std::move(coords.ell);
}

FeatureMatrix feature_stage(const CellSet& cells, std::span<const double> ell,
                            const PipelineConfig& cfg) {
  return compute_features(cells, ell, cfg.feature_options());
}

EmbeddingSet train_stage(const CellSet& cells, const FeatureMatrix& features,
                         std::span<const double> ell, const PipelineConfig& cfg) {
  const CellGraph graph = knn_graph(cells, cfg.knn_k);
  return train(features.values, graph, ell, cfg.contrastive());
}

ScanResult cluster_stage(const Matrix& points, const PipelineConfig& cfg) {
  const WeightedGraph g = umap_connectivity(points, cfg.n_neighbors);
  return resolution_scan(g, cfg.target_k, cfg.seed, cfg.scan_options());
}

PipelineResult run_pipeline(const CellSet& cells, const RoiMask& mask,
                            const PipelineConfig& cfg) {
  PipelineResult r;
  r.ell = laplace_stage(cells, mask, cfg, &r.field, &r.warnings);
  r.features = feature_stage(cells, r.ell, cfg);
  r.embedding = train_stage(cells, r.features, r.ell, cfg);
  r.scan = cluster_stage(r.embedding.h, cfg);
  return r;
}

Partition kmeans_on_features(const FeatureMatrix& features, const PipelineConfig& cfg) {
  return kmeans_baseline(features.values, cfg.target_k, cfg.seed, cfg.kmeans_restarts).partition;
}

ScanResult leiden_on_features(const FeatureMatrix& features, const PipelineConfig& cfg) {
  return cluster_stage(features.values, cfg);
}

// ---------------------------------------------------------------------------

std::vector<size_t> id_order(const CellSet& cells) {
  std::vector<size_t> order(cells.size());
  std::iota(order.begin(), order.end(), size_t{0});
  std::sort(order.begin(), order.end(),
            [&](size_t a, size_t b) { return cells.cells[a].id < cells.cells[b].id; });
  return order;
}

std::string partition_to_csv(std::span<const std::int64_t> ids, std::span<const int> labels) {
  if (ids.size() != labels.size()) throw ArgumentError("partition: ids and labels differ in size");
  std::vector<size_t> order(ids.size());
  std::iota(order.begin(), order.end(), size_t{0});
  std::sort(order.begin(), order.end(), [&](size_t a, size_t b) { return ids[a] < ids[b]; });
  std::string s = "cell_id,community\n";
  for (size_t i : order) s += std::to_string(ids[i]) + "," + std::to_string(labels[i]) + "\n";
  return s;
}

std::string partition_to_csv(const CellSet& cells, std::span<const int> labels) {
  std::vector<std::int64_t> ids;
  ids.reserve(cells.size());
  for (const Cell& c : cells.cells) ids.push_back(c.id);
  return partition_to_csv(ids, labels);
}

std::string embeddings_to_csv(const CellSet& cells, const Matrix& h) {
  const std::vector<size_t> order = id_order(cells);
  std::vector<std::int64_t> ids;
  Matrix sorted(h.rows(), h.cols());
  for (size_t r = 0; r < order.size(); ++r) {
    ids.push_back(cells.cells[order[r]].id);
    sorted.row(static_cast<Eigen::Index>(r)) = h.row(static_cast<Eigen::Index>(order[r]));
  }
  std::vector<std::string> names;
  for (Eigen::Index c = 0; c < h.cols(); ++c) names.push_back("h" + std::to_string(c));
  return id_matrix_to_csv(ids, names, sorted);
}

std::string overlay_svg(const CellSet& cells, std::span<const int> labels) {
  static constexpr const char* kPalette[10] = {"#1f77b4", "#ff7f0e", "#2ca02c", "#d62728",
                                               "#9467bd", "#8c564b", "#e377c2", "#7f7f7f",
                                               "#bcbd22", "#17becf"};
  std::ostringstream svg;
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << cells.width << "\" height=\""
      << cells.height << "\" viewBox=\"0 0 " << cells.width << " " << cells.height << "\">\n";
  svg << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  for (size_t i : id_order(cells)) {
    const Cell& cell = cells.cells[i];
    const int label = labels[i];
    svg << "<polygon data-id=\"" << cell.id << "\" data-community=\"" << label
        << "\" fill=\"" << kPalette[((label % 10) + 10) % 10] << "\" points=\"";
    for (size_t v = 0; v < cell.polygon.size(); ++v) {
      if (v) svg << ' ';
      svg << format_double(cell.polygon[v].x) << ',' << format_double(cell.polygon[v].y);
    }
    svg << "\"/>\n";
  }
  svg << "</svg>\n";
  return svg.str();
}

void write_pipeline_outputs(const std::filesystem::path& dir, const CellSet& cells,
                            const PipelineResult& result) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("cannot create directory " + dir.string() + ": " + ec.message());
  write_file(dir / "features.csv", features_to_csv(result.features, cells));
  write_pgm(dir / "laplace.pgm", field_to_pgm(result.field));
  write_file(dir / "embeddings.csv", embeddings_to_csv(cells, result.embedding.h));
  write_file(dir / "loss_trace.csv", loss_trace_csv(result.embedding.epoch_losses));
  write_file(dir / "partition.csv", partition_to_csv(cells, result.scan.partition.community));
  write_file(dir / "scan.json", scan_to_json(result.scan));
  write_file(dir / "overlay.svg", overlay_svg(cells, result.scan.partition.community));
}

// ---------------------------------------------------------------------------

LabelTable parse_label_csv(std::string_view text) {
  const Table table = parse_csv(text);
  if (table.header.size() != 2) {
    throw ParseError("label csv: expected 2 columns, found " +
                     std::to_string(table.header.size()));
  }
  LabelTable out;
  for (size_t r = 0; r < table.rows.size(); ++r) {
    try {
      size_t used = 0;
      out.ids.push_back(std::stoll(table.rows[r][0], &used));
      if (used != table.rows[r][0].size()) throw std::invalid_argument("id");
      out.labels.push_back(std::stoi(table.rows[r][1], &used));
      if (used != table.rows[r][1].size()) throw std::invalid_argument("label");
    } catch (const std::logic_error&) {
      throw ParseError("label csv: line " + std::to_string(r + 2) + ": expected integers");
    }
  }
  return out;
}

MetricsReport evaluate_tables(const LabelTable& partition, const LabelTable& truth) {
  std::map<std::int64_t, int> pred;
  for (size_t i = 0; i < partition.ids.size(); ++i) {
    if (!pred.emplace(partition.ids[i], partition.labels[i]).second) {
      throw ValidationError("evaluate: duplicate id " + std::to_string(partition.ids[i]) +
                            " in partition");
    }
  }
  std::map<std::int64_t, int> ref;
  for (size_t i = 0; i < truth.ids.size(); ++i) {
    if (!ref.emplace(truth.ids[i], truth.labels[i]).second) {
      throw ValidationError("evaluate: duplicate id " + std::to_string(truth.ids[i]) +
                            " in truth");
    }
  }
  for (const auto& [id, label] : ref) {
    if (!pred.contains(id)) {
      throw ValidationError("evaluate: id " + std::to_string(id) + " missing from partition");
    }
  }
  for (const auto& [id, label] : pred) {
    if (!ref.contains(id)) {
      throw ValidationError("evaluate: id " + std::to_string(id) + " missing from truth");
    }
  }
  std::vector<int> a;
  std::vector<int> b;
  for (const auto& [id, label] : ref) {
    a.push_back(pred.at(id));
    b.push_back(label);
  }
  return evaluate_labels(a, b);
}

MetricsReport evaluate_files(const std::filesystem::path& partition_csv,
                             const std::filesystem::path& truth_csv) {
  return evaluate_tables(parse_label_csv(read_file(partition_csv)),
                         parse_label_csv(read_file(truth_csv)));
}

}  // namespace lace
