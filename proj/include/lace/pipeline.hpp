#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "lace/community.hpp"
#include "lace/embed.hpp"
#include "lace/features.hpp"
#include "lace/ingest.hpp"
#include "lace/laplace.hpp"
#include "lace/metrics.hpp"

namespace lace {

struct PipelineConfig {
  std::string cell_format = "json-polygons";
  int knn_k = 10;
  std::vector<double> thresholds{50.0, 100.0, 200.0};
  int nn_k = 10;
  int shape_modes = 4;
  bool shape_mode_one_hot = false;
  double laplace_tolerance = 1e-6;
  double laplace_omega = 1.9;
  ContrastiveConfig train;
  int n_neighbors = 15;
  int target_k = 5;
  double gamma_lo = 0.1;
  double gamma_hi = 3.0;
  int gamma_steps = 30;
  int leiden_restarts = 3;
  double leiden_theta = 0.01;
  int kmeans_restarts = 50;
  std::uint64_t seed = 0;

  // Flat JSON object; keys not listed above are rejected.
  static PipelineConfig from_json(std::string_view text);
  static PipelineConfig load(const std::filesystem::path& path);
  std::string to_json() const;
  // "key=value" with a JSON value; bare words are taken as strings.
  void apply_override(std::string_view assignment);
  void validate() const;

  FeatureOptions feature_options() const;
  ContrastiveConfig contrastive() const;
  ScanOptions scan_options() const;
};

struct PipelineResult {
  LaplaceField field;
  std::vector<double> ell;
  FeatureMatrix features;
  EmbeddingSet embedding;
  ScanResult scan;
  std::vector<std::string> warnings;
};

std::vector<double> laplace_stage(const CellSet& cells, const RoiMask& mask,
                                  const PipelineConfig& cfg, LaplaceField* field_out,
                                  std::vector<std::string>* warnings);
FeatureMatrix feature_stage(const CellSet& cells, std::span<const double> ell,
                            const PipelineConfig& cfg);
EmbeddingSet train_stage(const CellSet& cells, const FeatureMatrix& features,
                         std::span<const double> ell, const PipelineConfig& cfg);
ScanResult cluster_stage(const Matrix& points, const PipelineConfig& cfg);

PipelineResult run_pipeline(const CellSet& cells, const RoiMask& mask,
                            const PipelineConfig& cfg);

// Baselines: k-means on the feature matrix, and the fuzzy-graph + Leiden
// scan applied to the features instead of the embeddings.
Partition kmeans_on_features(const FeatureMatrix& features, const PipelineConfig& cfg);
ScanResult leiden_on_features(const FeatureMatrix& features, const PipelineConfig& cfg);

// Row order of the CSV outputs: ascending cell id.
std::vector<size_t> id_order(const CellSet& cells);

std::string partition_to_csv(std::span<const std::int64_t> ids, std::span<const int> labels);
std::string partition_to_csv(const CellSet& cells, std::span<const int> labels);
std::string embeddings_to_csv(const CellSet& cells, const Matrix& h);
std::string overlay_svg(const CellSet& cells, std::span<const int> labels);

// features.csv, laplace.pgm, embeddings.csv, loss_trace.csv, partition.csv,
// scan.json, overlay.svg
void write_pipeline_outputs(const std::filesystem::path& dir, const CellSet& cells,
                            const PipelineResult& result);

struct LabelTable {
  std::vector<std::int64_t> ids;
  std::vector<int> labels;
};
// Two-column CSV with an id column and an integer label column.
LabelTable parse_label_csv(std::string_view text);

// Aligns the two tables by id. A mismatch of id sets is a ValidationError
// naming the first id that is missing from one side.
MetricsReport evaluate_tables(const LabelTable& partition, const LabelTable& truth);
MetricsReport evaluate_files(const std::filesystem::path& partition_csv,
                             const std::filesystem::path& truth_csv);

}  // namespace lace
