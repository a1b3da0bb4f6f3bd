// lace: cortical layer identification from segmented cells.
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "lace/csv.hpp"
#include "lace/error.hpp"
#include "lace/pipeline.hpp"
#include "lace/synth.hpp"

namespace fs = std::filesystem;

namespace {

struct Common {
  std::string config_path;
  std::vector<std::string> overrides;
};

void add_common(CLI::App* cmd, Common& common) {
  cmd->add_option("--config", common.config_path, "JSON configuration file");
  cmd->add_option("--set", common.overrides, "Override a configuration value (key=value)");
}

lace::PipelineConfig resolve_config(const Common& common) {
  lace::PipelineConfig cfg;
  if (!common.config_path.empty()) cfg = lace::PipelineConfig::load(common.config_path);
  for (const std::string& o : common.overrides) cfg.apply_override(o);
  return cfg;
}

lace::CellSet read_cells(const std::string& path, const lace::PipelineConfig& cfg) {
  return lace::load_cells(path, lace::parse_cell_format(cfg.cell_format));
}

void report_warnings(const std::vector<std::string>& warnings) {
  for (const std::string& w : warnings) std::cerr << "warning: " << w << "\n";
}

int exit_code(const std::exception& e) {
  if (dynamic_cast<const lace::IoError*>(&e)) return 2;
  if (dynamic_cast<const lace::ParseError*>(&e)) return 3;
  if (dynamic_cast<const lace::ValidationError*>(&e)) return 3;
  return 1;
}

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw lace::IoError("cannot create directory " + dir.string() + ": " + ec.message());
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Cortical layer identification from segmented cells"};
  app.require_subcommand(1);

  Common common;
  std::string cells_path;
  std::string mask_path;
  std::string out_path;
  std::string stage = "lace";

  // synth
  auto* synth = app.add_subcommand("synth", "Generate a synthetic layered instance");
  std::uint64_t synth_seed = 0;
  double synth_scale = 1.0;
  synth->add_option("--out", out_path, "Output directory")->required();
  std::string synth_config;
  synth->add_option("--seed", synth_seed, "Random seed (overrides the config)");
  synth->add_option("--config", synth_config, "Band configuration JSON (default: built-in preset)");
  synth->add_option("--scale", synth_scale, "Linear scale of the extent (1 = 2000x1500)")
      ->check(CLI::PositiveNumber);

  // laplace
  auto* laplace = app.add_subcommand("laplace", "Solve the depth potential and sample it per cell");
  add_common(laplace, common);
  laplace->add_option("--cells", cells_path, "Cell file")->required();
  laplace->add_option("--mask", mask_path, "ROI mask (PGM)")->required();
  laplace->add_option("--out", out_path, "Output directory")->required();

  // features
  auto* features = app.add_subcommand("features", "Compute the cell feature matrix");
  add_common(features, common);
  features->add_option("--cells", cells_path, "Cell file")->required();
  features->add_option("--mask", mask_path, "ROI mask (PGM)")->required();
  features->add_option("--out", out_path, "Output directory")->required();

  // train
  auto* train = app.add_subcommand("train", "Train cell embeddings");
  add_common(train, common);
  train->add_option("--cells", cells_path, "Cell file")->required();
  train->add_option("--mask", mask_path, "ROI mask (PGM)")->required();
  train->add_option("--out", out_path, "Output directory")->required();

  // cluster
  auto* cluster = app.add_subcommand("cluster", "Cluster an embedding or feature CSV");
  add_common(cluster, common);
  std::string points_path;
  cluster->add_option("--embeddings", points_path, "CSV with an id column and numeric columns")
      ->required();
  cluster->add_option("--out", out_path, "Output directory")->required();
  std::string method = "leiden";
  cluster->add_option("--method", method, "leiden or kmeans")
      ->check(CLI::IsMember({"leiden", "kmeans"}));

  // evaluate
  auto* evaluate = app.add_subcommand("evaluate", "Score a partition against ground truth");
  std::string partition_path;
  std::string truth_path;
  bool table = false;
  evaluate->add_option("--partition", partition_path, "cell_id,community CSV")->required();
  evaluate->add_option("--truth", truth_path, "cell_id,label CSV")->required();
  evaluate->add_option("--name", stage, "Row label for --table");
  evaluate->add_flag("--table", table, "Print a percentage table row instead of JSON");

  // pipeline
  auto* pipeline = app.add_subcommand("pipeline", "Run every stage and write all artifacts");
  add_common(pipeline, common);
  pipeline->add_option("--cells", cells_path, "Cell file")->required();
  pipeline->add_option("--mask", mask_path, "ROI mask (PGM)")->required();
  pipeline->add_option("--out", out_path, "Output directory")->required();

  // config
  auto* show = app.add_subcommand("config", "Print the effective configuration");
  add_common(show, common);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  std::string current = "lace";
  try {
    if (*synth) {
      current = "synth";
      lace::SynthConfig cfg = synth_config.empty()
                                  ? lace::synthetic_cortex_5()
                                  : lace::SynthConfig::from_json(lace::read_file(synth_config));
      if (synth->count("--seed") || synth_config.empty()) cfg.seed = synth_seed;
      cfg.width = static_cast<int>(std::lround(cfg.width * synth_scale));
      cfg.height = static_cast<int>(std::lround(cfg.height * synth_scale));
      const lace::SynthInstance inst = lace::generate(cfg);
      lace::write_instance(out_path, inst);
      std::cerr << "synth: " << inst.cells.size() << " cells written to " << out_path << "\n";
      return 0;
    }
    if (*evaluate) {
      current = "evaluate";
      const lace::MetricsReport r = lace::evaluate_files(partition_path, truth_path);
      if (table) {
        std::cout << lace::MetricsReport::table_header() << "\n" << r.table_row(stage) << "\n";
      } else {
        std::cout << r.to_json();
      }
      return 0;
    }

    current = "config";
    const lace::PipelineConfig cfg = resolve_config(common);
    if (*show) {
      std::cout << cfg.to_json();
      return 0;
    }
    if (*cluster) {
      current = "cluster";
      const lace::IdMatrix points = lace::parse_id_matrix_csv(lace::read_file(points_path));
      ensure_dir(out_path);
      if (method == "kmeans") {
        const auto km = lace::kmeans_baseline(points.values, cfg.target_k, cfg.seed,
                                              cfg.kmeans_restarts);
        lace::write_file(fs::path(out_path) / "partition.csv",
                         lace::partition_to_csv(points.ids, km.partition.community));
      } else {
        const lace::ScanResult scan = lace::cluster_stage(points.values, cfg);
        lace::write_file(fs::path(out_path) / "partition.csv",
                         lace::partition_to_csv(points.ids, scan.partition.community));
        lace::write_file(fs::path(out_path) / "scan.json", lace::scan_to_json(scan));
        if (!scan.exact) {
          std::cerr << "warning: no resolution produced " << cfg.target_k
                    << " communities; using " << scan.partition.count << "\n";
        }
      }
      return 0;
    }

    current = "ingest";
    const lace::CellSet cells = read_cells(cells_path, cfg);
    const lace::RoiMask mask = lace::load_roi_mask(mask_path);
    ensure_dir(out_path);
    const fs::path out(out_path);

    if (*pipeline) {
      current = "pipeline";
      const lace::PipelineResult r = lace::run_pipeline(cells, mask, cfg);
      report_warnings(r.warnings);
      if (!r.scan.exact) {
        std::cerr << "warning: no resolution produced " << cfg.target_k << " communities; using "
                  << r.scan.partition.count << "\n";
      }
      lace::write_pipeline_outputs(out, cells, r);
      return 0;
    }

    current = "laplace";
    std::vector<std::string> warnings;
    lace::LaplaceField field;
    const std::vector<double> ell = lace::laplace_stage(cells, mask, cfg, &field, &warnings);
    report_warnings(warnings);
    if (*laplace) {
      lace::write_pgm(out / "laplace.pgm", lace::field_to_pgm(field));
      std::vector<std::int64_t> ids;
      for (const lace::Cell& c : cells.cells) ids.push_back(c.id);
      lace::Matrix col(static_cast<Eigen::Index>(ell.size()), 1);
      for (size_t i = 0; i < ell.size(); ++i) col(static_cast<Eigen::Index>(i), 0) = ell[i];
      lace::write_file(out / "laplace_coordinates.csv",
                       lace::id_matrix_to_csv(ids, {"laplace_coordinate"}, col));
      return 0;
    }

    current = "features";
    const lace::FeatureMatrix x = lace::feature_stage(cells, ell, cfg);
    lace::write_file(out / "features.csv", lace::features_to_csv(x, cells));
    if (*features) return 0;

    current = "train";
    const lace::EmbeddingSet emb = lace::train_stage(cells, x, ell, cfg);
    lace::write_file(out / "embeddings.csv", lace::embeddings_to_csv(cells, emb.h));
    lace::write_file(out / "loss_trace.csv", lace::loss_trace_csv(emb.epoch_losses));
    return 0;
  } catch (const std::exception& e) {
    std::cerr << "lace " << current << ": " << e.what() << "\n";
    return exit_code(e);
  }
}
