#include <pybind11/eigen.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "lace/community.hpp"
#include "lace/error.hpp"
#include "lace/metrics.hpp"
#include "lace/pipeline.hpp"
#include "lace/synth.hpp"

namespace py = pybind11;
using namespace lace;

namespace {

Matrix centroid_matrix(const CellSet& cells) {
  Matrix out(static_cast<Eigen::Index>(cells.size()), 2);
  for (size_t i = 0; i < cells.size(); ++i) {
    out(static_cast<Eigen::Index>(i), 0) = cells.cells[i].centroid.x;
    out(static_cast<Eigen::Index>(i), 1) = cells.cells[i].centroid.y;
  }
  return out;
}

std::vector<std::int64_t> cell_ids(const CellSet& cells) {
  std::vector<std::int64_t> ids;
  for (const Cell& c : cells.cells) ids.push_back(c.id);
  return ids;
}

PipelineConfig config_from(const py::object& obj) {
  if (obj.is_none()) return {};
  if (py::isinstance<PipelineConfig>(obj)) return obj.cast<PipelineConfig>();
  PipelineConfig cfg;
  for (auto item : obj.cast<py::dict>()) {
    const auto json = py::module_::import("json");
    const std::string key = item.first.cast<std::string>();
    const std::string value = json.attr("dumps")(item.second).cast<std::string>();
    cfg.apply_override(key + "=" + value);
  }
  return cfg;
}

py::dict metrics_dict(const MetricsReport& r) {
  py::dict d;
  d["bcubed_p"] = r.bcubed_p;
  d["bcubed_r"] = r.bcubed_r;
  d["bcubed_f1"] = r.bcubed_f1;
  d["ari"] = r.ari;
  d["nmi"] = r.nmi;
  return d;
}

py::dict scan_dict(const ScanResult& s) {
  py::dict d;
  d["labels"] = s.partition.community;
  d["communities"] = s.partition.count;
  d["modularity"] = s.partition.quality;
  d["gamma"] = s.partition.resolution;
  d["exact"] = s.exact;
  return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Cortical layer identification from segmented cell polygons";

  auto base = py::register_exception<Error>(m, "LaceError", PyExc_RuntimeError);
  py::register_exception<IoError>(m, "IoError", base.ptr());
  py::register_exception<ParseError>(m, "ParseError", base.ptr());
  py::register_exception<ValidationError>(m, "ValidationError", base.ptr());
  py::register_exception<ArgumentError>(m, "ArgumentError", base.ptr());
  py::register_exception<ConvergenceError>(m, "ConvergenceError", base.ptr());
  py::register_exception<GenerationError>(m, "GenerationError", base.ptr());
  py::register_exception<NumericalError>(m, "NumericalError", base.ptr());

  py::class_<CellSet>(m, "CellSet")
      .def_readonly("width", &CellSet::width)
      .def_readonly("height", &CellSet::height)
      .def("__len__", &CellSet::size)
      .def_property_readonly("ids", &cell_ids)
      .def_property_readonly("centroids", &centroid_matrix)
      .def("polygon", [](const CellSet& cs, size_t i) {
        if (i >= cs.size()) throw py::index_error();
        std::vector<std::pair<double, double>> out;
        for (const Point& p : cs.cells[i].polygon) out.emplace_back(p.x, p.y);
        return out;
      })
      .def("to_json", &cells_to_json);

  py::class_<RoiMask>(m, "RoiMask")
      .def_readonly("width", &RoiMask::width)
      .def_readonly("height", &RoiMask::height)
      .def_property_readonly("codes", [](const RoiMask& mask) {
        py::array_t<std::uint8_t> out({mask.height, mask.width});
        std::copy(mask.codes.begin(), mask.codes.end(), out.mutable_data());
        return out;
      });

  py::class_<PipelineConfig>(m, "Config")
      .def(py::init<>())
      .def_static("from_json", &PipelineConfig::from_json)
      .def_static("load", &PipelineConfig::load)
      .def("to_json", &PipelineConfig::to_json)
      .def("set", &PipelineConfig::apply_override, py::arg("assignment"))
      .def("validate", &PipelineConfig::validate);

  m.def("parse_cells_json", &parse_cells_json, py::arg("text"));
  m.def(
      "load_cells",
      [](const std::filesystem::path& path, const std::string& format) {
        return load_cells(path, parse_cell_format(format));
      },
      py::arg("path"), py::arg("format") = "json-polygons");
  m.def("load_mask", &load_roi_mask, py::arg("path"));

  m.def(
      "synthesize",
      [](std::uint64_t seed, double scale, const std::string& config_json) {
        SynthConfig cfg = config_json.empty() ? synthetic_cortex_5(seed)
                                              : SynthConfig::from_json(config_json);
        cfg.seed = seed;
        cfg.width = static_cast<int>(std::lround(cfg.width * scale));
        cfg.height = static_cast<int>(std::lround(cfg.height * scale));
        SynthInstance inst = generate(cfg);
        return py::make_tuple(std::move(inst.cells), std::move(inst.mask), inst.truth);
      },
      py::arg("seed") = 0, py::arg("scale") = 1.0, py::arg("config_json") = "",
      "Generate a layered instance; returns (cells, mask, band labels).");

  m.def(
      "laplace_coordinates",
      [](const CellSet& cells, const RoiMask& mask, const py::object& config) {
        return laplace_stage(cells, mask, config_from(config), nullptr, nullptr);
      },
      py::arg("cells"), py::arg("mask"), py::arg("config") = py::none());

  m.def(
      "features",
      [](const CellSet& cells, const std::vector<double>& ell, const py::object& config) {
        FeatureMatrix f = feature_stage(cells, ell, config_from(config));
        return py::make_tuple(std::move(f.values), f.column_names);
      },
      py::arg("cells"), py::arg("ell"), py::arg("config") = py::none(),
      "Returns (matrix, column names).");

  m.def(
      "train",
      [](const CellSet& cells, const Matrix& x, const std::vector<double>& ell,
         const py::object& config) {
        FeatureMatrix f;
        f.values = x;
        EmbeddingSet e = train_stage(cells, f, ell, config_from(config));
        std::vector<std::tuple<double, double, double>> losses;
        for (const EpochLoss& l : e.epoch_losses) losses.emplace_back(l.l1, l.l2, l.total);
        return py::make_tuple(std::move(e.h), losses);
      },
      py::arg("cells"), py::arg("features"), py::arg("ell"), py::arg("config") = py::none(),
      "Returns (embeddings, [(L1, L2, total) per epoch]).");

  m.def(
      "cluster",
      [](const Matrix& points, const py::object& config) {
        return scan_dict(cluster_stage(points, config_from(config)));
      },
      py::arg("points"), py::arg("config") = py::none());

  m.def(
      "kmeans",
      [](const Matrix& points, int k, std::uint64_t seed, int restarts) {
        return kmeans_baseline(points, k, seed, restarts).partition.community;
      },
      py::arg("points"), py::arg("k"), py::arg("seed") = 0, py::arg("restarts") = 50);

  m.def(
      "run_pipeline",
      [](const CellSet& cells, const RoiMask& mask, const py::object& config,
         const std::optional<std::filesystem::path>& out_dir) {
        const PipelineResult r = run_pipeline(cells, mask, config_from(config));
        if (out_dir) write_pipeline_outputs(*out_dir, cells, r);
        py::dict d = scan_dict(r.scan);
        d["ell"] = r.ell;
        d["features"] = r.features.values;
        d["embeddings"] = r.embedding.h;
        d["warnings"] = r.warnings;
        return d;
      },
      py::arg("cells"), py::arg("mask"), py::arg("config") = py::none(),
      py::arg("out_dir") = py::none());

  m.def("modularity", [](const Matrix& points, const std::vector<int>& labels, int n_neighbors,
                         double gamma) {
    return modularity(umap_connectivity(points, n_neighbors), labels, gamma);
  }, py::arg("points"), py::arg("labels"), py::arg("n_neighbors") = 15, py::arg("gamma") = 1.0,
     "Modularity of a labeling on the fuzzy neighbor graph of `points`.");

  m.def("ari", [](const std::vector<int>& a, const std::vector<int>& b) { return ari(a, b); });
  m.def("nmi", [](const std::vector<int>& a, const std::vector<int>& b) { return nmi(a, b); });
  m.def("bcubed", [](const std::vector<int>& pred, const std::vector<int>& truth) {
    const BCubed b = bcubed(pred, truth);
    return py::make_tuple(b.precision, b.recall, b.f1);
  });
  m.def("evaluate", [](const std::vector<int>& pred, const std::vector<int>& truth) {
    return metrics_dict(evaluate_labels(pred, truth));
  });
}
