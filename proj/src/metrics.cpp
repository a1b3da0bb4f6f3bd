#include "lace/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <unordered_map>
#include <utility>
#include <vector>

#include <json.hpp>

#include "lace/error.hpp"

namespace lace {

namespace {

void check_lengths(std::span<const int> a, std::span<const int> b, const char* what) {
  if (a.size() != b.size()) {
    throw ArgumentError(std::string(what) + ": labelings differ in length (" +
                        std::to_string(a.size()) + " vs " + std::to_string(b.size()) + ")");
  }
}

struct Contingency {
  std::map<std::pair<int, int>, double> joint;
  std::unordered_map<int, double> rows;
  std::unordered_map<int, double> cols;
};

Contingency contingency(std::span<const int> a, std::span<const int> b) {
  Contingency t;
  for (size_t i = 0; i < a.size(); ++i) {
    t.joint[{a[i], b[i]}] += 1.0;
    t.rows[a[i]] += 1.0;
    t.cols[b[i]] += 1.0;
  }
  return t;
}

double choose2(double x) { return 0.5 * x * (x - 1.0); }

double round4(double v) { return std::round(v * 1e4) / 1e4; }

}  // namespace

BCubed bcubed(std::span<const int> pred, std::span<const int> truth) {
  check_lengths(pred, truth, "bcubed");
  BCubed out;
  if (pred.empty()) return out;
  const Contingency t = contingency(pred, truth);
  double p = 0.0;
  double r = 0.0;
  for (size_t i = 0; i < pred.size(); ++i) {
    const double shared = t.joint.at({pred[i], truth[i]});
    p += shared / t.rows.at(pred[i]);
    r += shared / t.cols.at(truth[i]);
  }
  const auto n = static_cast<double>(pred.size());
  out.precision = p / n;
  out.recall = r / n;
  const double s = out.precision + out.recall;
  out.f1 = s > 0.0 ? 2.0 * out.precision * out.recall / s : 0.0;
  return out;
}

double ari(std::span<const int> pred, std::span<const int> truth) {
  check_lengths(pred, truth, "ari");
  if (pred.size() < 2) throw ArgumentError("ari: need at least two items");
  const Contingency t = contingency(pred, truth);
  double index = 0.0;
  for (const auto& [key, c] : t.joint) index += choose2(c);
  double sum_rows = 0.0;
  double sum_cols = 0.0;
  for (const auto& [key, c] : t.rows) sum_rows += choose2(c);
  for (const auto& [key, c] : t.cols) sum_cols += choose2(c);
  const double expected = sum_rows * sum_cols / choose2(static_cast<double>(pred.size()));
  const double max_index = 0.5 * (sum_rows + sum_cols);
  const double denom = max_index - expected;
  if (denom == 0.0) {
    // Only reachable when both are all-singletons or both are one cluster.
    return 1.0;
  }
  return (index - expected) / denom;
}

double nmi(std::span<const int> pred, std::span<const int> truth) {
  check_lengths(pred, truth, "nmi");
  if (pred.empty()) throw ArgumentError("nmi: empty labelings");
  const Contingency t = contingency(pred, truth);
  const auto n = static_cast<double>(pred.size());
  auto entropy = [n](const std::unordered_map<int, double>& counts) {
    double h = 0.0;
    for (const auto& [key, c] : counts) h -= (c / n) * std::log(c / n);
    return h;
  };
  const double ha = entropy(t.rows);
  const double hb = entropy(t.cols);
  if (ha == 0.0 && hb == 0.0) return 1.0;
  double mi = 0.0;
  for (const auto& [key, c] : t.joint) {
    mi += (c / n) * std::log(c * n / (t.rows.at(key.first) * t.cols.at(key.second)));
  }
  const double v = mi / (0.5 * (ha + hb));
  return std::clamp(v, 0.0, 1.0);
}

MetricsReport evaluate_labels(std::span<const int> pred, std::span<const int> truth) {
  MetricsReport r;
  const BCubed b = bcubed(pred, truth);
  r.bcubed_p = b.precision;
  r.bcubed_r = b.recall;
  r.bcubed_f1 = b.f1;
  r.ari = ari(pred, truth);
  r.nmi = nmi(pred, truth);
  return r;
}

std::string MetricsReport::to_json() const {
  nlohmann::ordered_json doc;
  doc["bcubed_p"] = round4(bcubed_p);
  doc["bcubed_r"] = round4(bcubed_r);
  doc["bcubed_f1"] = round4(bcubed_f1);
  doc["ari"] = round4(ari);
  doc["nmi"] = round4(nmi);
  return doc.dump() + "\n";
}

std::string MetricsReport::table_header() {
  char buf[128];
  std::snprintf(buf, sizeof buf, "%-12s %6s %6s %6s %6s %6s", "method", "P", "R", "F1", "ARI",
                "NMI");
  return buf;
}

std::string MetricsReport::table_row(const std::string& name) const {
  char buf[160];
  std::snprintf(buf, sizeof buf, "%-12s %6.1f %6.1f %6.1f %6.1f %6.1f", name.c_str(),
                100 * bcubed_p, 100 * bcubed_r, 100 * bcubed_f1, 100 * ari, 100 * nmi);
  return buf;
}

}  // namespace lace
