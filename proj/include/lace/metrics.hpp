#pragma once

#include <span>
#include <string>

namespace lace {

struct BCubed {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

// Item-level precision/recall; each item counts itself.
BCubed bcubed(std::span<const int> pred, std::span<const int> truth);

// Pair-counting adjusted Rand index. Two identical partitions score 1 even
// when the expected index equals the maximum.
double ari(std::span<const int> pred, std::span<const int> truth);

// Mutual information over the arithmetic mean of the entropies; 1 when both
// labelings are constant.
double nmi(std::span<const int> pred, std::span<const int> truth);

struct MetricsReport {
  double bcubed_p = 0.0;
  double bcubed_r = 0.0;
  double bcubed_f1 = 0.0;
  double ari = 0.0;
  double nmi = 0.0;

  std::string to_json() const;          // values rounded to 4 decimals
  std::string table_row(const std::string& name) const;  // percentages
  static std::string table_header();
};

MetricsReport evaluate_labels(std::span<const int> pred, std::span<const int> truth);

}  // namespace lace
