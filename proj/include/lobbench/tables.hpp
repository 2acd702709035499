#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "lobbench/eval.hpp"

namespace lobbench {

/// One finished (or failed) experiment in a matrix.
struct ResultCell {
  std::string label_kind = "binary";
  int horizon_ms = 100;
  std::size_t depth = 10;
  std::string filter = "raw";
  std::size_t t = 1;
  std::string model;
  std::string experiment_id;
  std::optional<MetricsReport> report;  // nullopt when the cell failed
  std::string error;
};

enum class TableMetric { Accuracy, WeightedF1 };

/// One row per cell: identifiers, headline metrics and the error note.
std::string results_csv(const std::vector<ResultCell>& cells);

/// Per label kind, one block per (horizon, depth); rows are filters
/// (raw, kalman, sg), columns are models. Failed cells are blank and listed
/// below the block.
std::string filter_tables_markdown(const std::vector<ResultCell>& cells,
                                   TableMetric metric = TableMetric::Accuracy);
std::string filter_tables_csv(const std::vector<ResultCell>& cells,
                              TableMetric metric = TableMetric::Accuracy);

/// Rows per (model, depth): accuracy, per-class F1, total support.
std::string depth_table_markdown(const std::vector<ResultCell>& cells);

/// Rows per (model, T): accuracy, per-class F1 and support, train time.
std::string sequence_table_markdown(const std::vector<ResultCell>& cells);

/// "42.1 s" below a minute, otherwise "7 m 04 s".
std::string format_duration(double seconds);

}  // namespace lobbench
