#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "lobbench/config.hpp"
#include "lobbench/errors.hpp"
#include "lobbench/eval.hpp"
#include "lobbench/ingest.hpp"
#include "lobbench/tables.hpp"

namespace lobbench {

inline constexpr const char* kVersion = "1.0.0";

/// How many times each cacheable stage actually executed.
struct StageCounters {
  std::size_t ingest = 0;
  std::size_t filter = 0;
  std::size_t features = 0;
};

/// Memoises ingest and filter+feature results keyed by the content hash of
/// the config fields each stage depends on.
class PipelineCache {
 public:
  struct IngestEntry {
    std::vector<BookFrame> frames;
    IngestStats stats;
    std::string input_sha256;
  };
  struct FeatureEntry {
    FeatureMatrix levels_filtered;
    FeatureMatrix features;
    std::vector<ColumnFilterParams> kalman_params;
  };

  std::map<std::string, std::shared_ptr<const IngestEntry>> ingest;
  std::map<std::string, std::shared_ptr<const FeatureEntry>> features;
  StageCounters counters;
};

/// Everything the data stages produce before training.
struct PreparedData {
  ExperimentDataset dataset;
  IngestStats stats;
  std::string input_sha256;
  std::size_t rows = 0;
  std::size_t candidate_windows = 0;
  std::size_t purged_windows = 0;
  std::size_t dropped_windows = 0;  // zero-return ties under the drop rule
  RowRange train_rows;              // rows used for train-fitted statistics
  double epsilon = 0.0;
  bool epsilon_tuned = false;
  std::vector<double> class_weights;
  Normalizer normalizer;
  std::vector<ColumnFilterParams> kalman_params;
  FeatureMatrix features;           // normalized
  LabelSet labels;
};

/// ingest -> level matrix -> filter -> features -> labels -> windows ->
/// split -> normalize. Every train-fitted statistic sees train rows only.
PreparedData prepare_dataset(const ExperimentConfig& cfg, PipelineCache* cache = nullptr);

struct RunResult {
  std::string experiment_id;
  std::filesystem::path dir;
  MetricsReport report;
  ConfusionMatrix confusion;
  Model model;
  TrainConfig chosen;
  std::optional<GridSearchResult> grid;
  PreparedData data;
};

/// Runs one experiment and writes results/<id>/{manifest.txt, metrics.csv,
/// metrics.md, confusion.csv, model.bin, predictions.csv, timings.csv}.
/// Failures are rethrown as StageError tagged with the failing stage.
RunResult run_experiment(const ExperimentConfig& cfg, PipelineCache* cache = nullptr);

struct MatrixResult {
  std::vector<ResultCell> cells;
  std::size_t failed = 0;
  StageCounters counters;
  int exit_code() const;
};

/// Runs every config (which must share an input), records per-cell
/// failures, and writes results.csv, tables.csv and tables.md under
/// `output_dir`.
MatrixResult run_matrix(const std::vector<ExperimentConfig>& configs,
                        const std::filesystem::path& output_dir, bool use_cache = true);

/// Writes the prepared train/val/test tensors and manifest into `dir`.
PreparedData export_experiment(const ExperimentConfig& cfg, const std::filesystem::path& dir);

/// Manifest text: canonical config lines followed by `run.*` facts.
std::string manifest_text(const ExperimentConfig& cfg, const RunResult& r);

/// Recovers the experiment config from a manifest, ignoring `run.*` keys.
ExperimentConfig config_from_manifest(const std::string& text);

/// Maps an exception onto the CLI exit code.
int exit_code_for(const std::exception& e);

/// Stage-tagged wrapper used by the runner and the CLI subcommands.
template <typename F>
auto run_stage(const std::string& stage, F&& f) -> decltype(f()) {
  try {
    return f();
  } catch (const StageError&) {
    throw;
  } catch (const std::exception& e) {
    throw StageError(stage, e.what(), exit_code_for(e));
  }
}

}  // namespace lobbench
