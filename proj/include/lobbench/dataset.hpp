#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "lobbench/feature_matrix.hpp"
#include "lobbench/filters.hpp"
#include "lobbench/labeling.hpp"

namespace lobbench {

enum class WindowAnchor { Last, First };

const char* to_string(WindowAnchor a);
WindowAnchor window_anchor_from_string(const std::string& s);

/// T consecutive feature rows (row-major, time then feature) with the label
/// read at the anchor row.
struct SampleWindow {
  std::size_t t = 0;
  std::size_t f = 0;
  std::vector<double> rows;
  int label = label::kInvalid;
  std::int64_t anchor_ts = 0;
  std::size_t last_row = 0;

  double at(std::size_t step, std::size_t feature) const { return rows[step * f + feature]; }
};

struct WindowOptions {
  std::size_t t = 1;
  std::int64_t grid_ms = 100;
  WindowAnchor anchor = WindowAnchor::Last;
};

/// Row index holding the label for a window whose last row is `last_row`.
std::size_t label_row(std::size_t last_row, std::size_t t, WindowAnchor anchor);

/// Last-row indices of every admissible window: rows [e-T+1, e] contiguous
/// on the grid and a valid label at the anchor row. Strictly increasing.
std::vector<std::size_t> window_ends(std::span<const std::int64_t> ts, const LabelSet& labels,
                                     const WindowOptions& opts);

std::vector<SampleWindow> make_windows(const FeatureMatrix& m, const LabelSet& labels,
                                       const WindowOptions& opts);

std::vector<double> flatten_window(const SampleWindow& w);
SampleWindow unflatten_window(std::span<const double> flat, std::size_t t, std::size_t f,
                              int label, std::int64_t anchor_ts);

struct SplitSpec {
  double train_frac = 0.8;
  double val_frac_of_train = 0.2;

  void validate() const;
};

struct SplitRanges {
  RowRange train;
  RowRange val;
  RowRange test;
};

/// Chronological split by floor boundaries: train|val|test.
SplitRanges chronological_split(std::size_t n_windows, const SplitSpec& spec);

/// Dense model input: n samples of T*F float features.
struct Samples {
  std::size_t t = 1;
  std::size_t f = 0;
  std::vector<float> x;  // n x (t*f), row-major
  std::vector<int> y;
  std::vector<std::int64_t> anchor_ts;

  std::size_t size() const { return y.size(); }
  std::size_t width() const { return t * f; }
  std::span<const float> row(std::size_t i) const {
    return {x.data() + i * width(), width()};
  }
  std::vector<std::size_t> class_counts(int num_classes) const;
  bool operator==(const Samples&) const = default;
};

/// Gathers windows ending at `ends` into flat sample rows.
Samples materialize(const FeatureMatrix& m, const LabelSet& labels,
                    std::span<const std::size_t> ends, const WindowOptions& opts);

struct DatasetMeta {
  std::vector<std::string> columns;
  int classes = 2;
  std::string label_kind = "binary";
  std::string label_source = "filtered";
  int horizon_steps = 1;
  std::string filter = "raw";
  std::size_t depth = 0;
  double epsilon = 0.0;
  std::vector<double> class_weights;
  std::uint64_t seed = 0;
  std::string config_hash;

  bool operator==(const DatasetMeta&) const = default;
};

struct ExperimentDataset {
  Samples train;
  Samples val;
  Samples test;
  DatasetMeta meta;

  bool operator==(const ExperimentDataset&) const = default;
};

/// Writes <split>.x.f32 (little-endian float32, N x T x F), <split>.y.i8 and
/// manifest.txt (key=value lines) into `dir`.
void export_tensors(const ExperimentDataset& ds, const std::filesystem::path& dir);

std::map<std::string, std::string> read_manifest(const std::filesystem::path& file);

/// Inverse of export_tensors. `x_pattern` names the feature file per split
/// with `{split}` substituted; a different width than the manifest's T*F is
/// accepted (e.g. embeddings) and read as T=1.
ExperimentDataset import_tensors(const std::filesystem::path& dir,
                                 const std::string& x_pattern = "{split}.x.f32");

}  // namespace lobbench
