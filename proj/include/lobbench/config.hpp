#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "lobbench/dataset.hpp"
#include "lobbench/features.hpp"
#include "lobbench/filters.hpp"
#include "lobbench/labeling.hpp"
#include "lobbench/model.hpp"

namespace lobbench {

/// Ordered key=value pairs as read from a config file.
using KeyValues = std::vector<std::pair<std::string, std::string>>;

/// Parses `key = value` lines; `#` starts a comment. Throws ConfigError on
/// a line without '=' or a repeated key.
KeyValues parse_key_values(const std::string& text);

enum class KalmanScale { Variance, Absolute };

struct ExperimentConfig {
  std::string input;
  std::string input_format = "canonical";  // canonical | bybit
  std::size_t max_snapshots = 0;           // 0 keeps every record
  bool take_before_depth_filter = true;
  std::int64_t grid_ms = 100;
  std::size_t depth = 10;

  std::string filter_kind = "raw";  // raw | sg | kalman
  SgConfig sg;
  KalmanConfig kalman;
  bool kalman_grid_search = false;
  KalmanScale kalman_scale = KalmanScale::Variance;

  bool raw_levels = true;
  std::vector<Feature> engineered = {Feature::Mid, Feature::Imb1, Feature::Imb5,
                                     Feature::WmidChange, Feature::CumDepth};

  LabelKind label_kind = LabelKind::Binary;
  std::int64_t horizon_ms = 100;
  std::optional<double> epsilon;  // nullopt = tune on train
  LabelSource label_source = LabelSource::Filtered;
  TieRule tie_rule = TieRule::Up;

  std::size_t window_t = 1;
  WindowAnchor anchor = WindowAnchor::Last;
  SplitSpec split;

  ModelKind model = ModelKind::Gbdt;
  TrainConfig train;
  bool inverse_class_weights = true;
  bool use_grid = false;
  SearchGrid grid;

  std::string output_dir = "results";
  std::uint64_t seed = 0;

  void validate() const;

  FilterKind filter() const;
  FeatureSpec feature_spec() const;
  LabelScheme label_scheme() const;
  Horizon horizon() const;
  WindowOptions window_options() const;

  /// Sorted `key = value` lines covering every field except output.dir.
  std::string canonical() const;
  /// SHA-256 of canonical(); the experiment id.
  std::string content_hash() const;
};

/// Applies overrides on top of defaults; unknown keys are a ConfigError.
ExperimentConfig config_from_key_values(const KeyValues& kv,
                                        ExperimentConfig base = ExperimentConfig{});
ExperimentConfig parse_config(const std::string& text);
ExperimentConfig load_config(const std::string& path);

/// Every key accepted in a config file.
const std::vector<std::string>& config_keys();

/// A matrix file is a config whose `matrix.<key> = v1, v2, ...` lines list
/// axis values. Cells are the cartesian product, first axis outermost.
struct MatrixSpec {
  KeyValues base;
  std::vector<std::pair<std::string, std::vector<std::string>>> axes;

  std::vector<ExperimentConfig> expand() const;
};

MatrixSpec parse_matrix(const std::string& text);

}  // namespace lobbench
