#pragma once

#include <filesystem>
#include <string>
#include <variant>
#include <vector>

#include "lobbench/gbdt.hpp"
#include "lobbench/logistic.hpp"

namespace lobbench {

enum class ModelKind { Logistic, Gbdt };

const char* to_string(ModelKind k);
ModelKind model_kind_from_string(const std::string& s);

using Model = std::variant<LogisticModel, GbdtModel>;

ModelKind kind_of(const Model& m);
int classes_of(const Model& m);
Prediction predict_proba(const Model& m, const Samples& data);

/// Trains one model; `val` drives early stopping for boosting and is unused
/// by logistic regression.
Model train_model(ModelKind kind, const Samples& train, const Samples& val,
                  const TrainConfig& cfg, int classes);

/// Versioned container: a text header (kind, classes, features,
/// hyperparameters, payload size) terminated by a "---" line, followed by a
/// little-endian binary payload.
void save_model(const Model& m, const TrainConfig& cfg, const std::filesystem::path& path);
std::string serialize_model(const Model& m, const TrainConfig& cfg);
Model load_model(const std::filesystem::path& path);
Model deserialize_model(const std::string& bytes);

struct SearchGrid {
  std::vector<int> rounds = {100, 300, 500};  // epochs for logistic regression
  std::vector<double> learning_rates = {0.05, 0.1, 0.3};
};

struct GridCell {
  int rounds = 0;
  double learning_rate = 0.0;
  double val_loss = 0.0;
  int best_round = 0;
  bool failed = false;
  std::string error;
};

struct GridSearchResult {
  TrainConfig best_config;
  std::size_t best_index = 0;
  std::vector<GridCell> cells;  // row-major over rounds x learning rates
  Model best_model;

  std::string report_csv() const;
};

/// Trains one model per cell and keeps the lowest class-weighted validation
/// log-loss; ties go to the smaller learning rate, then fewer rounds.
GridSearchResult grid_search(ModelKind kind, const SearchGrid& grid, const Samples& train,
                             const Samples& val, const TrainConfig& base, int classes);

}  // namespace lobbench
