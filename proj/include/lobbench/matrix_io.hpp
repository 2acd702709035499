#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "lobbench/feature_matrix.hpp"
#include "lobbench/labeling.hpp"
#include "lobbench/train_config.hpp"

namespace lobbench {

/// CSV with a `ts` column followed by the matrix columns. Values use the
/// shortest round-trip decimal form, so write -> read is lossless.
void write_matrix_csv(const FeatureMatrix& m, std::ostream& out);
FeatureMatrix read_matrix_csv(std::istream& in);
void save_matrix_csv(const FeatureMatrix& m, const std::filesystem::path& path);
FeatureMatrix load_matrix_csv(const std::filesystem::path& path);

/// `ts,label,return`; invalid rows carry label -1 and an empty return.
void write_labels_csv(const std::vector<std::int64_t>& ts, const LabelSet& labels, std::ostream& out);

struct LabelRows {
  std::vector<std::int64_t> ts;
  std::vector<int> labels;
  std::vector<double> returns;
};
LabelRows read_labels_csv(std::istream& in);

/// `ts,label,pred,p0..p{K-1}` for each evaluated sample.
struct PredictionRows {
  int classes = 0;
  std::vector<std::int64_t> ts;
  std::vector<int> labels;
  std::vector<int> predicted;
  std::vector<double> probs;  // n x classes
};

PredictionRows make_prediction_rows(const std::vector<std::int64_t>& ts, const std::vector<int>& labels,
                                    const Prediction& p);
void write_predictions_csv(const PredictionRows& rows, std::ostream& out);
PredictionRows read_predictions_csv(std::istream& in);

/// Shortest decimal that parses back to the same double.
std::string format_double(double v);

std::string read_text_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, const std::string& text);

}  // namespace lobbench
