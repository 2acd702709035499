#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <span>
#include <string>
#include <vector>

namespace lobbench {

/// Rows are true classes, columns predicted classes.
struct ConfusionMatrix {
  int k = 0;
  std::vector<std::uint64_t> counts;  // row-major k x k

  static ConfusionMatrix zeros(int k);
  std::uint64_t at(int truth, int pred) const { return counts[static_cast<std::size_t>(truth * k + pred)]; }
  std::uint64_t& at(int truth, int pred) { return counts[static_cast<std::size_t>(truth * k + pred)]; }
  std::uint64_t total() const;
  bool operator==(const ConfusionMatrix&) const = default;
};

/// Throws DataError on length mismatch or a label outside [0, k).
ConfusionMatrix confusion(std::span<const int> y_true, std::span<const int> y_pred, int k);

struct ClassMetrics {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  std::uint64_t support = 0;
};

struct MetricsReport {
  double accuracy = 0.0;
  std::vector<ClassMetrics> per_class;
  double macro_f1 = 0.0;
  double weighted_f1 = 0.0;
  std::uint64_t total = 0;
  double train_seconds = 0.0;
  double infer_ms_per_1k = 0.0;
  std::map<std::string, std::string> meta;
};

/// Per-class precision, recall and F1 with 0 for any zero denominator.
/// Throws DataError when the matrix is empty.
MetricsReport metrics(const ConfusionMatrix& m);

enum class Phase { Train, Infer };

/// Runs `thunk` under a monotonic clock and returns elapsed seconds.
double time_phase(const std::function<void()>& thunk);

/// Times `thunk` and stores the result in `report`. Inference time is
/// normalised per 1,000 samples.
double time_phase(Phase phase, const std::function<void()>& thunk, MetricsReport& report,
                  std::size_t samples = 0);

/// Long format `model,metric,class,value`. Timings are not part of it so the
/// file is a pure function of the predictions.
std::string metrics_csv_header();
std::string metrics_csv_rows(const MetricsReport& r, const std::string& model);

struct MetricsRow {
  std::string model;
  std::string metric;
  std::string cls;  // empty for aggregate metrics
  double value = 0.0;
};

/// Reads the long format back; throws DataError on a bad header or row.
std::vector<MetricsRow> parse_metrics_csv(const std::string& text);

std::string confusion_csv(const ConfusionMatrix& m);
std::string metrics_markdown(const MetricsReport& r, const std::string& model);

/// Fixed-precision decimal used by every emitted table.
std::string format_metric(double v, int digits = 4);

}  // namespace lobbench
