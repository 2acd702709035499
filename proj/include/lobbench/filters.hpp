#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "lobbench/feature_matrix.hpp"

namespace lobbench {

enum class SgMode { Centered, Causal };

/// Savitzky-Golay smoother: local degree-`degree` least-squares fit over a
/// window of 2*half_window+1 samples.
struct SgConfig {
  int half_window = 10;
  int degree = 3;
  SgMode mode = SgMode::Centered;

  void validate() const;
};

/// Scalar random-walk Kalman filter parameters (absolute variances).
struct KalmanConfig {
  double q = 1e-4;
  double r = 1e-2;
  std::optional<double> x0;  // defaults to the first observation
  std::optional<double> p0;  // defaults to r, or 1.0 when r == 0

  void validate() const;
};

/// Column-level Kalman settings as used by apply_filter. With
/// `scale_by_variance` the configured q and r are multiplied by the variance
/// of each column measured on the calibration rows.
struct KalmanFilterSpec {
  KalmanConfig base;
  bool scale_by_variance = true;
  bool grid_search = false;
};

struct RawFilter {};

struct FilterKind {
  std::variant<RawFilter, SgConfig, KalmanFilterSpec> spec;

  static FilterKind raw() { return {RawFilter{}}; }
  static FilterKind savitzky_golay(SgConfig cfg) { return {cfg}; }
  static FilterKind kalman(KalmanFilterSpec k) { return {k}; }

  std::string name() const;  // "raw" | "sg" | "kalman"
};

/// Weights of the least-squares polynomial fit over the given integer
/// offsets, evaluated at offset 0. Offset 0 must be one of the samples.
std::vector<double> lsq_point_weights(std::span<const int> offsets, int degree);

/// Convolution weights. Centered: index i is offset i - m, i in [0, 2m].
/// Causal: index i is offset i - 2m (window ends at the estimated sample).
std::vector<double> sg_weights(const SgConfig& cfg);

std::vector<double> sg_smooth(std::span<const double> series, const SgConfig& cfg);

struct KalmanTrace {
  std::vector<double> estimate;
  std::vector<double> gain;      // gain[0] is unused (0)
  std::vector<double> variance;  // posterior variance P_t
};

KalmanTrace kalman_run(std::span<const double> series, const KalmanConfig& cfg);
std::vector<double> kalman_smooth(std::span<const double> series,
                                  const KalmanConfig& cfg);

/// Fixed point of the gain recursion.
double kalman_steady_state_gain(double q, double r);

/// Mean squared error of the one-step-ahead prediction x̂_{t-1} for v_t.
double kalman_one_step_mse(std::span<const double> series, const KalmanConfig& cfg);

struct KalmanGridResult {
  double q = 0.0;
  double r = 0.0;
  double mse = 0.0;
};

/// Exhaustive search over q_grid x r_grid minimising the one-step-ahead MSE.
/// Ties resolve to the first cell in row-major (q, r) order.
KalmanGridResult kalman_grid_search(std::span<const double> series,
                                    std::span<const double> q_grid,
                                    std::span<const double> r_grid);

/// Decades 1e-6 .. 1.
std::vector<double> default_kalman_grid();

struct RowRange {
  std::size_t begin = 0;
  std::size_t end = 0;  // exclusive

  std::size_t size() const { return end - begin; }
  bool empty() const { return end <= begin; }
};

struct ColumnFilterParams {
  std::string column;
  double q = 0.0;
  double r = 0.0;
};

struct FilterOutput {
  FeatureMatrix matrix;
  std::vector<ColumnFilterParams> kalman_params;  // empty unless Kalman
};

/// Filters every column independently. `calibration` selects the rows used
/// for variance scaling and grid search (all rows when nullopt).
FilterOutput apply_filter_detailed(const FeatureMatrix& matrix, const FilterKind& kind,
                                   std::optional<RowRange> calibration = std::nullopt);

FeatureMatrix apply_filter(const FeatureMatrix& matrix, const FilterKind& kind,
                           std::optional<RowRange> calibration = std::nullopt);

}  // namespace lobbench
