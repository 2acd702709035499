#pragma once

#include <array>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "lobbench/feature_matrix.hpp"
#include "lobbench/filters.hpp"
#include "lobbench/ingest.hpp"

namespace lobbench {

enum class Feature { Mid, Imb1, Imb5, WmidChange, CumDepth };

const char* to_string(Feature f);
Feature feature_from_string(const std::string& s);

/// Level weights for the weighted mid change, w_i proportional to 1/i.
inline constexpr std::array<double, 3> kDefaultMidWeights = {6.0 / 11.0, 3.0 / 11.0,
                                                             2.0 / 11.0};

struct FeatureSpec {
  std::size_t depth = 10;
  bool include_raw_levels = true;
  std::vector<Feature> engineered = {Feature::Mid, Feature::Imb1, Feature::Imb5,
                                     Feature::WmidChange, Feature::CumDepth};
  std::array<double, 3> weights = kDefaultMidWeights;

  bool has(Feature f) const;
  /// Throws ConfigError when the depth cannot support a requested feature or
  /// the weights do not sum to one.
  void validate() const;
};

double mid_price(const BookFrame& f);

/// Order imbalance over the first L levels, in [-1, 1]; 0 when both sides
/// hold no quantity.
double imbalance(const BookFrame& f, std::size_t levels);
double imbalance(std::span<const double> bid_qty, std::span<const double> ask_qty,
                 std::size_t levels);

double weighted_mid_change(const BookFrame& prev, const BookFrame& cur,
                           const std::array<double, 3>& w = kDefaultMidWeights);

/// Prefix sums of quantity per side, best level first.
std::pair<std::vector<double>, std::vector<double>> cumulative_depth(const BookFrame& f);

/// Raw level columns named bp1,bq1,ap1,aq1,...,bpk,bqk,apk,aqk.
FeatureMatrix frames_to_matrix(const std::vector<BookFrame>& frames);

/// Number of complete levels present as raw columns in `m`.
std::size_t level_depth(const FeatureMatrix& m);

/// Engineered features computed from (possibly filtered) raw level columns.
/// Output columns: raw levels (optional) followed by the engineered columns
/// in the order given by the spec.
FeatureMatrix derive_features(const FeatureMatrix& levels, const FeatureSpec& spec);

FeatureMatrix build_feature_matrix(const std::vector<BookFrame>& frames,
                                   const FeatureSpec& spec);

/// Mid-price series from the bp1/ap1 columns.
std::vector<double> mid_series(const FeatureMatrix& levels);

struct Normalizer {
  std::vector<std::string> columns;
  std::vector<double> mean;
  std::vector<double> stddev;
  std::vector<bool> constant;  // passed through unscaled
  RowRange fitted;
};

/// Z-score statistics from the rows in `train` only.
Normalizer fit_normalizer(const FeatureMatrix& m, RowRange train);

/// Single use: throws if `m` is already normalized.
FeatureMatrix apply_normalizer(const FeatureMatrix& m, const Normalizer& norm);

}  // namespace lobbench
