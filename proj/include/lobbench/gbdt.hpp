#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "lobbench/dataset.hpp"
#include "lobbench/train_config.hpp"

namespace lobbench {

struct TreeNode {
  std::int32_t feature = -1;  // -1 marks a leaf
  std::int32_t left = -1;
  std::int32_t right = -1;
  double threshold = 0.0;     // x <= threshold goes left
  double value = 0.0;         // leaf output

  bool operator==(const TreeNode&) const = default;
};

struct RegressionTree {
  std::vector<TreeNode> nodes;  // nodes[0] is the root

  double predict(std::span<const float> x) const;
  int depth() const;
  bool operator==(const RegressionTree&) const = default;
};

/// Equal-frequency histogram bins per feature. Bin edges are observed data
/// values, so a split "bin <= b" is the raw test "x <= edges[b]".
struct BinnedMatrix {
  std::size_t n = 0;
  std::size_t d = 0;
  std::vector<std::uint16_t> bins;          // column-major n x d
  std::vector<std::vector<double>> edges;   // per feature, ascending

  std::uint16_t bin(std::size_t row, std::size_t feature) const { return bins[feature * n + row]; }
};

BinnedMatrix build_bins(const Samples& data, int max_bins);

struct TreeParams {
  int max_depth = 6;
  int min_samples_leaf = 1;
  double lambda = 1.0;
  double min_child_weight = 0.0;
};

/// Split score used everywhere: GL^2/(HL+l) + GR^2/(HR+l) - G^2/(H+l).
double split_gain(double gl, double hl, double gr, double hr, double lambda);

/// Depth-limited second-order regression tree on the given rows. Candidate
/// order is feature-major then ascending threshold; the first best wins.
RegressionTree fit_tree(const BinnedMatrix& binned, std::span<const double> grad,
                        std::span<const double> hess, std::span<const std::uint32_t> rows,
                        const TreeParams& params);

struct GbdtModel {
  int classes = 2;
  int features = 0;
  double learning_rate = 0.1;
  std::vector<double> base_score;               // per class log prior
  std::vector<std::vector<RegressionTree>> rounds;  // rounds x classes
  int best_round = 0;
  std::vector<double> val_loss;                 // index r: loss after r rounds

  bool operator==(const GbdtModel&) const = default;
};

/// Softmax boosting with class-weighted gradients, early-stopped on the
/// class-weighted validation log-loss.
GbdtModel train_gbdt(const Samples& train, const TrainConfig& cfg, int classes,
                     const Samples& val);

Prediction predict_proba(const GbdtModel& m, const Samples& data);

/// Prediction using the first `rounds_used` rounds regardless of best_round.
Prediction predict_proba(const GbdtModel& m, const Samples& data, int rounds_used);

}  // namespace lobbench
