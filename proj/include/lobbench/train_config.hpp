#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace lobbench {

struct TrainConfig {
  std::uint64_t seed = 0;
  // logistic regression
  int epochs = 300;
  double l2 = 1e-4;
  // gradient boosting
  int rounds = 100;
  int max_depth = 6;
  int min_samples_leaf = 20;
  int bins = 64;
  double lambda = 1.0;
  double min_child_weight = 1e-3;
  int early_stopping_rounds = 20;
  // shared: GD step for logistic, shrinkage for boosting
  double learning_rate = 0.1;
  // per-class loss weights; empty means all ones
  std::vector<double> class_weights;

  void validate() const;
};

/// Per-class probabilities, row-major n x classes.
struct Prediction {
  int classes = 0;
  std::vector<double> probs;

  std::size_t size() const { return classes == 0 ? 0 : probs.size() / static_cast<std::size_t>(classes); }
  std::span<const double> row(std::size_t i) const {
    return {probs.data() + i * static_cast<std::size_t>(classes), static_cast<std::size_t>(classes)};
  }
  /// Most probable class per row; ties resolve to the lower class index.
  std::vector<int> argmax() const;
};

/// In-place numerically stable softmax.
void softmax(std::span<double> logits);

/// Sample weights from class weights (all ones when `class_weights` empty).
std::vector<double> sample_weights(std::span<const int> y, std::span<const double> class_weights);

/// Sum_i w_i * -log p_{i,y_i} / Sum_i w_i.
double weighted_log_loss(const Prediction& p, std::span<const int> y,
                         std::span<const double> class_weights);

}  // namespace lobbench
