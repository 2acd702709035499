#pragma once

#include <vector>

#include "lobbench/dataset.hpp"
#include "lobbench/train_config.hpp"

namespace lobbench {

/// Multinomial logistic regression. Row c of `weights` holds the D feature
/// coefficients followed by the bias of class c.
struct LogisticModel {
  int classes = 2;
  int features = 0;
  std::vector<double> weights;  // classes x (features + 1)

  static LogisticModel zeros(int classes, int features);
  double& w(int c, int j) { return weights[static_cast<std::size_t>(c * (features + 1) + j)]; }
  double w(int c, int j) const { return weights[static_cast<std::size_t>(c * (features + 1) + j)]; }
  double& bias(int c) { return w(c, features); }

  bool operator==(const LogisticModel&) const = default;
};

struct LossAndGradient {
  double loss = 0.0;
  std::vector<double> gradient;  // same layout as LogisticModel::weights
};

/// Class-weighted mean softmax cross-entropy plus (l2/2)*||W||^2 over the
/// non-bias coefficients.
LossAndGradient logistic_loss_and_gradient(const LogisticModel& m, const Samples& data,
                                           std::span<const double> class_weights, double l2);

/// Full-batch gradient descent from zero weights for cfg.epochs steps of
/// size cfg.learning_rate. Throws TrainingDivergence on a non-finite loss.
LogisticModel train_logistic(const Samples& train, const TrainConfig& cfg, int classes);

Prediction predict_proba(const LogisticModel& m, const Samples& data);

}  // namespace lobbench
