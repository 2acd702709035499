#include "lobbench/train_config.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "lobbench/errors.hpp"

namespace lobbench {

void TrainConfig::validate() const {
  if (epochs < 1) throw ConfigError("model.epochs must be >= 1");
  if (rounds < 1) throw ConfigError("model.rounds must be >= 1");
  if (max_depth < 1) throw ConfigError("model.max_depth must be >= 1");
  if (min_samples_leaf < 1) throw ConfigError("model.min_samples_leaf must be >= 1");
  if (bins < 2 || bins > 65535) throw ConfigError("model.bins must be in [2, 65535]");
  if (!(lambda >= 0.0)) throw ConfigError("model.lambda must be >= 0");
  if (!(l2 >= 0.0)) throw ConfigError("model.l2 must be >= 0");
  if (!(learning_rate >= 0.0) || !std::isfinite(learning_rate)) {
    throw ConfigError("model.learning_rate must be finite and >= 0");
  }
  if (early_stopping_rounds < 1) throw ConfigError("model.early_stopping_rounds must be >= 1");
  for (double w : class_weights) {
    if (!(w > 0.0) || !std::isfinite(w)) throw ConfigError("class weights must be positive");
  }
}

std::vector<int> Prediction::argmax() const {
  std::vector<int> out(size());
  for (std::size_t i = 0; i < out.size(); ++i) {
    const auto r = row(i);
    out[i] = static_cast<int>(std::max_element(r.begin(), r.end()) - r.begin());
  }
  return out;
}

void softmax(std::span<double> logits) {
  const double mx = *std::max_element(logits.begin(), logits.end());
  double sum = 0.0;
  for (double& v : logits) {
    v = std::exp(v - mx);
    sum += v;
  }
  for (double& v : logits) v /= sum;
}

std::vector<double> sample_weights(std::span<const int> y, std::span<const double> class_weights) {
  std::vector<double> w(y.size(), 1.0);
  if (class_weights.empty()) return w;
  for (std::size_t i = 0; i < y.size(); ++i) {
    const auto c = static_cast<std::size_t>(y[i]);
    if (c >= class_weights.size()) throw DataError("label has no class weight");
    w[i] = class_weights[c];
  }
  return w;
}

double weighted_log_loss(const Prediction& p, std::span<const int> y,
                         std::span<const double> class_weights) {
  if (p.size() != y.size()) throw DataError("prediction/label length mismatch");
  const auto w = sample_weights(y, class_weights);
  double num = 0.0;
  double den = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    const double prob = std::max(p.row(i)[static_cast<std::size_t>(y[i])], 1e-300);
    num += w[i] * -std::log(prob);
    den += w[i];
  }
  return den > 0.0 ? num / den : 0.0;
}

}  // namespace lobbench
