#include "lobbench/logistic.hpp"

#include <cmath>

#include "lobbench/errors.hpp"

namespace lobbench {

LogisticModel LogisticModel::zeros(int classes, int features) {
  LogisticModel m;
  m.classes = classes;
  m.features = features;
  m.weights.assign(static_cast<std::size_t>(classes * (features + 1)), 0.0);
  return m;
}

namespace {

void logits_for(const LogisticModel& m, std::span<const float> x, std::span<double> out) {
  const auto d = static_cast<std::size_t>(m.features);
  for (int c = 0; c < m.classes; ++c) {
    const double* w = m.weights.data() + static_cast<std::size_t>(c) * (d + 1);
    double acc = w[d];
    for (std::size_t j = 0; j < d; ++j) acc += w[j] * static_cast<double>(x[j]);
    out[static_cast<std::size_t>(c)] = acc;
  }
}

void check_width(const LogisticModel& m, const Samples& data) {
  if (data.width() != static_cast<std::size_t>(m.features)) {
    throw DataError("feature width " + std::to_string(data.width()) +
                    " does not match model width " + std::to_string(m.features));
  }
}

}  // namespace

LossAndGradient logistic_loss_and_gradient(const LogisticModel& m, const Samples& data,
                                           std::span<const double> class_weights, double l2) {
  check_width(m, data);
  const auto d = static_cast<std::size_t>(m.features);
  const auto k = static_cast<std::size_t>(m.classes);
  const auto sw = sample_weights(data.y, class_weights);
  double total_w = 0.0;
  for (double w : sw) total_w += w;
  if (!(total_w > 0.0)) throw DataError("logistic: empty training set");

  LossAndGradient out;
  out.gradient.assign(m.weights.size(), 0.0);
  std::vector<double> p(k);
  double loss = 0.0;
  for (std::size_t i = 0; i < data.size(); ++i) {
    const auto x = data.row(i);
    logits_for(m, x, p);
    softmax(p);
    const auto yi = static_cast<std::size_t>(data.y[i]);
    const double wi = sw[i] / total_w;
    loss += wi * -std::log(std::max(p[yi], 1e-300));
    for (std::size_t c = 0; c < k; ++c) {
      const double r = wi * (p[c] - (c == yi ? 1.0 : 0.0));
      double* g = out.gradient.data() + c * (d + 1);
      for (std::size_t j = 0; j < d; ++j) g[j] += r * static_cast<double>(x[j]);
      g[d] += r;
    }
  }
  for (std::size_t c = 0; c < k; ++c) {
    for (std::size_t j = 0; j < d; ++j) {
      const double w = m.weights[c * (d + 1) + j];
      loss += 0.5 * l2 * w * w;
      out.gradient[c * (d + 1) + j] += l2 * w;
    }
  }
  out.loss = loss;
  return out;
}

LogisticModel train_logistic(const Samples& train, const TrainConfig& cfg, int classes) {
  cfg.validate();
  if (classes < 2) throw ConfigError("logistic: need at least 2 classes");
  if (train.size() == 0) throw DataError("logistic: empty training set");
  for (int y : train.y) {
    if (y < 0 || y >= classes) throw DataError("logistic: label out of range");
  }
  auto model = LogisticModel::zeros(classes, static_cast<int>(train.width()));
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    const auto lg = logistic_loss_and_gradient(model, train, cfg.class_weights, cfg.l2);
    if (!std::isfinite(lg.loss)) {
      throw TrainingDivergence("logistic loss became non-finite at epoch " +
                               std::to_string(epoch) + "; try a smaller learning rate");
    }
    for (std::size_t i = 0; i < model.weights.size(); ++i) {
      model.weights[i] -= cfg.learning_rate * lg.gradient[i];
    }
  }
  for (double w : model.weights) {
    if (!std::isfinite(w)) {
      throw TrainingDivergence("logistic weights diverged; try a smaller learning rate");
    }
  }
  return model;
}

Prediction predict_proba(const LogisticModel& m, const Samples& data) {
  check_width(m, data);
  Prediction p;
  p.classes = m.classes;
  p.probs.resize(data.size() * static_cast<std::size_t>(m.classes));
  for (std::size_t i = 0; i < data.size(); ++i) {
    std::span<double> out(p.probs.data() + i * static_cast<std::size_t>(m.classes),
                          static_cast<std::size_t>(m.classes));
    logits_for(m, data.row(i), out);
    softmax(out);
  }
  return p;
}

}  // namespace lobbench
