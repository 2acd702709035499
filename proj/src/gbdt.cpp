#include "lobbench/gbdt.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "lobbench/errors.hpp"

namespace lobbench {

double RegressionTree::predict(std::span<const float> x) const {
  std::size_t i = 0;
  while (nodes[i].feature >= 0) {
    const auto& n = nodes[i];
    i = static_cast<std::size_t>(static_cast<double>(x[static_cast<std::size_t>(n.feature)]) <= n.threshold
                                     ? n.left
                                     : n.right);
  }
  return nodes[i].value;
}

int RegressionTree::depth() const {
  std::vector<int> level(nodes.size(), 0);
  int deepest = 0;
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    deepest = std::max(deepest, level[i]);
    if (nodes[i].feature >= 0) {
      level[static_cast<std::size_t>(nodes[i].left)] = level[i] + 1;
      level[static_cast<std::size_t>(nodes[i].right)] = level[i] + 1;
    }
  }
  return deepest;
}

BinnedMatrix build_bins(const Samples& data, int max_bins) {
  if (max_bins < 2) throw ConfigError("bins must be >= 2");
  BinnedMatrix b;
  b.n = data.size();
  b.d = data.width();
  b.bins.resize(b.n * b.d);
  b.edges.resize(b.d);
  std::vector<double> col(b.n);
  const auto nb = static_cast<std::size_t>(max_bins);
  for (std::size_t f = 0; f < b.d; ++f) {
    for (std::size_t i = 0; i < b.n; ++i) col[i] = static_cast<double>(data.x[i * b.d + f]);
    std::vector<double> sorted = col;
    std::sort(sorted.begin(), sorted.end());
    std::vector<double> uniq = sorted;
    uniq.erase(std::unique(uniq.begin(), uniq.end()), uniq.end());
    auto& edges = b.edges[f];
    if (uniq.size() <= nb) {
      edges = uniq;
    } else {
      // Upper edges at equal-rank positions; always observed values.
      for (std::size_t k = 1; k <= nb; ++k) {
        const std::size_t rank = (k * b.n + nb - 1) / nb - 1;
        const double v = sorted[std::min(rank, b.n - 1)];
        if (edges.empty() || v > edges.back()) edges.push_back(v);
      }
      if (edges.back() < sorted.back()) edges.push_back(sorted.back());
    }
    for (std::size_t i = 0; i < b.n; ++i) {
      const auto it = std::lower_bound(edges.begin(), edges.end(), col[i]);
      b.bins[f * b.n + i] = static_cast<std::uint16_t>(std::min<std::size_t>(
          static_cast<std::size_t>(it - edges.begin()), edges.size() - 1));
    }
  }
  return b;
}

double split_gain(double gl, double hl, double gr, double hr, double lambda) {
  const double g = gl + gr;
  const double h = hl + hr;
  return gl * gl / (hl + lambda) + gr * gr / (hr + lambda) - g * g / (h + lambda);
}

namespace {

struct Histogram {
  std::vector<double> g, h;
  std::vector<std::uint32_t> count;
};

class TreeBuilder {
 public:
  TreeBuilder(const BinnedMatrix& binned, std::span<const double> grad, std::span<const double> hess,
              const TreeParams& params)
      : binned_(binned), grad_(grad), hess_(hess), params_(params) {
    hist_.g.resize(64);
    hist_.h.resize(64);
    hist_.count.resize(64);
  }

  RegressionTree build(std::vector<std::uint32_t> rows) {
    tree_.nodes.clear();
    grow(std::move(rows), 0);
    return std::move(tree_);
  }

 private:
  std::int32_t grow(std::vector<std::uint32_t> rows, int depth) {
    const auto id = static_cast<std::int32_t>(tree_.nodes.size());
    tree_.nodes.emplace_back();
    double g = 0.0;
    double h = 0.0;
    for (auto r : rows) {
      g += grad_[r];
      h += hess_[r];
    }
    auto make_leaf = [&] {
      tree_.nodes[static_cast<std::size_t>(id)].value = -g / (h + params_.lambda);
      return id;
    };
    const auto min_leaf = static_cast<std::size_t>(params_.min_samples_leaf);
    if (depth >= params_.max_depth || rows.size() < 2 * min_leaf) return make_leaf();

    double best_gain = 0.0;
    std::int32_t best_feature = -1;
    std::size_t best_bin = 0;
    for (std::size_t f = 0; f < binned_.d; ++f) {
      const std::size_t nb = binned_.edges[f].size();
      if (nb < 2) continue;
      if (hist_.g.size() < nb) {
        hist_.g.resize(nb);
        hist_.h.resize(nb);
        hist_.count.resize(nb);
      }
      std::fill_n(hist_.g.begin(), nb, 0.0);
      std::fill_n(hist_.h.begin(), nb, 0.0);
      std::fill_n(hist_.count.begin(), nb, 0u);
      const std::uint16_t* col = binned_.bins.data() + f * binned_.n;
      for (auto r : rows) {
        const auto bin = col[r];
        hist_.g[bin] += grad_[r];
        hist_.h[bin] += hess_[r];
        ++hist_.count[bin];
      }
      double gl = 0.0;
      double hl = 0.0;
      std::size_t nl = 0;
      for (std::size_t b = 0; b + 1 < nb; ++b) {
        gl += hist_.g[b];
        hl += hist_.h[b];
        nl += hist_.count[b];
        const std::size_t nr = rows.size() - nl;
        if (nl < min_leaf) continue;
        if (nr < min_leaf) break;
        const double hr = h - hl;
        if (hl < params_.min_child_weight || hr < params_.min_child_weight) continue;
        const double gain = split_gain(gl, hl, g - gl, hr, params_.lambda);
        if (gain > best_gain) {
          best_gain = gain;
          best_feature = static_cast<std::int32_t>(f);
          best_bin = b;
        }
      }
    }
    if (best_feature < 0 || !(best_gain > 1e-12)) return make_leaf();

    std::vector<std::uint32_t> left;
    std::vector<std::uint32_t> right;
    const std::uint16_t* col = binned_.bins.data() + static_cast<std::size_t>(best_feature) * binned_.n;
    for (auto r : rows) (col[r] <= best_bin ? left : right).push_back(r);
    rows.clear();
    rows.shrink_to_fit();

    const double threshold = binned_.edges[static_cast<std::size_t>(best_feature)][best_bin];
    const auto l = grow(std::move(left), depth + 1);
    const auto rgt = grow(std::move(right), depth + 1);
    auto& node = tree_.nodes[static_cast<std::size_t>(id)];
    node.feature = best_feature;
    node.threshold = threshold;
    node.left = l;
    node.right = rgt;
    return id;
  }

  const BinnedMatrix& binned_;
  std::span<const double> grad_;
  std::span<const double> hess_;
  TreeParams params_;
  Histogram hist_;
  RegressionTree tree_;
};

void check_width(const GbdtModel& m, const Samples& data) {
  if (data.width() != static_cast<std::size_t>(m.features)) {
    throw DataError("feature width " + std::to_string(data.width()) +
                    " does not match model width " + std::to_string(m.features));
  }
}

Prediction probs_from_logits(std::vector<double> logits, int classes) {
  Prediction p;
  p.classes = classes;
  const auto k = static_cast<std::size_t>(classes);
  for (std::size_t i = 0; i < logits.size() / k; ++i) softmax({logits.data() + i * k, k});
  p.probs = std::move(logits);
  return p;
}

std::vector<double> base_logits(const GbdtModel& m, std::size_t n) {
  std::vector<double> logits(n * static_cast<std::size_t>(m.classes));
  for (std::size_t i = 0; i < n; ++i) {
    std::copy(m.base_score.begin(), m.base_score.end(),
              logits.begin() + static_cast<long>(i * static_cast<std::size_t>(m.classes)));
  }
  return logits;
}

void add_round(const GbdtModel& m, const std::vector<RegressionTree>& trees, const Samples& data,
               std::vector<double>& logits) {
  const auto k = static_cast<std::size_t>(m.classes);
  for (std::size_t i = 0; i < data.size(); ++i) {
    const auto x = data.row(i);
    for (std::size_t c = 0; c < k; ++c) logits[i * k + c] += m.learning_rate * trees[c].predict(x);
  }
}

}  // namespace

RegressionTree fit_tree(const BinnedMatrix& binned, std::span<const double> grad,
                        std::span<const double> hess, std::span<const std::uint32_t> rows,
                        const TreeParams& params) {
  TreeBuilder builder(binned, grad, hess, params);
  return builder.build(std::vector<std::uint32_t>(rows.begin(), rows.end()));
}

GbdtModel train_gbdt(const Samples& train, const TrainConfig& cfg, int classes, const Samples& val) {
  cfg.validate();
  if (classes < 2) throw ConfigError("gbdt: need at least 2 classes");
  if (train.size() == 0) throw DataError("gbdt: empty training set");
  if (val.size() == 0) throw DataError("gbdt: empty validation set");
  if (val.width() != train.width()) throw DataError("gbdt: train/val width mismatch");

  const auto k = static_cast<std::size_t>(classes);
  const auto counts = train.class_counts(classes);
  if (std::count_if(counts.begin(), counts.end(), [](std::size_t c) { return c > 0; }) < 2) {
    throw DataError("gbdt: training labels contain a single class");
  }
  const auto w = sample_weights(train.y, cfg.class_weights);

  GbdtModel m;
  m.classes = classes;
  m.features = static_cast<int>(train.width());
  m.learning_rate = cfg.learning_rate;
  {
    std::vector<double> mass(k, 0.0);
    double total = 0.0;
    for (std::size_t i = 0; i < train.size(); ++i) {
      mass[static_cast<std::size_t>(train.y[i])] += w[i];
      total += w[i];
    }
    for (double v : mass) m.base_score.push_back(std::log(std::max(v / total, 1e-12)));
  }

  const BinnedMatrix binned = build_bins(train, cfg.bins);
  const TreeParams params{cfg.max_depth, cfg.min_samples_leaf, cfg.lambda, cfg.min_child_weight};
  std::vector<std::uint32_t> all_rows(train.size());
  std::iota(all_rows.begin(), all_rows.end(), 0u);

  std::vector<double> train_logits = base_logits(m, train.size());
  std::vector<double> val_logits = base_logits(m, val.size());
  m.val_loss.push_back(weighted_log_loss(probs_from_logits(val_logits, classes), val.y, cfg.class_weights));
  double best = m.val_loss.back();
  int since_best = 0;

  std::vector<double> prob(k);
  std::vector<std::vector<double>> grad(k, std::vector<double>(train.size()));
  std::vector<std::vector<double>> hess(k, std::vector<double>(train.size()));
  for (int round = 1; round <= cfg.rounds; ++round) {
    for (std::size_t i = 0; i < train.size(); ++i) {
      std::copy_n(train_logits.begin() + static_cast<long>(i * k), k, prob.begin());
      softmax(prob);
      const auto yi = static_cast<std::size_t>(train.y[i]);
      for (std::size_t c = 0; c < k; ++c) {
        grad[c][i] = w[i] * (prob[c] - (c == yi ? 1.0 : 0.0));
        hess[c][i] = w[i] * std::max(prob[c] * (1.0 - prob[c]), 1e-16);
      }
    }
    std::vector<RegressionTree> trees;
    trees.reserve(k);
    for (std::size_t c = 0; c < k; ++c) trees.push_back(fit_tree(binned, grad[c], hess[c], all_rows, params));
    add_round(m, trees, train, train_logits);
    add_round(m, trees, val, val_logits);
    m.rounds.push_back(std::move(trees));

    const double loss = weighted_log_loss(probs_from_logits(val_logits, classes), val.y, cfg.class_weights);
    if (!std::isfinite(loss)) {
      throw TrainingDivergence("gbdt validation loss became non-finite at round " + std::to_string(round));
    }
    m.val_loss.push_back(loss);
    if (loss < best) {
      best = loss;
      m.best_round = round;
      since_best = 0;
    } else if (++since_best >= cfg.early_stopping_rounds) {
      break;
    }
  }
  return m;
}

Prediction predict_proba(const GbdtModel& m, const Samples& data, int rounds_used) {
  check_width(m, data);
  std::vector<double> logits = base_logits(m, data.size());
  const int used = std::clamp(rounds_used, 0, static_cast<int>(m.rounds.size()));
  for (int r = 0; r < used; ++r) add_round(m, m.rounds[static_cast<std::size_t>(r)], data, logits);
  return probs_from_logits(std::move(logits), m.classes);
}

Prediction predict_proba(const GbdtModel& m, const Samples& data) {
  return predict_proba(m, data, m.best_round);
}

}  // namespace lobbench
