#pragma once

#include <algorithm>
#include <cstddef>
#include <set>
#include <vector>

namespace oracle {

struct Node {
  int feature = -1;
  double threshold = 0.0;
  double value = 0.0;
  int left = -1;
  int right = -1;
};

struct BruteForceParams {
  int max_depth = 2;
  std::size_t min_samples_leaf = 1;
  double lambda = 1.0;
  double min_child_weight = 0.0;
};

// Exhaustive second-order tree: every feature, every distinct observed
// value as a "x <= v" threshold, summing gradients directly per candidate.
class BruteForceTree {
 public:
  BruteForceTree(const std::vector<std::vector<double>>& x, const std::vector<double>& g,
                 const std::vector<double>& h, BruteForceParams params)
      : x_(x), g_(g), h_(h), params_(params) {}

  std::vector<Node> fit() {
    std::vector<std::size_t> rows(g_.size());
    for (std::size_t i = 0; i < rows.size(); ++i) rows[i] = i;
    nodes_.clear();
    grow(rows, 0);
    return nodes_;
  }

  static double predict(const std::vector<Node>& nodes, const std::vector<double>& row) {
    int i = 0;
    while (nodes[static_cast<std::size_t>(i)].feature >= 0) {
      const auto& n = nodes[static_cast<std::size_t>(i)];
      i = row[static_cast<std::size_t>(n.feature)] <= n.threshold ? n.left : n.right;
    }
    return nodes[static_cast<std::size_t>(i)].value;
  }

 private:
  double score(double g, double h) const { return g * g / (h + params_.lambda); }

  int grow(const std::vector<std::size_t>& rows, int depth) {
    const int id = static_cast<int>(nodes_.size());
    nodes_.emplace_back();
    double g = 0.0, h = 0.0;
    for (auto r : rows) {
      g += g_[r];
      h += h_[r];
    }
    nodes_[static_cast<std::size_t>(id)].value = -g / (h + params_.lambda);
    if (depth >= params_.max_depth) return id;

    double best = 0.0;
    int best_f = -1;
    double best_t = 0.0;
    const std::size_t d = x_.empty() ? 0 : x_[0].size();
    for (std::size_t f = 0; f < d; ++f) {
      std::set<double> values;
      for (auto r : rows) values.insert(x_[r][f]);
      for (double t : values) {
        double gl = 0.0, hl = 0.0;
        std::size_t nl = 0;
        for (auto r : rows) {
          if (x_[r][f] <= t) {
            gl += g_[r];
            hl += h_[r];
            ++nl;
          }
        }
        const std::size_t nr = rows.size() - nl;
        if (nr == 0) continue;
        if (nl < params_.min_samples_leaf || nr < params_.min_samples_leaf) continue;
        if (hl < params_.min_child_weight || h - hl < params_.min_child_weight) continue;
        const double gain = score(gl, hl) + score(g - gl, h - hl) - score(g, h);
        if (gain > best) {
          best = gain;
          best_f = static_cast<int>(f);
          best_t = t;
        }
      }
    }
    if (best_f < 0 || !(best > 1e-12)) return id;
    std::vector<std::size_t> left, right;
    for (auto r : rows) (x_[r][static_cast<std::size_t>(best_f)] <= best_t ? left : right).push_back(r);
    const int l = grow(left, depth + 1);
    const int rr = grow(right, depth + 1);
    auto& n = nodes_[static_cast<std::size_t>(id)];
    n.feature = best_f;
    n.threshold = best_t;
    n.left = l;
    n.right = rr;
    return id;
  }

  const std::vector<std::vector<double>>& x_;
  const std::vector<double>& g_;
  const std::vector<double>& h_;
  BruteForceParams params_;
  std::vector<Node> nodes_;
};

}  // namespace oracle
