#include "lobbench/features.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "lobbench/errors.hpp"

namespace lobbench {

namespace {

std::string level_name(const char* prefix, std::size_t level) {
  return prefix + std::to_string(level);
}

struct LevelColumns {
  std::vector<const std::vector<double>*> bp, bq, ap, aq;
};

LevelColumns level_columns(const FeatureMatrix& m, std::size_t depth) {
  LevelColumns lc;
  for (std::size_t i = 1; i <= depth; ++i) {
    lc.bp.push_back(&m.column(level_name("bp", i)));
    lc.bq.push_back(&m.column(level_name("bq", i)));
    lc.ap.push_back(&m.column(level_name("ap", i)));
    lc.aq.push_back(&m.column(level_name("aq", i)));
  }
  return lc;
}

double level_mid(const LevelColumns& lc, std::size_t level, std::size_t row) {
  return 0.5 * ((*lc.ap[level])[row] + (*lc.bp[level])[row]);
}

}  // namespace

const char* to_string(Feature f) {
  switch (f) {
    case Feature::Mid:
      return "mid";
    case Feature::Imb1:
      return "imb1";
    case Feature::Imb5:
      return "imb5";
    case Feature::WmidChange:
      return "wmid_change";
    case Feature::CumDepth:
      return "cum_depth";
  }
  return "?";
}

Feature feature_from_string(const std::string& s) {
  for (Feature f : {Feature::Mid, Feature::Imb1, Feature::Imb5, Feature::WmidChange,
                    Feature::CumDepth}) {
    if (s == to_string(f)) return f;
  }
  throw ConfigError("unknown engineered feature: " + s);
}

bool FeatureSpec::has(Feature f) const {
  return std::find(engineered.begin(), engineered.end(), f) != engineered.end();
}

void FeatureSpec::validate() const {
  if (depth == 0) throw ConfigError("features: depth must be >= 1");
  if (has(Feature::Imb5) && depth < 5) throw ConfigError("features: imb5 requires depth >= 5");
  if (has(Feature::WmidChange) && depth < 3) {
    throw ConfigError("features: wmid_change requires depth >= 3");
  }
  for (double w : weights) {
    if (!(w > 0.0)) throw ConfigError("features: weights must be positive");
  }
  const double sum = weights[0] + weights[1] + weights[2];
  if (std::abs(sum - 1.0) > 1e-12) throw ConfigError("features: weights must sum to 1");
  if (!include_raw_levels && engineered.empty()) {
    throw ConfigError("features: no columns selected");
  }
}

double mid_price(const BookFrame& f) { return 0.5 * (f.ask_price[0] + f.bid_price[0]); }

double imbalance(std::span<const double> bid_qty, std::span<const double> ask_qty,
                 std::size_t levels) {
  if (levels == 0 || levels > bid_qty.size() || levels > ask_qty.size()) {
    throw ConfigError("imbalance: level count out of range");
  }
  double b = 0.0;
  double a = 0.0;
  for (std::size_t i = 0; i < levels; ++i) {
    b += bid_qty[i];
    a += ask_qty[i];
  }
  const double total = b + a;
  if (!(total > 0.0)) return 0.0;
  // Filtered quantities may overshoot slightly below zero; keep the ratio in range.
  return std::clamp((b - a) / total, -1.0, 1.0);
}

double imbalance(const BookFrame& f, std::size_t levels) {
  return imbalance(f.bid_qty, f.ask_qty, levels);
}

double weighted_mid_change(const BookFrame& prev, const BookFrame& cur,
                           const std::array<double, 3>& w) {
  double acc = 0.0;
  for (std::size_t i = 0; i < 3; ++i) {
    const double m_cur = 0.5 * (cur.ask_price[i] + cur.bid_price[i]);
    const double m_prev = 0.5 * (prev.ask_price[i] + prev.bid_price[i]);
    acc += w[i] * (m_cur - m_prev);
  }
  return acc;
}

std::pair<std::vector<double>, std::vector<double>> cumulative_depth(const BookFrame& f) {
  std::pair<std::vector<double>, std::vector<double>> out;
  out.first.resize(f.depth());
  out.second.resize(f.depth());
  std::partial_sum(f.bid_qty.begin(), f.bid_qty.end(), out.first.begin());
  std::partial_sum(f.ask_qty.begin(), f.ask_qty.end(), out.second.begin());
  return out;
}

FeatureMatrix frames_to_matrix(const std::vector<BookFrame>& frames) {
  std::vector<std::int64_t> ts;
  ts.reserve(frames.size());
  for (const auto& f : frames) ts.push_back(f.ts);
  FeatureMatrix m(std::move(ts));
  if (frames.empty()) return m;
  const std::size_t k = frames.front().depth();
  for (const auto& f : frames) {
    if (f.depth() != k) throw DataError("frames_to_matrix: mixed depths");
  }
  for (std::size_t i = 0; i < k; ++i) {
    std::vector<double> bp(frames.size()), bq(frames.size()), ap(frames.size()),
        aq(frames.size());
    for (std::size_t r = 0; r < frames.size(); ++r) {
      bp[r] = frames[r].bid_price[i];
      bq[r] = frames[r].bid_qty[i];
      ap[r] = frames[r].ask_price[i];
      aq[r] = frames[r].ask_qty[i];
    }
    m.add_column(level_name("bp", i + 1), std::move(bp));
    m.add_column(level_name("bq", i + 1), std::move(bq));
    m.add_column(level_name("ap", i + 1), std::move(ap));
    m.add_column(level_name("aq", i + 1), std::move(aq));
  }
  return m;
}

std::size_t level_depth(const FeatureMatrix& m) {
  std::size_t k = 0;
  while (m.index_of(level_name("bp", k + 1)) && m.index_of(level_name("bq", k + 1)) &&
         m.index_of(level_name("ap", k + 1)) && m.index_of(level_name("aq", k + 1))) {
    ++k;
  }
  return k;
}

std::vector<double> mid_series(const FeatureMatrix& levels) {
  const auto& bp = levels.column("bp1");
  const auto& ap = levels.column("ap1");
  std::vector<double> mid(levels.rows());
  for (std::size_t r = 0; r < mid.size(); ++r) mid[r] = 0.5 * (ap[r] + bp[r]);
  return mid;
}

FeatureMatrix derive_features(const FeatureMatrix& levels, const FeatureSpec& spec) {
  spec.validate();
  const std::size_t available = level_depth(levels);
  if (available < spec.depth) {
    throw ConfigError("features: matrix has depth " + std::to_string(available) +
                      ", spec requires " + std::to_string(spec.depth));
  }
  const std::size_t n = levels.rows();
  const std::size_t k = spec.depth;
  const LevelColumns lc = level_columns(levels, k);

  FeatureMatrix out(levels.ts());
  if (spec.include_raw_levels) {
    for (std::size_t i = 0; i < k; ++i) {
      out.add_column(level_name("bp", i + 1), *lc.bp[i]);
      out.add_column(level_name("bq", i + 1), *lc.bq[i]);
      out.add_column(level_name("ap", i + 1), *lc.ap[i]);
      out.add_column(level_name("aq", i + 1), *lc.aq[i]);
    }
  }

  std::vector<double> bq_row(k), aq_row(k);
  auto row_imbalance = [&](std::size_t r, std::size_t levels_used) {
    for (std::size_t i = 0; i < levels_used; ++i) {
      bq_row[i] = (*lc.bq[i])[r];
      aq_row[i] = (*lc.aq[i])[r];
    }
    return imbalance(std::span<const double>(bq_row.data(), levels_used),
                     std::span<const double>(aq_row.data(), levels_used), levels_used);
  };

  for (Feature f : spec.engineered) {
    switch (f) {
      case Feature::Mid: {
        std::vector<double> v(n);
        for (std::size_t r = 0; r < n; ++r) v[r] = level_mid(lc, 0, r);
        out.add_column("mid", std::move(v));
        break;
      }
      case Feature::Imb1:
      case Feature::Imb5: {
        const std::size_t L = f == Feature::Imb1 ? 1 : 5;
        std::vector<double> v(n);
        for (std::size_t r = 0; r < n; ++r) v[r] = row_imbalance(r, L);
        out.add_column(to_string(f), std::move(v));
        break;
      }
      case Feature::WmidChange: {
        std::vector<double> v(n, 0.0);
        for (std::size_t r = 1; r < n; ++r) {
          double acc = 0.0;
          for (std::size_t i = 0; i < 3; ++i) {
            acc += spec.weights[i] * (level_mid(lc, i, r) - level_mid(lc, i, r - 1));
          }
          v[r] = acc;
        }
        out.add_column("wmid_change", std::move(v));
        break;
      }
      case Feature::CumDepth: {
        for (const char* side : {"b", "a"}) {
          const auto& qty = side[0] == 'b' ? lc.bq : lc.aq;
          std::vector<double> running(n, 0.0);
          for (std::size_t i = 0; i < k; ++i) {
            for (std::size_t r = 0; r < n; ++r) running[r] += (*qty[i])[r];
            out.add_column(std::string("cum_") + side + "q" + std::to_string(i + 1), running);
          }
        }
        break;
      }
    }
  }
  return out;
}

FeatureMatrix build_feature_matrix(const std::vector<BookFrame>& frames,
                                   const FeatureSpec& spec) {
  spec.validate();
  for (const auto& f : frames) {
    if (f.depth() < spec.depth) {
      throw ConfigError("features: frame depth " + std::to_string(f.depth()) +
                        " below spec depth " + std::to_string(spec.depth));
    }
  }
  return derive_features(frames_to_matrix(frames), spec);
}

Normalizer fit_normalizer(const FeatureMatrix& m, RowRange train) {
  if (train.empty()) throw ConfigError("normalizer: empty training range");
  if (train.end > m.rows()) throw ConfigError("normalizer: training range out of bounds");
  Normalizer norm;
  norm.fitted = train;
  norm.columns = m.names();
  const double count = static_cast<double>(train.size());
  for (std::size_t c = 0; c < m.cols(); ++c) {
    const auto& col = m.column(c);
    double sum = 0.0;
    for (std::size_t r = train.begin; r < train.end; ++r) sum += col[r];
    const double mean = sum / count;
    double ss = 0.0;
    for (std::size_t r = train.begin; r < train.end; ++r) ss += (col[r] - mean) * (col[r] - mean);
    const double sd = std::sqrt(ss / count);
    const bool constant = !(sd > 1e-12 * std::max(1.0, std::abs(mean)));
    norm.mean.push_back(mean);
    norm.stddev.push_back(sd);
    norm.constant.push_back(constant);
  }
  return norm;
}

FeatureMatrix apply_normalizer(const FeatureMatrix& m, const Normalizer& norm) {
  if (m.normalized()) throw ConfigError("normalizer: matrix is already normalized");
  if (m.names() != norm.columns) throw ConfigError("normalizer: column mismatch");
  FeatureMatrix out(m.ts());
  for (std::size_t c = 0; c < m.cols(); ++c) {
    std::vector<double> v = m.column(c);
    if (!norm.constant[c]) {
      for (double& x : v) x = (x - norm.mean[c]) / norm.stddev[c];
    }
    out.add_column(m.names()[c], std::move(v));
  }
  out.mark_normalized();
  return out;
}

}  // namespace lobbench
