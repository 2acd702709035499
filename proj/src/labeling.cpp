#include "lobbench/labeling.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "lobbench/errors.hpp"

namespace lobbench {

Horizon Horizon::from_ms(std::int64_t ms, std::int64_t grid_ms) {
  if (grid_ms <= 0) grid_ms = 100;
  if (ms <= 0 || ms % grid_ms != 0) {
    throw ConfigError("label.horizon_ms must be a positive multiple of " +
                      std::to_string(grid_ms));
  }
  return Horizon{static_cast<int>(ms / grid_ms)};
}

const char* to_string(LabelKind k) { return k == LabelKind::Binary ? "binary" : "ternary"; }
const char* to_string(LabelSource s) { return s == LabelSource::Raw ? "raw" : "filtered"; }
const char* to_string(TieRule t) {
  switch (t) {
    case TieRule::Up:
      return "up";
    case TieRule::Down:
      return "down";
    case TieRule::Drop:
      return "drop";
  }
  return "?";
}

LabelKind label_kind_from_string(const std::string& s) {
  if (s == "binary") return LabelKind::Binary;
  if (s == "ternary") return LabelKind::Ternary;
  throw ConfigError("label.kind must be binary or ternary, got " + s);
}

LabelSource label_source_from_string(const std::string& s) {
  if (s == "raw") return LabelSource::Raw;
  if (s == "filtered") return LabelSource::Filtered;
  throw ConfigError("label.source must be raw or filtered, got " + s);
}

TieRule tie_rule_from_string(const std::string& s) {
  if (s == "up") return TieRule::Up;
  if (s == "down") return TieRule::Down;
  if (s == "drop") return TieRule::Drop;
  throw ConfigError("label.tie_rule must be up, down or drop, got " + s);
}

void LabelScheme::validate() const {
  if (!(epsilon >= 0.0) || !std::isfinite(epsilon)) {
    throw ConfigError("label.epsilon must be a finite non-negative number");
  }
  if (kind == LabelKind::Binary && epsilon != 0.0) {
    throw ConfigError("binary labels take no epsilon");
  }
}

std::size_t LabelSet::valid_count() const {
  return static_cast<std::size_t>(std::count(valid.begin(), valid.end(), true));
}

GridIndex::GridIndex(std::span<const std::int64_t> ts, std::int64_t grid_ms) {
  breaks_before_.assign(ts.size() + 1, 0);
  for (std::size_t i = 1; i < ts.size(); ++i) {
    const bool broken = grid_ms > 0 && ts[i] - ts[i - 1] != grid_ms;
    breaks_before_[i] = breaks_before_[i - 1] + (broken ? 1 : 0);
  }
  if (!ts.empty()) breaks_before_[ts.size()] = breaks_before_[ts.size() - 1];
}

bool GridIndex::contiguous(std::size_t first, std::size_t last) const {
  if (last <= first) return true;
  return breaks_before_[last] == breaks_before_[first];
}

std::optional<double> horizon_return(std::span<const double> mids, std::size_t t, Horizon h,
                                     const GridIndex& grid) {
  if (h.steps < 1) throw ConfigError("horizon must be >= 1 step");
  const std::size_t end = t + static_cast<std::size_t>(h.steps);
  if (end >= mids.size()) return std::nullopt;
  if (!grid.contiguous(t, end)) return std::nullopt;
  return (mids[end] - mids[t]) / mids[t];
}

std::vector<double> horizon_returns(std::span<const double> mids,
                                    std::span<const std::int64_t> ts, Horizon h,
                                    std::int64_t grid_ms) {
  if (mids.size() != ts.size()) throw DataError("mid and timestamp series differ in length");
  const GridIndex grid(ts, grid_ms);
  std::vector<double> out(mids.size(), std::numeric_limits<double>::quiet_NaN());
  for (std::size_t t = 0; t < mids.size(); ++t) {
    if (auto r = horizon_return(mids, t, h, grid)) out[t] = *r;
  }
  return out;
}

std::optional<int> label_binary(double r, TieRule tie) {
  if (r > 0.0) return label::kUpBinary;
  if (r < 0.0) return label::kDown;
  switch (tie) {
    case TieRule::Up:
      return label::kUpBinary;
    case TieRule::Down:
      return label::kDown;
    case TieRule::Drop:
      return std::nullopt;
  }
  return std::nullopt;
}

int label_ternary(double r, double epsilon) {
  if (r > epsilon) return label::kUpTernary;
  if (r < -epsilon) return label::kDown;
  return label::kFlat;
}

EpsilonFit tune_epsilon(std::span<const double> returns, double target_flat_share) {
  if (!(target_flat_share > 0.0 && target_flat_share < 1.0)) {
    throw ConfigError("target flat share must lie in (0, 1)");
  }
  std::vector<double> mags;
  mags.reserve(returns.size());
  double lo_r = std::numeric_limits<double>::infinity();
  double hi_r = -lo_r;
  for (double r : returns) {
    if (!std::isfinite(r)) continue;
    mags.push_back(std::abs(r));
    lo_r = std::min(lo_r, r);
    hi_r = std::max(hi_r, r);
  }
  if (mags.size() < 3) throw ConfigError("tune_epsilon needs at least 3 finite returns");
  if (lo_r == hi_r) return {0.0, true};

  std::sort(mags.begin(), mags.end());
  const double h = static_cast<double>(mags.size() - 1) * target_flat_share;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const std::size_t hi = std::min(lo + 1, mags.size() - 1);
  const double frac = h - static_cast<double>(lo);
  return {mags[lo] + frac * (mags[hi] - mags[lo]), false};
}

LabelSet make_labels(std::span<const double> returns, const LabelScheme& scheme, Horizon h) {
  scheme.validate();
  LabelSet ls;
  ls.scheme = scheme;
  ls.horizon = h;
  const std::size_t n = returns.size();
  ls.labels.assign(n, label::kInvalid);
  ls.valid.assign(n, false);
  ls.returns.assign(returns.begin(), returns.end());
  ls.class_counts.assign(static_cast<std::size_t>(scheme.num_classes()), 0);
  for (std::size_t t = 0; t < n; ++t) {
    const double r = returns[t];
    if (!std::isfinite(r)) continue;
    std::optional<int> lab;
    if (scheme.kind == LabelKind::Binary) {
      lab = label_binary(r, scheme.tie_rule);
    } else {
      lab = label_ternary(r, scheme.epsilon);
    }
    if (!lab) continue;
    ls.labels[t] = *lab;
    ls.valid[t] = true;
    ++ls.class_counts[static_cast<std::size_t>(*lab)];
  }
  return ls;
}

LabelSet make_labels(std::span<const double> mids, std::span<const std::int64_t> ts,
                     const LabelScheme& scheme, Horizon h, std::int64_t grid_ms) {
  const auto r = horizon_returns(mids, ts, h, grid_ms);
  return make_labels(r, scheme, h);
}

ClassWeights class_weights(std::span<const std::size_t> counts) {
  if (counts.empty()) throw ConfigError("class_weights: no classes");
  std::size_t total = 0;
  for (std::size_t c = 0; c < counts.size(); ++c) {
    if (counts[c] == 0) {
      throw ConfigError("class_weights: class " + std::to_string(c) + " has no samples");
    }
    total += counts[c];
  }
  ClassWeights w;
  const double k = static_cast<double>(counts.size());
  for (std::size_t c : counts) {
    w.weights.push_back(static_cast<double>(total) / (k * static_cast<double>(c)));
  }
  return w;
}

ClassWeights class_weights(const LabelSet& labels) { return class_weights(labels.class_counts); }

}  // namespace lobbench
