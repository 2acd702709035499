#include "lobbench/filters.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "lobbench/errors.hpp"

namespace lobbench {

void SgConfig::validate() const {
  if (half_window < 1) throw ConfigError("filter.sg.half_window must be >= 1");
  if (degree < 0) throw ConfigError("filter.sg.degree must be >= 0");
  if (2 * half_window + 1 <= degree) {
    throw ConfigError("filter.sg: window 2m+1 must exceed the degree");
  }
}

void KalmanConfig::validate() const {
  if (!(q > 0.0) || !std::isfinite(q)) throw ConfigError("filter.kalman.q must be > 0");
  if (!(r >= 0.0) || !std::isfinite(r)) throw ConfigError("filter.kalman.r must be >= 0");
  if (p0 && !(*p0 >= 0.0)) throw ConfigError("filter.kalman.p0 must be >= 0");
}

std::string FilterKind::name() const {
  switch (spec.index()) {
    case 0:
      return "raw";
    case 1:
      return "sg";
    default:
      return "kalman";
  }
}

std::vector<double> lsq_point_weights(std::span<const int> offsets, int degree) {
  const std::size_t n = offsets.size();
  if (n == 0) throw std::invalid_argument("lsq_point_weights: no samples");
  const auto target = std::find(offsets.begin(), offsets.end(), 0);
  if (target == offsets.end()) {
    throw std::invalid_argument("lsq_point_weights: offset 0 not sampled");
  }
  const std::size_t p = static_cast<std::size_t>(std::min<long>(degree, static_cast<long>(n) - 1)) + 1;

  // Centre and scale the abscissae so the monomial basis stays well
  // conditioned; the fitted values do not depend on this affine change.
  const auto [lo, hi] = std::minmax_element(offsets.begin(), offsets.end());
  const double centre = 0.5 * (static_cast<double>(*lo) + static_cast<double>(*hi));
  const double scale = std::max(1.0, 0.5 * static_cast<double>(*hi - *lo));

  // Orthonormal basis of the design column space (Gram-Schmidt, applied
  // twice per column). The estimate at sample i0 is row i0 of the hat
  // matrix Q Q^T applied to the data.
  std::vector<std::vector<double>> q(p, std::vector<double>(n));
  for (std::size_t l = 0; l < p; ++l) {
    auto& col = q[l];
    for (std::size_t j = 0; j < n; ++j) {
      col[j] = std::pow((offsets[j] - centre) / scale, static_cast<double>(l));
    }
    for (int pass = 0; pass < 2; ++pass) {
      for (std::size_t k = 0; k < l; ++k) {
        const double dot = std::inner_product(col.begin(), col.end(), q[k].begin(), 0.0);
        for (std::size_t j = 0; j < n; ++j) col[j] -= dot * q[k][j];
      }
    }
    const double norm = std::sqrt(std::inner_product(col.begin(), col.end(), col.begin(), 0.0));
    if (!(norm > 0.0)) throw std::runtime_error("lsq_point_weights: singular design");
    for (double& v : col) v /= norm;
  }

  const std::size_t i0 = static_cast<std::size_t>(target - offsets.begin());
  std::vector<double> w(n, 0.0);
  for (std::size_t l = 0; l < p; ++l) {
    const double a = q[l][i0];
    for (std::size_t j = 0; j < n; ++j) w[j] += a * q[l][j];
  }
  return w;
}

std::vector<double> sg_weights(const SgConfig& cfg) {
  cfg.validate();
  const int m = cfg.half_window;
  std::vector<int> offsets;
  if (cfg.mode == SgMode::Centered) {
    for (int j = -m; j <= m; ++j) offsets.push_back(j);
  } else {
    for (int j = -2 * m; j <= 0; ++j) offsets.push_back(j);
  }
  return lsq_point_weights(offsets, cfg.degree);
}

namespace {

void require_finite(std::span<const double> series, const char* who) {
  for (std::size_t i = 0; i < series.size(); ++i) {
    if (!std::isfinite(series[i])) {
      throw DataError(std::string(who) + ": non-finite value at index " + std::to_string(i));
    }
  }
}

// Direct fit over rows [lo, hi] evaluated at row t.
double window_fit(std::span<const double> series, std::size_t lo, std::size_t hi,
                  std::size_t t, int degree) {
  std::vector<int> offsets;
  offsets.reserve(hi - lo + 1);
  for (std::size_t j = lo; j <= hi; ++j) {
    offsets.push_back(static_cast<int>(j) - static_cast<int>(t));
  }
  const auto w = lsq_point_weights(offsets, degree);
  double acc = 0.0;
  for (std::size_t j = 0; j < w.size(); ++j) acc += w[j] * series[lo + j];
  return acc;
}

double population_variance(std::span<const double> v) {
  if (v.empty()) return 0.0;
  const double mean = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
  double ss = 0.0;
  for (double x : v) ss += (x - mean) * (x - mean);
  return ss / static_cast<double>(v.size());
}

}  // namespace

std::vector<double> sg_smooth(std::span<const double> series, const SgConfig& cfg) {
  cfg.validate();
  require_finite(series, "sg_smooth");
  const std::size_t n = series.size();
  if (n == 0) throw DataError("sg_smooth: empty series");
  const std::size_t m = static_cast<std::size_t>(cfg.half_window);
  const std::size_t width = 2 * m + 1;
  std::vector<double> out(n);
  const auto w = sg_weights(cfg);

  if (cfg.mode == SgMode::Centered) {
    for (std::size_t t = 0; t < n; ++t) {
      if (t >= m && t + m < n) {
        double acc = 0.0;
        for (std::size_t j = 0; j < width; ++j) acc += w[j] * series[t - m + j];
        out[t] = acc;
      } else {
        const std::size_t lo = t >= m ? t - m : 0;
        const std::size_t hi = std::min(n - 1, t + m);
        out[t] = window_fit(series, lo, hi, t, cfg.degree);
      }
    }
    return out;
  }

  if (n < width) {
    // No full causal window exists: expanding causal fits.
    for (std::size_t t = 0; t < n; ++t) out[t] = window_fit(series, 0, t, t, cfg.degree);
    return out;
  }
  for (std::size_t t = width - 1; t < n; ++t) {
    double acc = 0.0;
    for (std::size_t j = 0; j < width; ++j) acc += w[j] * series[t + 1 - width + j];
    out[t] = acc;
  }
  std::fill(out.begin(), out.begin() + static_cast<long>(width - 1), out[width - 1]);
  return out;
}

KalmanTrace kalman_run(std::span<const double> series, const KalmanConfig& cfg) {
  cfg.validate();
  require_finite(series, "kalman_smooth");
  const std::size_t n = series.size();
  if (n == 0) throw DataError("kalman_smooth: empty series");
  KalmanTrace tr;
  tr.estimate.resize(n);
  tr.gain.assign(n, 0.0);
  tr.variance.resize(n);
  double x = cfg.x0.value_or(series[0]);
  double p = cfg.p0.value_or(cfg.r > 0.0 ? cfg.r : 1.0);
  tr.estimate[0] = x;
  tr.variance[0] = p;
  for (std::size_t t = 1; t < n; ++t) {
    const double prior = p + cfg.q;
    const double k = prior / (prior + cfg.r);
    x = k == 1.0 ? series[t] : x + k * (series[t] - x);
    p = (1.0 - k) * prior;
    tr.estimate[t] = x;
    tr.gain[t] = k;
    tr.variance[t] = p;
  }
  return tr;
}

std::vector<double> kalman_smooth(std::span<const double> series, const KalmanConfig& cfg) {
  return kalman_run(series, cfg).estimate;
}

double kalman_steady_state_gain(double q, double r) {
  if (r == 0.0) return 1.0;
  // P = (1-K)(P+Q) with K = (P+Q)/(P+Q+R)  =>  P^2 + QP - QR = 0.
  const double p = 0.5 * (-q + std::sqrt(q * q + 4.0 * q * r));
  return (p + q) / (p + q + r);
}

double kalman_one_step_mse(std::span<const double> series, const KalmanConfig& cfg) {
  const auto est = kalman_smooth(series, cfg);
  if (series.size() < 2) return 0.0;
  double ss = 0.0;
  for (std::size_t t = 1; t < series.size(); ++t) {
    const double e = series[t] - est[t - 1];
    ss += e * e;
  }
  return ss / static_cast<double>(series.size() - 1);
}

KalmanGridResult kalman_grid_search(std::span<const double> series,
                                    std::span<const double> q_grid,
                                    std::span<const double> r_grid) {
  if (q_grid.empty() || r_grid.empty()) throw ConfigError("kalman grid is empty");
  KalmanGridResult best;
  bool have = false;
  for (double q : q_grid) {
    for (double r : r_grid) {
      KalmanConfig cfg;
      cfg.q = q;
      cfg.r = r;
      const double mse = kalman_one_step_mse(series, cfg);
      if (!have || mse < best.mse) {
        best = {q, r, mse};
        have = true;
      }
    }
  }
  return best;
}

std::vector<double> default_kalman_grid() {
  return {1e-6, 1e-5, 1e-4, 1e-3, 1e-2, 1e-1, 1.0};
}

FilterOutput apply_filter_detailed(const FeatureMatrix& matrix, const FilterKind& kind,
                                   std::optional<RowRange> calibration) {
  FilterOutput out;
  if (std::holds_alternative<RawFilter>(kind.spec)) {
    out.matrix = matrix;
    return out;
  }
  const RowRange calib = calibration.value_or(RowRange{0, matrix.rows()});
  if (calib.empty() || calib.end > matrix.rows()) {
    throw ConfigError("filter calibration range is empty or out of bounds");
  }

  FeatureMatrix result(matrix.ts());
  for (std::size_t c = 0; c < matrix.cols(); ++c) {
    const auto& col = matrix.column(c);
    std::vector<double> filtered;
    if (const auto* sg = std::get_if<SgConfig>(&kind.spec)) {
      filtered = sg_smooth(col, *sg);
    } else {
      const auto& spec = std::get<KalmanFilterSpec>(kind.spec);
      const std::span<const double> slice(col.data() + calib.begin, calib.size());
      const double var = spec.scale_by_variance ? population_variance(slice) : 1.0;
      if (spec.scale_by_variance && !(var > 0.0)) {
        // Constant over the calibration rows: nothing to estimate.
        filtered = col;
        out.kalman_params.push_back({matrix.names()[c], 0.0, 0.0});
      } else {
        KalmanConfig cfg = spec.base;
        if (spec.grid_search) {
          auto grid = default_kalman_grid();
          for (double& g : grid) g *= var;
          const auto best = kalman_grid_search(slice, grid, grid);
          cfg.q = best.q;
          cfg.r = best.r;
        } else {
          cfg.q *= var;
          cfg.r *= var;
        }
        filtered = kalman_smooth(col, cfg);
        out.kalman_params.push_back({matrix.names()[c], cfg.q, cfg.r});
      }
    }
    result.add_column(matrix.names()[c], std::move(filtered));
  }
  out.matrix = std::move(result);
  return out;
}

FeatureMatrix apply_filter(const FeatureMatrix& matrix, const FilterKind& kind,
                           std::optional<RowRange> calibration) {
  return apply_filter_detailed(matrix, kind, calibration).matrix;
}

}  // namespace lobbench
