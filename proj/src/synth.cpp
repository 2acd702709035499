#include "lobbench/synth.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <random>

#include "lobbench/errors.hpp"

namespace lobbench {

namespace {

// std distributions are implementation-defined; these keep the stream
// identical across standard libraries.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : eng_(seed) {}

  double uniform() { return static_cast<double>(eng_() >> 11) * 0x1.0p-53; }
  bool bernoulli(double p) { return uniform() < p; }
  std::size_t index(std::size_t n) { return static_cast<std::size_t>(uniform() * static_cast<double>(n)); }
  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u1 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    const double u2 = uniform();
    const double rad = std::sqrt(-2.0 * std::log(u1));
    spare_ = rad * std::sin(2.0 * M_PI * u2);
    has_spare_ = true;
    return rad * std::cos(2.0 * M_PI * u2);
  }

 private:
  std::mt19937_64 eng_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

void check_prob(double p, const char* name) {
  if (!(p >= 0.0 && p <= 1.0)) throw ConfigError(std::string("synth: ") + name + " must be in [0, 1]");
}

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

// Distribution of S = s_0 + ... + s_{H-1} given s_0 = +1; index S + H.
std::vector<double> regime_sum_distribution(int h, double p) {
  const std::size_t width = static_cast<std::size_t>(2 * h + 1);
  std::vector<double> up(width, 0.0), down(width, 0.0);
  up[static_cast<std::size_t>(h + 1)] = 1.0;
  for (int step = 1; step < h; ++step) {
    std::vector<double> nu(width, 0.0), nd(width, 0.0);
    for (std::size_t i = 0; i < width; ++i) {
      if (up[i] != 0.0) {
        nu[i + 1] += up[i] * (1.0 - p);
        nd[i - 1] += up[i] * p;
      }
      if (down[i] != 0.0) {
        nd[i - 1] += down[i] * (1.0 - p);
        nu[i + 1] += down[i] * p;
      }
    }
    up.swap(nu);
    down.swap(nd);
  }
  for (std::size_t i = 0; i < width; ++i) up[i] += down[i];
  return up;
}

}  // namespace

void SynthConfig::validate() const {
  if (n == 0) throw ConfigError("synth: n must be positive");
  if (depth == 0) throw ConfigError("synth: depth must be positive");
  if (!(tick_size > 0.0)) throw ConfigError("synth: tick_size must be positive");
  if (!(base_price > 0.0)) throw ConfigError("synth: base_price must be positive");
  check_prob(signal_strength, "signal_strength");
  check_prob(flicker_rate, "flicker_rate");
  check_prob(gap_rate, "gap_rate");
  check_prob(missing_level_rate, "missing_level_rate");
  check_prob(switch_prob, "switch_prob");
  if (signal_strength < 0.5) throw ConfigError("synth: signal_strength below 0.5 is not supported");
  if (!(noise_sigma >= 0.0)) throw ConfigError("synth: noise_sigma must be >= 0");
  if (horizon_steps < 1) throw ConfigError("synth: horizon_steps must be >= 1");
  if (!(volatility_ticks > 0.0)) throw ConfigError("synth: volatility_ticks must be positive");
  if (!(imbalance_amplitude > 0.0 && imbalance_amplitude < 1.0)) {
    throw ConfigError("synth: imbalance_amplitude must be in (0, 1)");
  }
  if (grid_ms <= 0) throw ConfigError("synth: grid_ms must be positive");
}

double planted_sign_match(double drift, int horizon_steps, double switch_prob, double sigma) {
  const auto dist = regime_sum_distribution(horizon_steps, switch_prob);
  const double scale = sigma * std::sqrt(static_cast<double>(horizon_steps));
  double p = 0.0;
  for (std::size_t i = 0; i < dist.size(); ++i) {
    const double s = static_cast<double>(i) - horizon_steps;
    p += dist[i] * normal_cdf(drift * s / scale);
  }
  return p;
}

double calibrate_drift(double beta, int horizon_steps, double switch_prob, double sigma) {
  if (beta <= 0.5) return 0.0;
  const auto dist = regime_sum_distribution(horizon_steps, switch_prob);
  double reach = 0.0;
  for (std::size_t i = 0; i < dist.size(); ++i) {
    const int s = static_cast<int>(i) - horizon_steps;
    reach += s > 0 ? dist[i] : (s == 0 ? 0.5 * dist[i] : 0.0);
  }
  if (beta >= reach - 1e-9) {
    throw ConfigError("synth: signal_strength " + std::to_string(beta) +
                      " unreachable with this switch_prob (max " + std::to_string(reach) + ")");
  }
  double lo = 0.0, hi = sigma;
  while (planted_sign_match(hi, horizon_steps, switch_prob, sigma) < beta) hi *= 2.0;
  for (int it = 0; it < 200 && hi - lo > 1e-15 * hi; ++it) {
    const double mid = 0.5 * (lo + hi);
    (planted_sign_match(mid, horizon_steps, switch_prob, sigma) < beta ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

double oracle_accuracy(const SynthConfig& cfg) {
  cfg.validate();
  return cfg.signal_strength;
}

double binomial_upper_bound(double beta, std::size_t n, double z) {
  if (n == 0) return 1.0;
  return beta + z * std::sqrt(beta * (1.0 - beta) / static_cast<double>(n));
}

SynthResult generate(const SynthConfig& cfg) {
  cfg.validate();
  const double sigma = cfg.volatility_ticks * cfg.tick_size;
  SynthResult out;
  out.drift = calibrate_drift(cfg.signal_strength, cfg.horizon_steps, cfg.switch_prob, sigma);
  out.regime.resize(cfg.n);
  out.mid.resize(cfg.n);
  out.clean_imbalance.resize(cfg.n);
  out.emitted.assign(cfg.n, false);
  out.snapshots.reserve(cfg.n);

  Rng rng(cfg.seed);
  const double lower = cfg.base_price * 0.5;
  const double upper = cfg.base_price * 1.5;
  int s = rng.bernoulli(0.5) ? 1 : -1;
  double mid = cfg.base_price;
  const std::size_t k = cfg.depth;

  for (std::size_t t = 0; t < cfg.n; ++t) {
    out.regime[t] = s;
    out.mid[t] = mid;
    const double clean = cfg.imbalance_amplitude * s;
    out.clean_imbalance[t] = clean;

    const double noisy = std::clamp(clean + cfg.noise_sigma * rng.normal(), -0.98, 0.98);
    const double l1_total = 2.0 + 8.0 * rng.uniform();
    const double half_spread = (rng.bernoulli(0.5) ? 0.5 : 1.0) * cfg.tick_size;

    RawSnapshot snap;
    snap.ts = cfg.start_ts + static_cast<std::int64_t>(t) * cfg.grid_ms;
    snap.bids.resize(k);
    snap.asks.resize(k);
    for (std::size_t lvl = 0; lvl < k; ++lvl) {
      const double off = half_spread + static_cast<double>(lvl) * cfg.tick_size;
      double bq, aq;
      if (lvl == 0) {
        bq = l1_total * (1.0 + noisy) / 2.0;
        aq = l1_total * (1.0 - noisy) / 2.0;
      } else {
        bq = 1.0 + 9.0 * rng.uniform();
        aq = 1.0 + 9.0 * rng.uniform();
      }
      snap.bids[lvl] = {mid - off, bq};
      snap.asks[lvl] = {mid + off, aq};
    }

    const bool flicker = rng.bernoulli(cfg.flicker_rate);
    const std::size_t flicker_level = rng.index(k);
    const bool flicker_bid = rng.bernoulli(0.5);
    const bool missing = rng.bernoulli(cfg.missing_level_rate);
    const std::size_t missing_level = rng.index(k);
    const bool missing_bid = rng.bernoulli(0.5);
    const bool skip = rng.bernoulli(cfg.gap_rate);

    if (flicker) {
      auto& side = flicker_bid ? snap.bids : snap.asks;
      side.erase(side.begin() + static_cast<std::ptrdiff_t>(flicker_level));
    }
    if (missing) {
      auto& side = missing_bid ? snap.bids : snap.asks;
      if (missing_level < side.size()) side[missing_level] = {NAN, NAN};
    }
    if (!skip) {
      out.snapshots.push_back(std::move(snap));
      out.emitted[t] = true;
    }

    double next = mid + out.drift * s + sigma * rng.normal();
    if (next > upper) next = 2.0 * upper - next;
    if (next < lower) next = 2.0 * lower - next;
    mid = next;
    if (rng.bernoulli(cfg.switch_prob)) s = -s;
  }
  return out;
}

void write_ndjson(const SynthConfig& cfg, std::ostream& out) {
  for (const auto& snap : generate(cfg).snapshots) out << serialize_snapshot(snap) << '\n';
}

}  // namespace lobbench
