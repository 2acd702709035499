#pragma once

#include <cstdint>
#include <iosfwd>
#include <vector>

#include "lobbench/ingest.hpp"

namespace lobbench {

/// Synthetic book with a planted signal. A hidden regime s_t = +-1 flips
/// with probability `switch_prob` per step and drives the mid drift. The
/// clean level-1 imbalance has the sign of s_t, and the drift is calibrated
/// so that sign(m_{t+H} - m_t) == s_t with probability `signal_strength`.
/// `noise_sigma` jitters the published level-1 quantities around the clean
/// imbalance.
struct SynthConfig {
  std::uint64_t seed = 1;
  std::size_t n = 20000;
  std::size_t depth = 10;
  double tick_size = 0.1;
  double base_price = 50000.0;
  double signal_strength = 0.8;
  double noise_sigma = 0.0;
  double flicker_rate = 0.0;
  double gap_rate = 0.0;
  double missing_level_rate = 0.0;
  int horizon_steps = 10;
  double switch_prob = 0.02;
  double volatility_ticks = 1.0;     // per-step diffusion, in ticks
  double imbalance_amplitude = 0.3;  // clean imbalance is +-amplitude
  std::int64_t start_ts = 1738195200000;
  std::int64_t grid_ms = 100;

  void validate() const;
};

struct SynthResult {
  std::vector<RawSnapshot> snapshots;  // emitted records only
  std::vector<int> regime;             // per grid step
  std::vector<double> mid;             // latent mid per grid step
  std::vector<double> clean_imbalance;
  std::vector<bool> emitted;
  double drift = 0.0;                  // per-step drift in price units
};

SynthResult generate(const SynthConfig& cfg);

/// Writes the emitted snapshots as canonical NDJSON.
void write_ndjson(const SynthConfig& cfg, std::ostream& out);

/// P(sign(H-step move) == s_t) for the given drift, by exact enumeration of
/// the regime path sums.
double planted_sign_match(double drift, int horizon_steps, double switch_prob, double sigma);

/// Drift that makes planted_sign_match equal `beta`. Throws ConfigError when
/// beta is out of reach for the regime persistence.
double calibrate_drift(double beta, int horizon_steps, double switch_prob, double sigma);

/// Bayes accuracy of the planted signal for the sign rule.
double oracle_accuracy(const SynthConfig& cfg);

/// beta + z * sqrt(beta (1 - beta) / n).
double binomial_upper_bound(double beta, std::size_t n, double z = 3.0);

}  // namespace lobbench
