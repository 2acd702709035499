#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace lobbench {

/// Prediction horizon in grid ticks (1 tick = 100 ms by default).
struct Horizon {
  int steps = 1;

  static Horizon from_ms(std::int64_t ms, std::int64_t grid_ms = 100);
};

enum class LabelKind { Binary, Ternary };
enum class LabelSource { Raw, Filtered };
enum class TieRule { Up, Down, Drop };

const char* to_string(LabelKind k);
const char* to_string(LabelSource s);
const char* to_string(TieRule t);
LabelKind label_kind_from_string(const std::string& s);
LabelSource label_source_from_string(const std::string& s);
TieRule tie_rule_from_string(const std::string& s);

struct LabelScheme {
  LabelKind kind = LabelKind::Binary;
  double epsilon = 0.0;  // ternary only
  LabelSource source = LabelSource::Filtered;
  TieRule tie_rule = TieRule::Up;

  int num_classes() const { return kind == LabelKind::Binary ? 2 : 3; }
  void validate() const;
};

namespace label {
inline constexpr int kDown = 0;
inline constexpr int kUpBinary = 1;
inline constexpr int kFlat = 1;
inline constexpr int kUpTernary = 2;
inline constexpr int kInvalid = -1;
}  // namespace label

struct LabelSet {
  std::vector<int> labels;       // kInvalid where !valid
  std::vector<bool> valid;
  std::vector<double> returns;   // NaN where no horizon return exists
  std::vector<std::size_t> class_counts;
  LabelScheme scheme;
  Horizon horizon;

  std::size_t size() const { return labels.size(); }
  std::size_t valid_count() const;
};

struct ClassWeights {
  std::vector<double> weights;
};

/// Marks which steps (t, t+1) are exactly one grid tick apart and answers
/// contiguity queries over row spans in O(1). grid_ms == 0 treats every row
/// pair as contiguous.
class GridIndex {
 public:
  GridIndex(std::span<const std::int64_t> ts, std::int64_t grid_ms);

  /// True when rows [first, last] are consecutive grid ticks.
  bool contiguous(std::size_t first, std::size_t last) const;

 private:
  std::vector<std::size_t> breaks_before_;  // prefix count of broken steps
};

/// (m_{t+H} - m_t) / m_t, or nullopt when t+H is out of range or the span
/// crosses a grid gap.
std::optional<double> horizon_return(std::span<const double> mids, std::size_t t,
                                     Horizon h, const GridIndex& grid);

std::vector<double> horizon_returns(std::span<const double> mids,
                                    std::span<const std::int64_t> ts, Horizon h,
                                    std::int64_t grid_ms);

/// nullopt means the row is dropped (zero return with TieRule::Drop).
std::optional<int> label_binary(double r, TieRule tie);
int label_ternary(double r, double epsilon);

struct EpsilonFit {
  double epsilon = 0.0;
  bool degenerate = false;
};

/// Linear-interpolated `target_flat_share` quantile of |returns|.
EpsilonFit tune_epsilon(std::span<const double> returns, double target_flat_share = 1.0 / 3.0);

/// Labels every row from a precomputed return series (NaN = no return).
LabelSet make_labels(std::span<const double> returns, const LabelScheme& scheme, Horizon h);

LabelSet make_labels(std::span<const double> mids, std::span<const std::int64_t> ts,
                     const LabelScheme& scheme, Horizon h, std::int64_t grid_ms);

/// weight_c = N / (K * N_c). Throws ConfigError naming an empty class.
ClassWeights class_weights(std::span<const std::size_t> counts);
ClassWeights class_weights(const LabelSet& labels);

}  // namespace lobbench
