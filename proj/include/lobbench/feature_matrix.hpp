#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace lobbench {

/// Time-ordered rows with named, column-major decimal columns.
class FeatureMatrix {
 public:
  FeatureMatrix() = default;
  explicit FeatureMatrix(std::vector<std::int64_t> ts);

  std::size_t rows() const { return ts_.size(); }
  std::size_t cols() const { return columns_.size(); }

  const std::vector<std::int64_t>& ts() const { return ts_; }
  const std::vector<std::string>& names() const { return names_; }

  const std::vector<double>& column(std::size_t c) const { return columns_[c]; }
  std::vector<double>& column(std::size_t c) { return columns_[c]; }
  const std::vector<double>& column(std::string_view name) const;

  std::optional<std::size_t> index_of(std::string_view name) const;
  double at(std::size_t row, std::size_t col) const { return columns_[col][row]; }

  /// Appends a column; throws if the name exists or the length differs.
  void add_column(std::string name, std::vector<double> values);

  bool normalized() const { return normalized_; }
  void mark_normalized() { normalized_ = true; }

  /// Checks the structural invariants: equal lengths, strictly increasing
  /// timestamps, finite values. Throws DataError on violation.
  void validate() const;

  bool operator==(const FeatureMatrix&) const = default;

 private:
  std::vector<std::int64_t> ts_;
  std::vector<std::string> names_;
  std::vector<std::vector<double>> columns_;
  bool normalized_ = false;
};

}  // namespace lobbench
