#include "lobbench/feature_matrix.hpp"

#include <algorithm>
#include <cmath>

#include "lobbench/errors.hpp"

namespace lobbench {

FeatureMatrix::FeatureMatrix(std::vector<std::int64_t> ts) : ts_(std::move(ts)) {}

const std::vector<double>& FeatureMatrix::column(std::string_view name) const {
  auto idx = index_of(name);
  if (!idx) throw DataError("no such column: " + std::string(name));
  return columns_[*idx];
}

std::optional<std::size_t> FeatureMatrix::index_of(std::string_view name) const {
  auto it = std::find(names_.begin(), names_.end(), name);
  if (it == names_.end()) return std::nullopt;
  return static_cast<std::size_t>(it - names_.begin());
}

void FeatureMatrix::add_column(std::string name, std::vector<double> values) {
  if (values.size() != ts_.size()) {
    throw DataError("column " + name + " has " + std::to_string(values.size()) +
                    " rows, expected " + std::to_string(ts_.size()));
  }
  if (index_of(name)) throw DataError("duplicate column: " + name);
  names_.push_back(std::move(name));
  columns_.push_back(std::move(values));
}

void FeatureMatrix::validate() const {
  for (std::size_t i = 1; i < ts_.size(); ++i) {
    if (ts_[i] <= ts_[i - 1]) {
      throw DataError("timestamps not strictly increasing at row " +
                      std::to_string(i));
    }
  }
  for (std::size_t c = 0; c < columns_.size(); ++c) {
    if (columns_[c].size() != ts_.size()) {
      throw DataError("ragged column " + names_[c]);
    }
    for (std::size_t r = 0; r < ts_.size(); ++r) {
      if (!std::isfinite(columns_[c][r])) {
        throw DataError("non-finite value in column " + names_[c] + " row " +
                        std::to_string(r));
      }
    }
  }
}

}  // namespace lobbench
