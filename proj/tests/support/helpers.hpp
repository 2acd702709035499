#pragma once

#include <unistd.h>

#include <algorithm>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "lobbench/dataset.hpp"
#include "lobbench/ingest.hpp"

namespace testing_support {

// Fresh empty directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    static int counter = 0;
    path_ = std::filesystem::temp_directory_path() /
            ("lobbench_" + tag + "_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

inline std::vector<double> random_series(std::size_t n, std::uint64_t seed, double scale = 1.0) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> nd(0.0, scale);
  std::vector<double> v(n);
  for (auto& x : v) x = nd(rng);
  return v;
}

// Uncrossed depth-k frame with strictly monotone ladders.
inline lobbench::BookFrame random_frame(std::mt19937_64& rng, std::size_t k, std::int64_t ts = 0) {
  std::uniform_real_distribution<double> mid(100.0, 200.0);
  std::uniform_real_distribution<double> gap(0.01, 1.0);
  std::uniform_real_distribution<double> qty(0.0, 50.0);
  lobbench::BookFrame f;
  f.ts = ts;
  const double m = mid(rng);
  const double half = gap(rng) / 2.0;
  double b = m - half;
  double a = m + half;
  for (std::size_t i = 0; i < k; ++i) {
    f.bid_price.push_back(b);
    f.ask_price.push_back(a);
    f.bid_qty.push_back(qty(rng));
    f.ask_qty.push_back(qty(rng));
    b -= gap(rng);
    a += gap(rng);
  }
  return f;
}

inline lobbench::RawSnapshot to_raw(const lobbench::BookFrame& f) {
  lobbench::RawSnapshot s;
  s.ts = f.ts;
  for (std::size_t i = 0; i < f.depth(); ++i) {
    s.bids.push_back({f.bid_price[i], f.bid_qty[i]});
    s.asks.push_back({f.ask_price[i], f.ask_qty[i]});
  }
  return s;
}

// Samples from a row-major feature table.
inline lobbench::Samples make_samples(const std::vector<std::vector<double>>& rows, const std::vector<int>& y) {
  lobbench::Samples s;
  s.t = 1;
  s.f = rows.empty() ? 0 : rows[0].size();
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (double v : rows[i]) s.x.push_back(static_cast<float>(v));
    s.anchor_ts.push_back(static_cast<std::int64_t>(i));
  }
  s.y = y;
  return s;
}

inline double rel_err(double a, double b) {
  const double scale = std::max({std::abs(a), std::abs(b), 1.0});
  return std::abs(a - b) / scale;
}

}  // namespace testing_support
