#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace lobbench {

/// One price level. Absent levels carry NaN in both fields.
struct Level {
  double price;
  double qty;

  bool present() const;
};

/// A snapshot as it appears on the wire: best-first ladders, possibly ragged
/// or holding NaN placeholders.
struct RawSnapshot {
  std::int64_t ts = 0;
  std::vector<Level> bids;
  std::vector<Level> asks;
};

/// Dense depth-k book with every level present and finite.
struct BookFrame {
  std::int64_t ts = 0;
  std::vector<double> bid_price;
  std::vector<double> bid_qty;
  std::vector<double> ask_price;
  std::vector<double> ask_qty;

  std::size_t depth() const { return bid_price.size(); }
};

enum class Rejection { MissingDepth, Crossed, Malformed, DuplicateTimestamp };

const char* to_string(Rejection r);

struct IngestStats {
  std::uint64_t total_records = 0;
  std::uint64_t accepted = 0;
  std::uint64_t rejected_missing_depth = 0;
  std::uint64_t rejected_crossed = 0;
  std::uint64_t rejected_malformed = 0;
  std::uint64_t rejected_duplicate_ts = 0;

  std::uint64_t rejected() const {
    return rejected_missing_depth + rejected_crossed + rejected_malformed +
           rejected_duplicate_ts;
  }
  void count(Rejection r);
};

/// Maps a vendor record onto the canonical line format. Returning nullopt
/// marks the line malformed.
using RecordConverter =
    std::function<std::optional<std::string>(std::string_view line)>;

/// Accepts Bybit-style `{"ts":..,"data":{"b":[["p","q"],..],"a":[..]}}`
/// snapshot records. Delta records are not applied and come back as nullopt.
std::optional<std::string> bybit_snapshot_converter(std::string_view line);

/// Parses one canonical record. nullopt if the line is malformed or violates
/// the ladder ordering invariants.
std::optional<RawSnapshot> parse_snapshot_line(std::string_view line,
                                               std::size_t max_depth);

/// Reads newline-delimited records in file order. Blank lines are ignored;
/// malformed lines are counted in `stats` and skipped.
std::vector<RawSnapshot> parse_snapshot_stream(
    std::istream& source, std::size_t max_depth, IngestStats& stats,
    const RecordConverter& converter = {});

/// Canonical single-line encoding; NaN levels are written as null.
std::string serialize_snapshot(const RawSnapshot& s);

std::variant<BookFrame, Rejection> to_book_frame(const RawSnapshot& s,
                                                 std::size_t k);

struct IngestOptions {
  std::size_t depth = 10;
  // 0 keeps everything.
  std::size_t max_records = 0;
  // When true the record limit counts parsed records; otherwise it counts
  // accepted frames.
  bool take_before_depth_filter = true;
  RecordConverter converter;
};

struct IngestResult {
  std::vector<BookFrame> frames;
  IngestStats stats;
};

/// parse -> de-duplicate timestamps (first wins) -> depth filter.
IngestResult ingest_stream(std::istream& source, const IngestOptions& opts);
IngestResult ingest_file(const std::string& path, const IngestOptions& opts);

struct CoverageReport {
  std::string text;
  std::string csv;
  double acceptance_ratio = 0.0;
};

CoverageReport coverage_report(const IngestStats& stats);

}  // namespace lobbench
