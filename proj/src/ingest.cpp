#include "lobbench/ingest.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <istream>
#include <limits>
#include <sstream>

#include "json.hpp"
#include "lobbench/errors.hpp"

namespace lobbench {

namespace {

using nlohmann::json;

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

// Numbers may arrive as JSON numbers, numeric strings (exchange style) or null.
std::optional<double> read_number(const json& v) {
  if (v.is_null()) return kNaN;
  if (v.is_number()) return v.get<double>();
  if (v.is_string()) {
    const auto& s = v.get_ref<const std::string&>();
    double out = 0.0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
    if (ec != std::errc() || ptr != s.data() + s.size()) return std::nullopt;
    return out;
  }
  return std::nullopt;
}

std::optional<std::vector<Level>> read_side(const json& side,
                                            std::size_t max_depth) {
  std::vector<Level> out;
  if (side.is_null()) return out;
  if (!side.is_array()) return std::nullopt;
  const std::size_t n = std::min(side.size(), max_depth);
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const json& lv = side[i];
    if (lv.is_null()) {
      out.push_back({kNaN, kNaN});
      continue;
    }
    if (!lv.is_array() || lv.size() < 2) return std::nullopt;
    auto p = read_number(lv[0]);
    auto q = read_number(lv[1]);
    if (!p || !q) return std::nullopt;
    Level level{*p, *q};
    // A half-specified level is treated as absent.
    if (!level.present()) level = {kNaN, kNaN};
    out.push_back(level);
  }
  return out;
}

// Present prices must be strictly monotone (best-first); quantities >= 0.
bool ladder_ok(const std::vector<Level>& side, bool descending) {
  double last = descending ? std::numeric_limits<double>::infinity()
                           : -std::numeric_limits<double>::infinity();
  for (const auto& lv : side) {
    if (!lv.present()) continue;
    if (lv.price <= 0.0 || lv.qty < 0.0) return false;
    if (descending ? !(lv.price < last) : !(lv.price > last)) return false;
    last = lv.price;
  }
  return true;
}

void write_number(std::ostringstream& os, double v) {
  if (std::isnan(v)) {
    os << "null";
    return;
  }
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  os.write(buf, ptr - buf);
}

void write_side(std::ostringstream& os, const std::vector<Level>& side) {
  os << '[';
  for (std::size_t i = 0; i < side.size(); ++i) {
    if (i) os << ',';
    if (!side[i].present()) {
      os << "null";
      continue;
    }
    os << '[';
    write_number(os, side[i].price);
    os << ',';
    write_number(os, side[i].qty);
    os << ']';
  }
  os << ']';
}

bool is_blank(std::string_view line) {
  return line.find_first_not_of(" \t\r\n") == std::string_view::npos;
}

}  // namespace

bool Level::present() const {
  return std::isfinite(price) && std::isfinite(qty);
}

const char* to_string(Rejection r) {
  switch (r) {
    case Rejection::MissingDepth:
      return "missing_depth";
    case Rejection::Crossed:
      return "crossed";
    case Rejection::Malformed:
      return "malformed";
    case Rejection::DuplicateTimestamp:
      return "duplicate_ts";
  }
  return "unknown";
}

void IngestStats::count(Rejection r) {
  switch (r) {
    case Rejection::MissingDepth:
      ++rejected_missing_depth;
      break;
    case Rejection::Crossed:
      ++rejected_crossed;
      break;
    case Rejection::Malformed:
      ++rejected_malformed;
      break;
    case Rejection::DuplicateTimestamp:
      ++rejected_duplicate_ts;
      break;
  }
}

std::optional<std::string> bybit_snapshot_converter(std::string_view line) {
  json rec = json::parse(line, nullptr, false);
  if (rec.is_discarded() || !rec.is_object()) return std::nullopt;
  if (rec.contains("type") && rec["type"] != "snapshot") return std::nullopt;
  if (!rec.contains("ts") || !rec.contains("data")) return std::nullopt;
  const json& data = rec["data"];
  if (!data.is_object()) return std::nullopt;
  json out;
  out["ts"] = rec["ts"];
  out["b"] = data.value("b", json::array());
  out["a"] = data.value("a", json::array());
  return out.dump();
}

std::optional<RawSnapshot> parse_snapshot_line(std::string_view line,
                                               std::size_t max_depth) {
  json rec = json::parse(line, nullptr, false);
  if (rec.is_discarded() || !rec.is_object()) return std::nullopt;
  auto ts_it = rec.find("ts");
  if (ts_it == rec.end() || !ts_it->is_number_integer()) return std::nullopt;
  RawSnapshot snap;
  snap.ts = ts_it->get<std::int64_t>();
  if (snap.ts <= 0) return std::nullopt;

  auto b_it = rec.find("b");
  auto a_it = rec.find("a");
  auto bids = read_side(b_it == rec.end() ? json() : *b_it, max_depth);
  auto asks = read_side(a_it == rec.end() ? json() : *a_it, max_depth);
  if (!bids || !asks) return std::nullopt;
  snap.bids = std::move(*bids);
  snap.asks = std::move(*asks);
  if (!ladder_ok(snap.bids, true) || !ladder_ok(snap.asks, false)) {
    return std::nullopt;
  }
  return snap;
}

std::vector<RawSnapshot> parse_snapshot_stream(std::istream& source,
                                               std::size_t max_depth,
                                               IngestStats& stats,
                                               const RecordConverter& converter) {
  if (!source) throw DataError("unreadable snapshot source");
  std::vector<RawSnapshot> out;
  std::string line;
  while (std::getline(source, line)) {
    if (is_blank(line)) continue;
    ++stats.total_records;
    std::optional<RawSnapshot> snap;
    if (converter) {
      if (auto canon = converter(line)) snap = parse_snapshot_line(*canon, max_depth);
    } else {
      snap = parse_snapshot_line(line, max_depth);
    }
    if (!snap) {
      ++stats.rejected_malformed;
      continue;
    }
    out.push_back(std::move(*snap));
  }
  if (source.bad()) throw DataError("I/O error while reading snapshots");
  return out;
}

std::string serialize_snapshot(const RawSnapshot& s) {
  std::ostringstream os;
  os << "{\"ts\":" << s.ts << ",\"b\":";
  write_side(os, s.bids);
  os << ",\"a\":";
  write_side(os, s.asks);
  os << '}';
  return os.str();
}

std::variant<BookFrame, Rejection> to_book_frame(const RawSnapshot& s,
                                                 std::size_t k) {
  if (k == 0) throw ConfigError("depth k must be >= 1");
  if (s.bids.size() < k || s.asks.size() < k) return Rejection::MissingDepth;
  BookFrame f;
  f.ts = s.ts;
  f.bid_price.resize(k);
  f.bid_qty.resize(k);
  f.ask_price.resize(k);
  f.ask_qty.resize(k);
  for (std::size_t i = 0; i < k; ++i) {
    const Level& b = s.bids[i];
    const Level& a = s.asks[i];
    if (!b.present() || !a.present()) return Rejection::MissingDepth;
    f.bid_price[i] = b.price;
    f.bid_qty[i] = b.qty;
    f.ask_price[i] = a.price;
    f.ask_qty[i] = a.qty;
  }
  for (std::size_t i = 1; i < k; ++i) {
    if (!(f.bid_price[i] < f.bid_price[i - 1]) ||
        !(f.ask_price[i] > f.ask_price[i - 1])) {
      return Rejection::Malformed;
    }
  }
  if (!(f.bid_price[0] < f.ask_price[0])) return Rejection::Crossed;
  return f;
}

IngestResult ingest_stream(std::istream& source, const IngestOptions& opts) {
  if (opts.depth == 0) throw ConfigError("depth k must be >= 1");
  if (!source) throw DataError("unreadable snapshot source");
  IngestResult res;
  auto& stats = res.stats;
  bool have_last = false;
  std::int64_t last_ts = 0;
  std::string line;
  while (std::getline(source, line)) {
    if (is_blank(line)) continue;
    if (opts.max_records != 0) {
      const std::uint64_t taken =
          opts.take_before_depth_filter ? stats.total_records : stats.accepted;
      if (taken >= opts.max_records) break;
    }
    ++stats.total_records;

    std::optional<RawSnapshot> snap;
    if (opts.converter) {
      if (auto canon = opts.converter(line)) snap = parse_snapshot_line(*canon, opts.depth);
    } else {
      snap = parse_snapshot_line(line, opts.depth);
    }
    if (!snap) {
      stats.count(Rejection::Malformed);
      continue;
    }
    if (have_last && snap->ts <= last_ts) {
      stats.count(Rejection::DuplicateTimestamp);
      continue;
    }
    have_last = true;
    last_ts = snap->ts;

    auto frame = to_book_frame(*snap, opts.depth);
    if (auto* r = std::get_if<Rejection>(&frame)) {
      stats.count(*r);
      continue;
    }
    ++stats.accepted;
    res.frames.push_back(std::move(std::get<BookFrame>(frame)));
  }
  if (source.bad()) throw DataError("I/O error while reading snapshots");
  return res;
}

IngestResult ingest_file(const std::string& path, const IngestOptions& opts) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open input file: " + path);
  return ingest_stream(in, opts);
}

CoverageReport coverage_report(const IngestStats& stats) {
  CoverageReport rep;
  rep.acceptance_ratio =
      stats.total_records == 0
          ? 0.0
          : static_cast<double>(stats.accepted) /
                static_cast<double>(stats.total_records);
  std::ostringstream ratio;
  ratio << std::fixed << std::setprecision(4) << rep.acceptance_ratio;

  std::ostringstream text;
  text << "total_records          " << stats.total_records << '\n'
       << "accepted               " << stats.accepted << '\n'
       << "rejected_missing_depth " << stats.rejected_missing_depth << '\n'
       << "rejected_crossed       " << stats.rejected_crossed << '\n'
       << "rejected_malformed     " << stats.rejected_malformed << '\n'
       << "rejected_duplicate_ts  " << stats.rejected_duplicate_ts << '\n'
       << "acceptance_ratio       " << ratio.str() << '\n';
  rep.text = text.str();

  std::ostringstream csv;
  csv << "total_records,accepted,rejected_missing_depth,rejected_crossed,"
         "rejected_malformed,rejected_duplicate_ts,acceptance_ratio\n"
      << stats.total_records << ',' << stats.accepted << ','
      << stats.rejected_missing_depth << ',' << stats.rejected_crossed << ','
      << stats.rejected_malformed << ',' << stats.rejected_duplicate_ts << ','
      << ratio.str() << '\n';
  rep.csv = csv.str();
  return rep;
}

}  // namespace lobbench
