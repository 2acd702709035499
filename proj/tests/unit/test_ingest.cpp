#include <gtest/gtest.h>

#include <cmath>
#include <fstream>
#include <random>
#include <sstream>

#include "lobbench/errors.hpp"
#include "lobbench/ingest.hpp"
#include "lobbench/synth.hpp"
#include "support/helpers.hpp"

using namespace lobbench;

namespace {

std::string ladder_json(int levels, double best_bid, double best_ask, std::int64_t ts = 1) {
  std::ostringstream os;
  os << "{\"ts\":" << ts << ",\"b\":[";
  for (int i = 0; i < levels; ++i) os << (i ? "," : "") << '[' << best_bid - i << ",1.5]";
  os << "],\"a\":[";
  for (int i = 0; i < levels; ++i) os << (i ? "," : "") << '[' << best_ask + i << ",2]";
  os << "]}";
  return os.str();
}

IngestResult ingest_text(const std::string& text, std::size_t k) {
  std::istringstream in(text);
  IngestOptions o;
  o.depth = k;
  return ingest_stream(in, o);
}

}  // namespace

TEST(ParseLine, TruncatesToMaxDepth) {
  auto s = parse_snapshot_line(ladder_json(200, 1000, 1001), 40);
  ASSERT_TRUE(s);
  EXPECT_EQ(s->bids.size(), 40u);
  EXPECT_EQ(s->asks.size(), 40u);
  EXPECT_EQ(s->bids[39].price, 961.0);
}

TEST(ParseLine, NullLevelsArePreservedAsNaN) {
  auto s = parse_snapshot_line(
      R"({"ts":5,"b":[[100,1],[99,1],[98,1],null,[96,1]],"a":[[101,1],[null,null],[103,1]]})", 10);
  ASSERT_TRUE(s);
  EXPECT_TRUE(std::isnan(s->bids[3].price));
  EXPECT_FALSE(s->bids[3].present());
  EXPECT_TRUE(std::isnan(s->asks[1].qty));
  EXPECT_EQ(s->bids[4].price, 96.0);
}

TEST(ParseLine, AcceptsNumericStrings) {
  auto s = parse_snapshot_line(R"({"ts":5,"b":[["100.5","0.25"]],"a":[["101","1e-3"]]})", 10);
  ASSERT_TRUE(s);
  EXPECT_EQ(s->bids[0].price, 100.5);
  EXPECT_EQ(s->asks[0].qty, 1e-3);
}

TEST(ParseLine, RejectsMalformed) {
  for (const char* bad : {"not json", "[]", R"({"b":[],"a":[]})", R"({"ts":0,"b":[],"a":[]})",
                          R"({"ts":1.5,"b":[],"a":[]})", R"({"ts":1,"b":[[1]],"a":[]})",
                          R"({"ts":1,"b":[["x",1]],"a":[]})",
                          R"({"ts":1,"b":[[99,1],[100,1]],"a":[]})",
                          R"({"ts":1,"b":[],"a":[[101,1],[101,1]]})"}) {
    EXPECT_FALSE(parse_snapshot_line(bad, 10).has_value()) << bad;
  }
}

TEST(ParseStream, MalformedLineIsSkipped) {
  std::istringstream in(ladder_json(3, 10, 11, 1) + "\nnot json\n\n" + ladder_json(3, 10, 11, 2) + "\n");
  IngestStats st;
  auto snaps = parse_snapshot_stream(in, 10, st);
  EXPECT_EQ(snaps.size(), 2u);
  EXPECT_EQ(st.rejected_malformed, 1u);
  EXPECT_EQ(st.total_records, 3u);
}

TEST(BookFrame, DepthRuleAppliesToFirstKLevels) {
  std::ostringstream os;
  os << R"({"ts":9,"b":[)";
  for (int i = 0; i < 10; ++i) os << (i ? "," : "") << '[' << 100 - i << ",1]";
  os << R"(],"a":[)";
  for (int i = 0; i < 10; ++i) os << (i ? "," : "") << (i == 6 ? std::string("null") : "[" + std::to_string(101 + i) + ",1]");
  os << "]}";
  auto s = parse_snapshot_line(os.str(), 40);
  ASSERT_TRUE(s);
  EXPECT_TRUE(std::holds_alternative<BookFrame>(to_book_frame(*s, 5)));
  auto r = to_book_frame(*s, 10);
  ASSERT_TRUE(std::holds_alternative<Rejection>(r));
  EXPECT_EQ(std::get<Rejection>(r), Rejection::MissingDepth);
  EXPECT_EQ(std::get<Rejection>(to_book_frame(*s, 11)), Rejection::MissingDepth);
}

TEST(BookFrame, FortyLevels) {
  auto s = parse_snapshot_line(ladder_json(40, 5000, 5001), 200);
  auto f = to_book_frame(*s, 40);
  ASSERT_TRUE(std::holds_alternative<BookFrame>(f));
  EXPECT_EQ(std::get<BookFrame>(f).depth(), 40u);
}

TEST(BookFrame, CrossedIsRejected) {
  auto s = parse_snapshot_line(ladder_json(3, 101, 100), 10);
  ASSERT_TRUE(s);
  EXPECT_EQ(std::get<Rejection>(to_book_frame(*s, 3)), Rejection::Crossed);
  auto locked = parse_snapshot_line(ladder_json(3, 100, 100), 10);
  EXPECT_EQ(std::get<Rejection>(to_book_frame(*locked, 1)), Rejection::Crossed);
}

TEST(BookFrame, InvariantsOnRandomFrames) {
  std::mt19937_64 rng(3);
  for (int i = 0; i < 10000; ++i) {
    auto f0 = testing_support::random_frame(rng, 10, i + 1);
    auto parsed = parse_snapshot_line(serialize_snapshot(testing_support::to_raw(f0)), 10);
    ASSERT_TRUE(parsed);
    auto res = to_book_frame(*parsed, 10);
    ASSERT_TRUE(std::holds_alternative<BookFrame>(res));
    const auto& f = std::get<BookFrame>(res);
    ASSERT_LT(f.bid_price[0], f.ask_price[0]);
    for (std::size_t k = 1; k < 10; ++k) {
      ASSERT_LT(f.bid_price[k], f.bid_price[k - 1]);
      ASSERT_GT(f.ask_price[k], f.ask_price[k - 1]);
    }
    ASSERT_EQ(f.bid_price, f0.bid_price);
    ASSERT_EQ(f.ask_qty, f0.ask_qty);
  }
}

TEST(Serialize, RoundTripIsIdentity) {
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> u;
  for (int i = 0; i < 2000; ++i) {
    RawSnapshot s;
    s.ts = 1738195200000 + i;
    double b = 1000 * u(rng) + 1, a = b + 0.1 + u(rng);
    for (int l = 0; l < 5; ++l) {
      s.bids.push_back({b, u(rng) * 100});
      s.asks.push_back({a, u(rng) * 100});
      b -= 0.01 + u(rng);
      a += 0.01 + u(rng);
    }
    if (i % 7 == 0) s.asks[2] = {NAN, NAN};
    const auto line = serialize_snapshot(s);
    auto back = parse_snapshot_line(line, 200);
    ASSERT_TRUE(back);
    ASSERT_EQ(serialize_snapshot(*back), line);
    ASSERT_EQ(back->bids[3].price, s.bids[3].price);
  }
}

TEST(Ingest, DuplicateTimestampsKeepFirst) {
  auto res = ingest_text(ladder_json(3, 10, 11, 100) + "\n" + ladder_json(3, 20, 21, 100) + "\n" +
                             ladder_json(3, 30, 31, 50) + "\n" + ladder_json(3, 40, 41, 200) + "\n",
                         3);
  ASSERT_EQ(res.frames.size(), 2u);
  EXPECT_EQ(res.frames[0].bid_price[0], 10.0);
  EXPECT_EQ(res.frames[1].ts, 200);
  EXPECT_EQ(res.stats.rejected_duplicate_ts, 2u);
  EXPECT_EQ(res.stats.total_records, res.stats.accepted + res.stats.rejected());
}

TEST(Ingest, MaxRecordsCountsParsedOrAccepted) {
  std::string text;
  for (int i = 1; i <= 10; ++i) text += ladder_json(i % 2 ? 5 : 2, 10, 11, i) + "\n";
  std::istringstream a(text), b(text);
  IngestOptions o;
  o.depth = 5;
  o.max_records = 4;
  auto before = ingest_stream(a, o);
  EXPECT_EQ(before.stats.total_records, 4u);
  EXPECT_EQ(before.frames.size(), 2u);
  o.take_before_depth_filter = false;
  auto after = ingest_stream(b, o);
  EXPECT_EQ(after.frames.size(), 4u);
}

TEST(Ingest, AcceptedCountGrowsAsDepthShrinks) {
  SynthConfig sc;
  sc.n = 5000;
  sc.depth = 40;
  sc.flicker_rate = 0.3;
  sc.missing_level_rate = 0.3;
  std::ostringstream os;
  write_ndjson(sc, os);
  const std::string corpus = os.str();
  std::uint64_t prev = 0;
  for (std::size_t k : {40u, 30u, 20u, 10u, 5u, 1u}) {
    auto res = ingest_text(corpus, k);
    EXPECT_GE(res.stats.accepted, prev) << k;
    EXPECT_EQ(res.stats.total_records, res.stats.accepted + res.stats.rejected());
    prev = res.stats.accepted;
  }
  EXPECT_LT(ingest_text(corpus, 40).stats.accepted, prev);
}

TEST(Ingest, MissingFileIsDataError) {
  EXPECT_THROW(ingest_file("/nonexistent/book.ndjson", {}), DataError);
}

TEST(Bybit, SnapshotRecordsConvert) {
  const std::string line =
      R"({"topic":"orderbook.200.BTCUSDT","type":"snapshot","ts":1738195200100,"data":{"s":"BTCUSDT","b":[["104000.5","1.2"],["104000.0","0.5"]],"a":[["104001.0","0.3"]],"u":1,"seq":2}})";
  auto canon = bybit_snapshot_converter(line);
  ASSERT_TRUE(canon);
  auto s = parse_snapshot_line(*canon, 200);
  ASSERT_TRUE(s);
  EXPECT_EQ(s->ts, 1738195200100);
  EXPECT_EQ(s->bids[1].price, 104000.0);
  EXPECT_EQ(s->asks[0].qty, 0.3);
  EXPECT_FALSE(bybit_snapshot_converter(R"({"type":"delta","ts":1,"data":{"b":[],"a":[]}})"));
  EXPECT_FALSE(bybit_snapshot_converter("nope"));
}

TEST(Coverage, Ratios) {
  IngestStats st;
  st.total_records = 100000;
  st.accepted = 27210;
  st.rejected_missing_depth = 100000 - 27210;
  auto rep = coverage_report(st);
  EXPECT_NE(rep.text.find("0.2721"), std::string::npos);
  EXPECT_NE(rep.csv.find("0.2721"), std::string::npos);

  IngestStats all;
  all.total_records = all.accepted = 10;
  EXPECT_EQ(coverage_report(all).acceptance_ratio, 1.0);

  IngestStats t4;  // 73,953 + 74,387 of 200,000 rows at five levels
  t4.total_records = 200000;
  t4.accepted = 73953 + 74387;
  EXPECT_NEAR(coverage_report(t4).acceptance_ratio, 0.7417, 5e-5);
}
