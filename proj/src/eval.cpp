#include "lobbench/eval.hpp"

#include <charconv>
#include <chrono>
#include <cmath>
#include <iomanip>
#include <numeric>
#include <sstream>

#include "lobbench/errors.hpp"

namespace lobbench {

ConfusionMatrix ConfusionMatrix::zeros(int k) {
  if (k < 1) throw ConfigError("confusion matrix needs at least one class");
  ConfusionMatrix m;
  m.k = k;
  m.counts.assign(static_cast<std::size_t>(k * k), 0);
  return m;
}

std::uint64_t ConfusionMatrix::total() const {
  return std::accumulate(counts.begin(), counts.end(), std::uint64_t{0});
}

ConfusionMatrix confusion(std::span<const int> y_true, std::span<const int> y_pred, int k) {
  if (y_true.size() != y_pred.size()) {
    throw DataError("confusion: " + std::to_string(y_true.size()) + " labels vs " +
                    std::to_string(y_pred.size()) + " predictions");
  }
  auto m = ConfusionMatrix::zeros(k);
  for (std::size_t i = 0; i < y_true.size(); ++i) {
    const int t = y_true[i];
    const int p = y_pred[i];
    if (t < 0 || t >= k || p < 0 || p >= k) {
      throw DataError("confusion: label out of range at index " + std::to_string(i));
    }
    ++m.at(t, p);
  }
  return m;
}

namespace {
double ratio(std::uint64_t num, std::uint64_t den) {
  return den == 0 ? 0.0 : static_cast<double>(num) / static_cast<double>(den);
}
}  // namespace

MetricsReport metrics(const ConfusionMatrix& m) {
  MetricsReport r;
  r.total = m.total();
  if (r.total == 0) throw DataError("metrics of an empty confusion matrix");
  std::uint64_t trace = 0;
  r.per_class.resize(static_cast<std::size_t>(m.k));
  for (int c = 0; c < m.k; ++c) {
    std::uint64_t tp = m.at(c, c), col = 0, row = 0;
    for (int j = 0; j < m.k; ++j) {
      col += m.at(j, c);
      row += m.at(c, j);
    }
    trace += tp;
    auto& pc = r.per_class[static_cast<std::size_t>(c)];
    pc.precision = ratio(tp, col);
    pc.recall = ratio(tp, row);
    pc.f1 = pc.precision + pc.recall > 0.0
                ? 2.0 * pc.precision * pc.recall / (pc.precision + pc.recall)
                : 0.0;
    pc.support = row;
    r.macro_f1 += pc.f1;
    r.weighted_f1 += pc.f1 * static_cast<double>(row);
  }
  r.accuracy = ratio(trace, r.total);
  r.macro_f1 /= m.k;
  r.weighted_f1 /= static_cast<double>(r.total);
  return r;
}

double time_phase(const std::function<void()>& thunk) {
  const auto t0 = std::chrono::steady_clock::now();
  thunk();
  const auto t1 = std::chrono::steady_clock::now();
  return std::chrono::duration<double>(t1 - t0).count();
}

double time_phase(Phase phase, const std::function<void()>& thunk, MetricsReport& report,
                  std::size_t samples) {
  const double s = time_phase(thunk);
  if (phase == Phase::Train) {
    report.train_seconds = s;
  } else {
    report.infer_ms_per_1k = samples == 0 ? 0.0 : s * 1e3 * 1000.0 / static_cast<double>(samples);
  }
  return s;
}

std::string format_metric(double v, int digits) {
  std::ostringstream os;
  os << std::fixed << std::setprecision(digits) << v;
  return os.str();
}

std::string metrics_csv_header() { return "model,metric,class,value\n"; }

std::string metrics_csv_rows(const MetricsReport& r, const std::string& model) {
  std::ostringstream os;
  os << std::setprecision(17);
  os << model << ",accuracy,," << r.accuracy << '\n';
  os << model << ",macro_f1,," << r.macro_f1 << '\n';
  os << model << ",weighted_f1,," << r.weighted_f1 << '\n';
  os << model << ",total,," << r.total << '\n';
  for (std::size_t c = 0; c < r.per_class.size(); ++c) {
    const auto& pc = r.per_class[c];
    os << model << ",precision," << c << ',' << pc.precision << '\n';
    os << model << ",recall," << c << ',' << pc.recall << '\n';
    os << model << ",f1," << c << ',' << pc.f1 << '\n';
    os << model << ",support," << c << ',' << pc.support << '\n';
  }
  return os.str();
}

std::vector<MetricsRow> parse_metrics_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line) || line + "\n" != metrics_csv_header()) {
    throw DataError("metrics csv: unexpected header '" + line + "'");
  }
  std::vector<MetricsRow> rows;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (!line.empty() && line.back() == ',') cells.emplace_back();
    if (cells.size() != 4) throw DataError("metrics csv: line " + std::to_string(lineno) + " needs 4 fields");
    MetricsRow r{cells[0], cells[1], cells[2], 0.0};
    const auto* b = cells[3].data();
    const auto* e = b + cells[3].size();
    auto res = std::from_chars(b, e, r.value);
    if (res.ec != std::errc() || res.ptr != e) {
      throw DataError("metrics csv: bad value on line " + std::to_string(lineno));
    }
    rows.push_back(std::move(r));
  }
  return rows;
}

std::string confusion_csv(const ConfusionMatrix& m) {
  std::ostringstream os;
  os << "true\\pred";
  for (int c = 0; c < m.k; ++c) os << ',' << c;
  os << '\n';
  for (int t = 0; t < m.k; ++t) {
    os << t;
    for (int p = 0; p < m.k; ++p) os << ',' << m.at(t, p);
    os << '\n';
  }
  return os.str();
}

std::string metrics_markdown(const MetricsReport& r, const std::string& model) {
  std::ostringstream os;
  os << "## " << model << "\n\n";
  os << "| metric | value |\n|---|---|\n";
  os << "| accuracy | " << format_metric(r.accuracy) << " |\n";
  os << "| macro F1 | " << format_metric(r.macro_f1) << " |\n";
  os << "| weighted F1 | " << format_metric(r.weighted_f1) << " |\n";
  os << "| samples | " << r.total << " |\n";
  os << "| train time (s) | " << format_metric(r.train_seconds, 3) << " |\n";
  os << "| inference (ms / 1k) | " << format_metric(r.infer_ms_per_1k, 3) << " |\n\n";
  os << "| class | precision | recall | F1 | support |\n|---|---|---|---|---|\n";
  for (std::size_t c = 0; c < r.per_class.size(); ++c) {
    const auto& pc = r.per_class[c];
    os << "| " << c << " | " << format_metric(pc.precision) << " | " << format_metric(pc.recall)
       << " | " << format_metric(pc.f1) << " | " << pc.support << " |\n";
  }
  if (!r.meta.empty()) {
    os << "\n| key | value |\n|---|---|\n";
    for (const auto& [k, v] : r.meta) os << "| " << k << " | " << v << " |\n";
  }
  return os.str();
}

}  // namespace lobbench
