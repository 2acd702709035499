#include "lobbench/matrix_io.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "lobbench/errors.hpp"

namespace lobbench {

namespace {

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> cells;
  std::size_t start = 0;
  while (true) {
    const auto comma = line.find(',', start);
    cells.push_back(line.substr(start, comma == std::string::npos ? std::string::npos : comma - start));
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  if (!cells.empty() && !cells.back().empty() && cells.back().back() == '\r') cells.back().pop_back();
  return cells;
}

template <typename T>
T parse_number(const std::string& s, std::size_t lineno) {
  T v{};
  const char* b = s.data();
  const char* e = b + s.size();
  auto res = std::from_chars(b, e, v);
  if (res.ec != std::errc() || res.ptr != e) {
    throw DataError("line " + std::to_string(lineno) + ": bad number '" + s + "'");
  }
  return v;
}

}  // namespace

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  out << text;
  if (!out) throw DataError("write failed for " + path.string());
}

void write_matrix_csv(const FeatureMatrix& m, std::ostream& out) {
  out << "ts";
  for (const auto& n : m.names()) out << ',' << n;
  out << '\n';
  for (std::size_t r = 0; r < m.rows(); ++r) {
    out << m.ts()[r];
    for (std::size_t c = 0; c < m.cols(); ++c) out << ',' << format_double(m.at(r, c));
    out << '\n';
  }
}

FeatureMatrix read_matrix_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw DataError("matrix csv: empty input");
  const auto header = split_csv(line);
  if (header.empty() || header[0] != "ts") throw DataError("matrix csv: first column must be ts");
  const std::size_t cols = header.size() - 1;
  std::vector<std::int64_t> ts;
  std::vector<std::vector<double>> data(cols);
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    const auto cells = split_csv(line);
    if (cells.size() != header.size()) {
      throw DataError("matrix csv: line " + std::to_string(lineno) + " has " +
                      std::to_string(cells.size()) + " fields, expected " +
                      std::to_string(header.size()));
    }
    ts.push_back(parse_number<std::int64_t>(cells[0], lineno));
    for (std::size_t c = 0; c < cols; ++c) data[c].push_back(parse_number<double>(cells[c + 1], lineno));
  }
  FeatureMatrix m(std::move(ts));
  for (std::size_t c = 0; c < cols; ++c) m.add_column(header[c + 1], std::move(data[c]));
  m.validate();
  return m;
}

void save_matrix_csv(const FeatureMatrix& m, const std::filesystem::path& path) {
  std::ostringstream os;
  write_matrix_csv(m, os);
  write_text_file(path, os.str());
}

FeatureMatrix load_matrix_csv(const std::filesystem::path& path) {
  std::istringstream in(read_text_file(path));
  return read_matrix_csv(in);
}

void write_labels_csv(const std::vector<std::int64_t>& ts, const LabelSet& labels, std::ostream& out) {
  if (ts.size() != labels.size()) throw DataError("labels csv: timestamp count differs from labels");
  out << "ts,label,return\n";
  for (std::size_t i = 0; i < ts.size(); ++i) {
    out << ts[i] << ',' << labels.labels[i] << ',';
    if (!std::isnan(labels.returns[i])) out << format_double(labels.returns[i]);
    out << '\n';
  }
}

LabelRows read_labels_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || split_csv(line) != std::vector<std::string>{"ts", "label", "return"}) {
    throw DataError("labels csv: expected header ts,label,return");
  }
  LabelRows rows;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    const auto cells = split_csv(line);
    if (cells.size() != 3) throw DataError("labels csv: line " + std::to_string(lineno) + " needs 3 fields");
    rows.ts.push_back(parse_number<std::int64_t>(cells[0], lineno));
    rows.labels.push_back(parse_number<int>(cells[1], lineno));
    rows.returns.push_back(cells[2].empty() ? NAN : parse_number<double>(cells[2], lineno));
  }
  return rows;
}

PredictionRows make_prediction_rows(const std::vector<std::int64_t>& ts, const std::vector<int>& labels,
                                    const Prediction& p) {
  if (ts.size() != labels.size() || p.size() != labels.size()) {
    throw DataError("prediction rows: length mismatch");
  }
  PredictionRows rows;
  rows.classes = p.classes;
  rows.ts = ts;
  rows.labels = labels;
  rows.predicted = p.argmax();
  rows.probs = p.probs;
  return rows;
}

void write_predictions_csv(const PredictionRows& rows, std::ostream& out) {
  out << "ts,label,pred";
  for (int c = 0; c < rows.classes; ++c) out << ",p" << c;
  out << '\n';
  const auto k = static_cast<std::size_t>(rows.classes);
  for (std::size_t i = 0; i < rows.ts.size(); ++i) {
    out << rows.ts[i] << ',' << rows.labels[i] << ',' << rows.predicted[i];
    for (std::size_t c = 0; c < k; ++c) out << ',' << format_double(rows.probs[i * k + c]);
    out << '\n';
  }
}

PredictionRows read_predictions_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw DataError("predictions csv: empty input");
  const auto header = split_csv(line);
  if (header.size() < 5 || header[0] != "ts" || header[1] != "label" || header[2] != "pred") {
    throw DataError("predictions csv: expected header ts,label,pred,p0,...");
  }
  PredictionRows rows;
  rows.classes = static_cast<int>(header.size() - 3);
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    const auto cells = split_csv(line);
    if (cells.size() != header.size()) {
      throw DataError("predictions csv: line " + std::to_string(lineno) + " has wrong field count");
    }
    rows.ts.push_back(parse_number<std::int64_t>(cells[0], lineno));
    rows.labels.push_back(parse_number<int>(cells[1], lineno));
    rows.predicted.push_back(parse_number<int>(cells[2], lineno));
    for (std::size_t c = 3; c < cells.size(); ++c) rows.probs.push_back(parse_number<double>(cells[c], lineno));
  }
  return rows;
}

}  // namespace lobbench
