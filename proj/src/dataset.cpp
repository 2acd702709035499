#include "lobbench/dataset.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "lobbench/errors.hpp"

namespace lobbench {

namespace {

const char* const kSplits[] = {"train", "val", "test"};

template <typename T>
T to_little_endian(T v) {
  if constexpr (std::endian::native == std::endian::little) {
    return v;
  } else {
    unsigned char b[sizeof(T)];
    std::memcpy(b, &v, sizeof(T));
    std::reverse(b, b + sizeof(T));
    std::memcpy(&v, b, sizeof(T));
    return v;
  }
}

std::string join_doubles(const std::vector<double>& v) {
  std::ostringstream os;
  os << std::setprecision(17);
  for (std::size_t i = 0; i < v.size(); ++i) os << (i ? "," : "") << v[i];
  return os.str();
}

std::vector<std::string> split_csv(const std::string& s) {
  std::vector<std::string> out;
  if (s.empty()) return out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(item);
  return out;
}

std::string substitute(std::string pattern, const std::string& split) {
  const std::string key = "{split}";
  for (auto pos = pattern.find(key); pos != std::string::npos; pos = pattern.find(key)) {
    pattern.replace(pos, key.size(), split);
  }
  return pattern;
}

const Samples& split_of(const ExperimentDataset& ds, int i) {
  return i == 0 ? ds.train : (i == 1 ? ds.val : ds.test);
}
Samples& split_of(ExperimentDataset& ds, int i) {
  return i == 0 ? ds.train : (i == 1 ? ds.val : ds.test);
}

}  // namespace

const char* to_string(WindowAnchor a) { return a == WindowAnchor::Last ? "last" : "first"; }

WindowAnchor window_anchor_from_string(const std::string& s) {
  if (s == "last") return WindowAnchor::Last;
  if (s == "first") return WindowAnchor::First;
  throw ConfigError("window.anchor must be last or first, got " + s);
}

std::size_t label_row(std::size_t last_row, std::size_t t, WindowAnchor anchor) {
  return anchor == WindowAnchor::Last ? last_row : last_row + 1 - t;
}

std::vector<std::size_t> window_ends(std::span<const std::int64_t> ts, const LabelSet& labels,
                                     const WindowOptions& opts) {
  if (opts.t == 0) throw ConfigError("window.t must be >= 1");
  if (labels.size() != ts.size()) throw DataError("labels and matrix are not aligned");
  std::vector<std::size_t> ends;
  if (opts.t > ts.size()) return ends;
  const GridIndex grid(ts, opts.grid_ms);
  for (std::size_t e = opts.t - 1; e < ts.size(); ++e) {
    if (!labels.valid[label_row(e, opts.t, opts.anchor)]) continue;
    if (!grid.contiguous(e + 1 - opts.t, e)) continue;
    ends.push_back(e);
  }
  return ends;
}

std::vector<SampleWindow> make_windows(const FeatureMatrix& m, const LabelSet& labels,
                                       const WindowOptions& opts) {
  std::vector<SampleWindow> out;
  const std::size_t f = m.cols();
  for (std::size_t e : window_ends(m.ts(), labels, opts)) {
    SampleWindow w;
    w.t = opts.t;
    w.f = f;
    w.rows.resize(opts.t * f);
    for (std::size_t s = 0; s < opts.t; ++s) {
      for (std::size_t c = 0; c < f; ++c) w.rows[s * f + c] = m.at(e + 1 - opts.t + s, c);
    }
    w.label = labels.labels[label_row(e, opts.t, opts.anchor)];
    w.anchor_ts = m.ts()[e];
    w.last_row = e;
    out.push_back(std::move(w));
  }
  return out;
}

std::vector<double> flatten_window(const SampleWindow& w) { return w.rows; }

SampleWindow unflatten_window(std::span<const double> flat, std::size_t t, std::size_t f,
                              int label, std::int64_t anchor_ts) {
  if (flat.size() != t * f) throw DataError("unflatten_window: size is not T*F");
  SampleWindow w;
  w.t = t;
  w.f = f;
  w.rows.assign(flat.begin(), flat.end());
  w.label = label;
  w.anchor_ts = anchor_ts;
  return w;
}

void SplitSpec::validate() const {
  if (!(train_frac > 0.0 && train_frac < 1.0)) throw ConfigError("split.train_frac must be in (0,1)");
  if (!(val_frac_of_train > 0.0 && val_frac_of_train < 1.0)) {
    throw ConfigError("split.val_frac_of_train must be in (0,1)");
  }
}

SplitRanges chronological_split(std::size_t n, const SplitSpec& spec) {
  spec.validate();
  if (n < 5) throw DataError("chronological_split: need at least 5 windows, got " + std::to_string(n));
  const auto fit_end = static_cast<std::size_t>(std::floor(static_cast<double>(n) * spec.train_frac));
  const auto train_end =
      static_cast<std::size_t>(std::floor(static_cast<double>(fit_end) * (1.0 - spec.val_frac_of_train)));
  SplitRanges r{{0, train_end}, {train_end, fit_end}, {fit_end, n}};
  if (r.train.empty() || r.val.empty() || r.test.empty()) {
    throw DataError("chronological_split: a partition is empty for n=" + std::to_string(n));
  }
  return r;
}

std::vector<std::size_t> Samples::class_counts(int num_classes) const {
  std::vector<std::size_t> c(static_cast<std::size_t>(num_classes), 0);
  for (int v : y) {
    if (v < 0 || v >= num_classes) throw DataError("label out of range: " + std::to_string(v));
    ++c[static_cast<std::size_t>(v)];
  }
  return c;
}

Samples materialize(const FeatureMatrix& m, const LabelSet& labels,
                    std::span<const std::size_t> ends, const WindowOptions& opts) {
  Samples s;
  s.t = opts.t;
  s.f = m.cols();
  s.x.resize(ends.size() * s.width());
  s.y.reserve(ends.size());
  s.anchor_ts.reserve(ends.size());
  for (std::size_t i = 0; i < ends.size(); ++i) {
    const std::size_t e = ends[i];
    float* dst = s.x.data() + i * s.width();
    for (std::size_t step = 0; step < opts.t; ++step) {
      const std::size_t row = e + 1 - opts.t + step;
      for (std::size_t c = 0; c < s.f; ++c) dst[step * s.f + c] = static_cast<float>(m.at(row, c));
    }
    s.y.push_back(labels.labels[label_row(e, opts.t, opts.anchor)]);
    s.anchor_ts.push_back(m.ts()[e]);
  }
  return s;
}

void export_tensors(const ExperimentDataset& ds, const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw DataError("cannot create export directory " + dir.string() + ": " + ec.message());

  for (int i = 0; i < 3; ++i) {
    const Samples& s = split_of(ds, i);
    {
      std::ofstream x(dir / (std::string(kSplits[i]) + ".x.f32"), std::ios::binary);
      if (!x) throw DataError("cannot write tensors into " + dir.string());
      for (float v : s.x) {
        const float le = to_little_endian(v);
        x.write(reinterpret_cast<const char*>(&le), sizeof le);
      }
      if (!x) throw DataError("write failed for " + std::string(kSplits[i]) + ".x.f32");
    }
    {
      std::ofstream y(dir / (std::string(kSplits[i]) + ".y.i8"), std::ios::binary);
      if (!y) throw DataError("cannot write labels into " + dir.string());
      for (int v : s.y) {
        const auto b = static_cast<std::int8_t>(v);
        y.write(reinterpret_cast<const char*>(&b), 1);
      }
      // anchor timestamps ride along so re-import is lossless
      std::ofstream a(dir / (std::string(kSplits[i]) + ".ts.i64"), std::ios::binary);
      for (std::int64_t v : s.anchor_ts) {
        const auto le = to_little_endian(v);
        a.write(reinterpret_cast<const char*>(&le), sizeof le);
      }
      if (!y || !a) throw DataError("write failed for " + std::string(kSplits[i]) + " labels");
    }
  }

  std::ofstream mf(dir / "manifest.txt");
  if (!mf) throw DataError("cannot write manifest into " + dir.string());
  mf << std::setprecision(17);
  mf << "format=lobbench-tensors-1\n"
     << "byte_order=little\n"
     << "dtype_x=float32\n"
     << "dtype_y=int8\n"
     << "n=" << ds.train.size() + ds.val.size() + ds.test.size() << '\n'
     << "train.n=" << ds.train.size() << '\n'
     << "val.n=" << ds.val.size() << '\n'
     << "test.n=" << ds.test.size() << '\n'
     << "t=" << ds.train.t << '\n'
     << "f=" << ds.train.f << '\n'
     << "classes=" << ds.meta.classes << '\n'
     << "columns=";
  for (std::size_t i = 0; i < ds.meta.columns.size(); ++i) mf << (i ? "," : "") << ds.meta.columns[i];
  mf << '\n'
     << "label_kind=" << ds.meta.label_kind << '\n'
     << "label_source=" << ds.meta.label_source << '\n'
     << "horizon_steps=" << ds.meta.horizon_steps << '\n'
     << "filter=" << ds.meta.filter << '\n'
     << "depth=" << ds.meta.depth << '\n'
     << "epsilon=" << ds.meta.epsilon << '\n'
     << "weights=" << join_doubles(ds.meta.class_weights) << '\n'
     << "seed=" << ds.meta.seed << '\n'
     << "config_hash=" << ds.meta.config_hash << '\n';
  if (!mf) throw DataError("manifest write failed");
}

std::map<std::string, std::string> read_manifest(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) throw DataError("cannot read manifest " + file.string());
  std::map<std::string, std::string> kv;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw DataError("bad manifest line: " + line);
    kv[line.substr(0, eq)] = line.substr(eq + 1);
  }
  return kv;
}

ExperimentDataset import_tensors(const std::filesystem::path& dir, const std::string& x_pattern) {
  const auto kv = read_manifest(dir / "manifest.txt");
  auto need = [&](const std::string& key) -> const std::string& {
    auto it = kv.find(key);
    if (it == kv.end()) throw DataError("manifest lacks key " + key);
    return it->second;
  };
  ExperimentDataset ds;
  ds.meta.columns = split_csv(need("columns"));
  ds.meta.classes = std::stoi(need("classes"));
  ds.meta.label_kind = need("label_kind");
  ds.meta.label_source = need("label_source");
  ds.meta.horizon_steps = std::stoi(need("horizon_steps"));
  ds.meta.filter = need("filter");
  ds.meta.depth = std::stoul(need("depth"));
  ds.meta.epsilon = std::stod(need("epsilon"));
  for (const auto& w : split_csv(need("weights"))) ds.meta.class_weights.push_back(std::stod(w));
  ds.meta.seed = std::stoull(need("seed"));
  ds.meta.config_hash = need("config_hash");
  const std::size_t t = std::stoul(need("t"));
  const std::size_t f = std::stoul(need("f"));

  for (int i = 0; i < 3; ++i) {
    const std::string split = kSplits[i];
    const std::size_t n = std::stoul(need(split + ".n"));
    Samples& s = split_of(ds, i);
    s.t = t;
    s.f = f;

    const auto x_path = dir / substitute(x_pattern, split);
    std::ifstream x(x_path, std::ios::binary | std::ios::ate);
    if (!x) throw DataError("cannot read " + x_path.string());
    const auto bytes = static_cast<std::size_t>(x.tellg());
    x.seekg(0);
    if (n > 0) {
      if (bytes % (4 * n) != 0) {
        throw DataError(x_path.string() + ": size " + std::to_string(bytes) +
                        " is not a multiple of 4*n (manifest n=" + std::to_string(n) + ")");
      }
      const std::size_t width = bytes / (4 * n);
      if (width != t * f) {
        s.t = 1;
        s.f = width;
      }
    }
    s.x.resize(bytes / 4);
    for (float& v : s.x) {
      float raw;
      x.read(reinterpret_cast<char*>(&raw), sizeof raw);
      v = to_little_endian(raw);
    }
    if (!x && bytes > 0) throw DataError("short read on " + x_path.string());

    std::ifstream y(dir / (split + ".y.i8"), std::ios::binary);
    if (!y) throw DataError("cannot read " + split + ".y.i8");
    s.y.resize(n);
    for (int& v : s.y) {
      std::int8_t b;
      y.read(reinterpret_cast<char*>(&b), 1);
      v = b;
    }
    if (!y && n > 0) throw DataError("short read on " + split + ".y.i8");

    std::ifstream a(dir / (split + ".ts.i64"), std::ios::binary);
    s.anchor_ts.assign(n, 0);
    if (a) {
      for (auto& v : s.anchor_ts) {
        std::int64_t raw;
        a.read(reinterpret_cast<char*>(&raw), sizeof raw);
        v = to_little_endian(raw);
      }
    }
  }
  return ds;
}

}  // namespace lobbench
