#include <bit>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <map>
#include <sstream>

#include "lobbench/errors.hpp"
#include "lobbench/model.hpp"

namespace lobbench {

namespace {

constexpr const char* kMagic = "lobbench-model";
constexpr int kVersion = 1;

static_assert(std::endian::native == std::endian::little,
              "model payload assumes a little-endian host");

class Writer {
 public:
  template <typename T>
  void put(T v) {
    char b[sizeof(T)];
    std::memcpy(b, &v, sizeof(T));
    out_.append(b, sizeof(T));
  }
  std::string take() { return std::move(out_); }

 private:
  std::string out_;
};

class Reader {
 public:
  explicit Reader(std::string_view in) : in_(in) {}
  template <typename T>
  T get() {
    if (pos_ + sizeof(T) > in_.size()) throw DataError("model payload truncated");
    T v;
    std::memcpy(&v, in_.data() + pos_, sizeof(T));
    pos_ += sizeof(T);
    return v;
  }
  bool done() const { return pos_ == in_.size(); }

 private:
  std::string_view in_;
  std::size_t pos_ = 0;
};

std::string payload(const LogisticModel& m) {
  Writer w;
  for (double v : m.weights) w.put(v);
  return w.take();
}

std::string payload(const GbdtModel& m) {
  Writer w;
  for (double v : m.base_score) w.put(v);
  w.put(static_cast<std::int32_t>(m.best_round));
  w.put(static_cast<std::int32_t>(m.rounds.size()));
  for (const auto& round : m.rounds) {
    for (const auto& tree : round) {
      w.put(static_cast<std::int32_t>(tree.nodes.size()));
      for (const auto& n : tree.nodes) {
        w.put(n.feature);
        w.put(n.left);
        w.put(n.right);
        w.put(n.threshold);
        w.put(n.value);
      }
    }
  }
  w.put(static_cast<std::int32_t>(m.val_loss.size()));
  for (double v : m.val_loss) w.put(v);
  return w.take();
}

}  // namespace

std::string serialize_model(const Model& m, const TrainConfig& cfg) {
  const std::string body = std::visit([](const auto& v) { return payload(v); }, m);
  std::ostringstream h;
  h << std::setprecision(17);
  h << kMagic << ' ' << kVersion << '\n';
  h << "kind=" << to_string(kind_of(m)) << '\n';
  std::visit(
      [&](const auto& v) {
        h << "classes=" << v.classes << '\n' << "features=" << v.features << '\n';
      },
      m);
  if (const auto* g = std::get_if<GbdtModel>(&m)) {
    h << "learning_rate=" << g->learning_rate << '\n'
      << "rounds_built=" << g->rounds.size() << '\n'
      << "best_round=" << g->best_round << '\n'
      << "max_depth=" << cfg.max_depth << '\n'
      << "min_samples_leaf=" << cfg.min_samples_leaf << '\n'
      << "bins=" << cfg.bins << '\n'
      << "lambda=" << cfg.lambda << '\n'
      << "early_stopping_rounds=" << cfg.early_stopping_rounds << '\n';
  } else {
    h << "learning_rate=" << cfg.learning_rate << '\n'
      << "epochs=" << cfg.epochs << '\n'
      << "l2=" << cfg.l2 << '\n';
  }
  h << "class_weights=";
  for (std::size_t i = 0; i < cfg.class_weights.size(); ++i) h << (i ? "," : "") << cfg.class_weights[i];
  h << '\n' << "seed=" << cfg.seed << '\n';
  h << "payload_bytes=" << body.size() << '\n' << "---\n";
  return h.str() + body;
}

void save_model(const Model& m, const TrainConfig& cfg, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write model file " + path.string());
  const auto bytes = serialize_model(m, cfg);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw DataError("write failed for model file " + path.string());
}

Model deserialize_model(const std::string& bytes) {
  const std::string sep = "\n---\n";
  const auto cut = bytes.find(sep);
  if (cut == std::string::npos) throw DataError("model file lacks header terminator");
  std::istringstream header(bytes.substr(0, cut + 1));
  std::string magic;
  int version = 0;
  header >> magic >> version;
  if (magic != kMagic) throw DataError("not a lobbench model file");
  if (version != kVersion) throw DataError("unsupported model version " + std::to_string(version));
  std::map<std::string, std::string> kv;
  std::string line;
  std::getline(header, line);
  while (std::getline(header, line)) {
    const auto eq = line.find('=');
    if (eq != std::string::npos) kv[line.substr(0, eq)] = line.substr(eq + 1);
  }
  auto need = [&](const std::string& k) -> const std::string& {
    auto it = kv.find(k);
    if (it == kv.end()) throw DataError("model header lacks " + k);
    return it->second;
  };
  const std::string_view body(bytes.data() + cut + sep.size(), bytes.size() - cut - sep.size());
  if (std::stoul(need("payload_bytes")) != body.size()) throw DataError("model payload size mismatch");
  Reader r(body);
  const int classes = std::stoi(need("classes"));
  const int features = std::stoi(need("features"));
  const auto kind = model_kind_from_string(need("kind"));
  if (classes < 2 || features < 0) throw DataError("bad model dimensions");

  if (kind == ModelKind::Logistic) {
    auto m = LogisticModel::zeros(classes, features);
    for (double& v : m.weights) v = r.get<double>();
    if (!r.done()) throw DataError("trailing bytes in model payload");
    return m;
  }
  GbdtModel m;
  m.classes = classes;
  m.features = features;
  m.learning_rate = std::stod(need("learning_rate"));
  m.base_score.resize(static_cast<std::size_t>(classes));
  for (double& v : m.base_score) v = r.get<double>();
  m.best_round = r.get<std::int32_t>();
  const auto n_rounds = r.get<std::int32_t>();
  if (n_rounds < 0 || m.best_round < 0 || m.best_round > n_rounds) throw DataError("bad round counts");
  m.rounds.resize(static_cast<std::size_t>(n_rounds));
  for (auto& round : m.rounds) {
    round.resize(static_cast<std::size_t>(classes));
    for (auto& tree : round) {
      const auto n_nodes = r.get<std::int32_t>();
      if (n_nodes < 1) throw DataError("empty tree in model payload");
      tree.nodes.resize(static_cast<std::size_t>(n_nodes));
      for (auto& n : tree.nodes) {
        n.feature = r.get<std::int32_t>();
        n.left = r.get<std::int32_t>();
        n.right = r.get<std::int32_t>();
        n.threshold = r.get<double>();
        n.value = r.get<double>();
        if (n.feature >= features) throw DataError("tree split feature out of range");
        if (n.feature >= 0 && (n.left <= 0 || n.right <= 0 || n.left >= n_nodes || n.right >= n_nodes)) {
          throw DataError("tree child index out of range");
        }
      }
    }
  }
  const auto n_loss = r.get<std::int32_t>();
  m.val_loss.resize(static_cast<std::size_t>(std::max(n_loss, 0)));
  for (double& v : m.val_loss) v = r.get<double>();
  if (!r.done()) throw DataError("trailing bytes in model payload");
  return m;
}

Model load_model(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot read model file " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return deserialize_model(ss.str());
}

}  // namespace lobbench
