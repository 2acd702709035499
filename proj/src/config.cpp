#include "lobbench/config.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <set>
#include <sstream>

#include "lobbench/errors.hpp"
#include "lobbench/hashing.hpp"
#include "lobbench/matrix_io.hpp"

namespace lobbench {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

std::string bad(const std::string& key, const std::string& value, const std::string& why) {
  return "config: " + key + " = '" + value + "': " + why;
}

template <typename T>
T to_integer(const std::string& key, const std::string& v) {
  T out{};
  auto res = std::from_chars(v.data(), v.data() + v.size(), out);
  if (res.ec != std::errc() || res.ptr != v.data() + v.size()) throw ConfigError(bad(key, v, "not an integer"));
  return out;
}

double to_double(const std::string& key, const std::string& v) {
  double out = 0.0;
  auto res = std::from_chars(v.data(), v.data() + v.size(), out);
  if (res.ec != std::errc() || res.ptr != v.data() + v.size() || !std::isfinite(out)) {
    throw ConfigError(bad(key, v, "not a finite number"));
  }
  return out;
}

bool to_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "on" || v == "1") return true;
  if (v == "false" || v == "off" || v == "0") return false;
  throw ConfigError(bad(key, v, "expected true or false"));
}

template <typename F>
auto convert(const std::string& key, const std::string& v, F f) {
  try {
    return f(v);
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception& e) {
    throw ConfigError(bad(key, v, e.what()));
  }
}

std::string bool_str(bool b) { return b ? "true" : "false"; }

std::string join(const std::vector<std::string>& items) {
  std::string out;
  for (std::size_t i = 0; i < items.size(); ++i) out += (i ? "," : "") + items[i];
  return out;
}

using Setter = std::function<void(ExperimentConfig&, const std::string& key, const std::string& v)>;
using Getter = std::function<std::string(const ExperimentConfig&)>;

struct Field {
  Setter set;
  Getter get;
  bool hashed = true;
};

const std::map<std::string, Field>& fields() {
  static const std::map<std::string, Field> table = [] {
    std::map<std::string, Field> t;
    t["input"] = {[](auto& c, auto&, auto& v) { c.input = v; }, [](auto& c) { return c.input; }};
    t["data.format"] = {[](auto& c, auto& k, auto& v) {
                          if (v != "canonical" && v != "bybit") throw ConfigError(bad(k, v, "expected canonical or bybit"));
                          c.input_format = v;
                        },
                        [](auto& c) { return c.input_format; }};
    t["data.max_snapshots"] = {[](auto& c, auto& k, auto& v) { c.max_snapshots = to_integer<std::size_t>(k, v); },
                               [](auto& c) { return std::to_string(c.max_snapshots); }};
    t["data.take_before_depth_filter"] = {
        [](auto& c, auto& k, auto& v) { c.take_before_depth_filter = to_bool(k, v); },
        [](auto& c) { return bool_str(c.take_before_depth_filter); }};
    t["data.grid_ms"] = {[](auto& c, auto& k, auto& v) { c.grid_ms = to_integer<std::int64_t>(k, v); },
                         [](auto& c) { return std::to_string(c.grid_ms); }};
    t["depth"] = {[](auto& c, auto& k, auto& v) { c.depth = to_integer<std::size_t>(k, v); },
                  [](auto& c) { return std::to_string(c.depth); }};
    t["filter.kind"] = {[](auto& c, auto& k, auto& v) {
                          if (v != "raw" && v != "sg" && v != "kalman") throw ConfigError(bad(k, v, "expected raw, sg or kalman"));
                          c.filter_kind = v;
                        },
                        [](auto& c) { return c.filter_kind; }};
    t["filter.sg.half_window"] = {[](auto& c, auto& k, auto& v) { c.sg.half_window = to_integer<int>(k, v); },
                                  [](auto& c) { return std::to_string(c.sg.half_window); }};
    t["filter.sg.degree"] = {[](auto& c, auto& k, auto& v) { c.sg.degree = to_integer<int>(k, v); },
                             [](auto& c) { return std::to_string(c.sg.degree); }};
    t["filter.sg.mode"] = {[](auto& c, auto& k, auto& v) {
                             if (v == "centered") c.sg.mode = SgMode::Centered;
                             else if (v == "causal") c.sg.mode = SgMode::Causal;
                             else throw ConfigError(bad(k, v, "expected centered or causal"));
                           },
                           [](auto& c) { return std::string(c.sg.mode == SgMode::Centered ? "centered" : "causal"); }};
    t["filter.kalman.q"] = {[](auto& c, auto& k, auto& v) { c.kalman.q = to_double(k, v); },
                            [](auto& c) { return format_double(c.kalman.q); }};
    t["filter.kalman.r"] = {[](auto& c, auto& k, auto& v) { c.kalman.r = to_double(k, v); },
                            [](auto& c) { return format_double(c.kalman.r); }};
    t["filter.kalman.grid_search"] = {[](auto& c, auto& k, auto& v) { c.kalman_grid_search = to_bool(k, v); },
                                      [](auto& c) { return bool_str(c.kalman_grid_search); }};
    t["filter.kalman.scale"] = {[](auto& c, auto& k, auto& v) {
                                  if (v == "variance") c.kalman_scale = KalmanScale::Variance;
                                  else if (v == "absolute") c.kalman_scale = KalmanScale::Absolute;
                                  else throw ConfigError(bad(k, v, "expected variance or absolute"));
                                },
                                [](auto& c) {
                                  return std::string(c.kalman_scale == KalmanScale::Variance ? "variance" : "absolute");
                                }};
    t["features.raw_levels"] = {[](auto& c, auto& k, auto& v) { c.raw_levels = to_bool(k, v); },
                                [](auto& c) { return bool_str(c.raw_levels); }};
    t["features.engineered"] = {[](auto& c, auto& k, auto& v) {
                                  c.engineered.clear();
                                  if (v == "none") return;
                                  for (const auto& item : split_list(v)) {
                                    c.engineered.push_back(convert(k, item, [](const std::string& s) {
                                      return feature_from_string(s);
                                    }));
                                  }
                                },
                                [](auto& c) {
                                  std::vector<std::string> names;
                                  for (auto f : c.engineered) names.emplace_back(to_string(f));
                                  return names.empty() ? std::string("none") : join(names);
                                }};
    t["label.kind"] = {[](auto& c, auto& k, auto& v) {
                         c.label_kind = convert(k, v, [](const std::string& s) { return label_kind_from_string(s); });
                       },
                       [](auto& c) { return std::string(to_string(c.label_kind)); }};
    t["label.horizon_ms"] = {[](auto& c, auto& k, auto& v) { c.horizon_ms = to_integer<std::int64_t>(k, v); },
                             [](auto& c) { return std::to_string(c.horizon_ms); }};
    t["label.epsilon"] = {[](auto& c, auto& k, auto& v) {
                            if (v == "auto") c.epsilon.reset();
                            else c.epsilon = to_double(k, v);
                          },
                          [](auto& c) { return c.epsilon ? format_double(*c.epsilon) : std::string("auto"); }};
    t["label.source"] = {[](auto& c, auto& k, auto& v) {
                           c.label_source = convert(k, v, [](const std::string& s) { return label_source_from_string(s); });
                         },
                         [](auto& c) { return std::string(to_string(c.label_source)); }};
    t["label.tie_rule"] = {[](auto& c, auto& k, auto& v) {
                             c.tie_rule = convert(k, v, [](const std::string& s) { return tie_rule_from_string(s); });
                           },
                           [](auto& c) { return std::string(to_string(c.tie_rule)); }};
    t["window.t"] = {[](auto& c, auto& k, auto& v) { c.window_t = to_integer<std::size_t>(k, v); },
                     [](auto& c) { return std::to_string(c.window_t); }};
    t["window.anchor"] = {[](auto& c, auto& k, auto& v) {
                            c.anchor = convert(k, v, [](const std::string& s) { return window_anchor_from_string(s); });
                          },
                          [](auto& c) { return std::string(to_string(c.anchor)); }};
    t["split.train_frac"] = {[](auto& c, auto& k, auto& v) { c.split.train_frac = to_double(k, v); },
                             [](auto& c) { return format_double(c.split.train_frac); }};
    t["split.val_frac"] = {[](auto& c, auto& k, auto& v) { c.split.val_frac_of_train = to_double(k, v); },
                           [](auto& c) { return format_double(c.split.val_frac_of_train); }};
    t["model.kind"] = {[](auto& c, auto& k, auto& v) {
                         c.model = convert(k, v, [](const std::string& s) { return model_kind_from_string(s); });
                       },
                       [](auto& c) { return std::string(to_string(c.model)); }};
    t["model.epochs"] = {[](auto& c, auto& k, auto& v) { c.train.epochs = to_integer<int>(k, v); },
                         [](auto& c) { return std::to_string(c.train.epochs); }};
    t["model.l2"] = {[](auto& c, auto& k, auto& v) { c.train.l2 = to_double(k, v); },
                     [](auto& c) { return format_double(c.train.l2); }};
    t["model.rounds"] = {[](auto& c, auto& k, auto& v) { c.train.rounds = to_integer<int>(k, v); },
                         [](auto& c) { return std::to_string(c.train.rounds); }};
    t["model.max_depth"] = {[](auto& c, auto& k, auto& v) { c.train.max_depth = to_integer<int>(k, v); },
                            [](auto& c) { return std::to_string(c.train.max_depth); }};
    t["model.min_samples_leaf"] = {[](auto& c, auto& k, auto& v) { c.train.min_samples_leaf = to_integer<int>(k, v); },
                                   [](auto& c) { return std::to_string(c.train.min_samples_leaf); }};
    t["model.bins"] = {[](auto& c, auto& k, auto& v) { c.train.bins = to_integer<int>(k, v); },
                       [](auto& c) { return std::to_string(c.train.bins); }};
    t["model.lambda"] = {[](auto& c, auto& k, auto& v) { c.train.lambda = to_double(k, v); },
                         [](auto& c) { return format_double(c.train.lambda); }};
    t["model.min_child_weight"] = {[](auto& c, auto& k, auto& v) { c.train.min_child_weight = to_double(k, v); },
                                   [](auto& c) { return format_double(c.train.min_child_weight); }};
    t["model.early_stopping_rounds"] = {
        [](auto& c, auto& k, auto& v) { c.train.early_stopping_rounds = to_integer<int>(k, v); },
        [](auto& c) { return std::to_string(c.train.early_stopping_rounds); }};
    t["model.learning_rate"] = {[](auto& c, auto& k, auto& v) { c.train.learning_rate = to_double(k, v); },
                                [](auto& c) { return format_double(c.train.learning_rate); }};
    t["model.class_weights"] = {[](auto& c, auto& k, auto& v) {
                                  if (v == "inverse") c.inverse_class_weights = true;
                                  else if (v == "none") c.inverse_class_weights = false;
                                  else throw ConfigError(bad(k, v, "expected inverse or none"));
                                },
                                [](auto& c) { return std::string(c.inverse_class_weights ? "inverse" : "none"); }};
    t["model.grid"] = {[](auto& c, auto& k, auto& v) { c.use_grid = to_bool(k, v); },
                       [](auto& c) { return bool_str(c.use_grid); }};
    t["model.grid.rounds"] = {[](auto& c, auto& k, auto& v) {
                                c.grid.rounds.clear();
                                for (const auto& item : split_list(v)) c.grid.rounds.push_back(to_integer<int>(k, item));
                              },
                              [](auto& c) {
                                std::vector<std::string> s;
                                for (int r : c.grid.rounds) s.push_back(std::to_string(r));
                                return join(s);
                              }};
    t["model.grid.learning_rate"] = {[](auto& c, auto& k, auto& v) {
                                       c.grid.learning_rates.clear();
                                       for (const auto& item : split_list(v)) c.grid.learning_rates.push_back(to_double(k, item));
                                     },
                                     [](auto& c) {
                                       std::vector<std::string> s;
                                       for (double r : c.grid.learning_rates) s.push_back(format_double(r));
                                       return join(s);
                                     }};
    t["output.dir"] = {[](auto& c, auto&, auto& v) { c.output_dir = v; }, [](auto& c) { return c.output_dir; },
                       false};
    t["seed"] = {[](auto& c, auto& k, auto& v) {
                   c.seed = to_integer<std::uint64_t>(k, v);
                   c.train.seed = c.seed;
                 },
                 [](auto& c) { return std::to_string(c.seed); }};
    return t;
  }();
  return table;
}

}  // namespace

KeyValues parse_key_values(const std::string& text) {
  KeyValues kv;
  std::set<std::string> seen;
  std::istringstream in(text);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("config: line " + std::to_string(lineno) + " is not key = value");
    }
    auto key = trim(line.substr(0, eq));
    auto value = trim(line.substr(eq + 1));
    if (key.empty()) throw ConfigError("config: line " + std::to_string(lineno) + " has an empty key");
    if (!seen.insert(key).second) throw ConfigError("config: duplicate key " + key);
    kv.emplace_back(std::move(key), std::move(value));
  }
  return kv;
}

const std::vector<std::string>& config_keys() {
  static const std::vector<std::string> keys = [] {
    std::vector<std::string> k;
    for (const auto& [name, _] : fields()) k.push_back(name);
    return k;
  }();
  return keys;
}

ExperimentConfig config_from_key_values(const KeyValues& kv, ExperimentConfig base) {
  const auto& table = fields();
  for (const auto& [key, value] : kv) {
    auto it = table.find(key);
    if (it == table.end()) throw ConfigError("config: unknown key " + key);
    it->second.set(base, key, value);
  }
  return base;
}

ExperimentConfig parse_config(const std::string& text) {
  auto cfg = config_from_key_values(parse_key_values(text));
  cfg.validate();
  return cfg;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config: cannot read " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

void ExperimentConfig::validate() const {
  if (input.empty()) throw ConfigError("config: input is required");
  if (grid_ms < 0) throw ConfigError("config: data.grid_ms must be >= 0");
  if (depth == 0) throw ConfigError("config: depth must be >= 1");
  if (filter_kind == "sg") sg.validate();
  if (filter_kind == "kalman") kalman.validate();
  feature_spec().validate();
  label_scheme().validate();
  if (horizon_ms <= 0) throw ConfigError("config: label.horizon_ms must be positive");
  horizon();
  if (epsilon && *epsilon < 0.0) throw ConfigError("config: label.epsilon must be >= 0");
  if (window_t == 0) throw ConfigError("config: window.t must be >= 1");
  split.validate();
  train.validate();
  if (use_grid) {
    if (grid.rounds.empty() || grid.learning_rates.empty()) {
      throw ConfigError("config: model.grid axes must be non-empty");
    }
    for (int r : grid.rounds) {
      if (r < 1) throw ConfigError("config: model.grid.rounds entries must be >= 1");
    }
    for (double lr : grid.learning_rates) {
      if (!(lr >= 0.0)) throw ConfigError("config: model.grid.learning_rate entries must be >= 0");
    }
  }
}

FilterKind ExperimentConfig::filter() const {
  if (filter_kind == "sg") return FilterKind::savitzky_golay(sg);
  if (filter_kind == "kalman") {
    return FilterKind::kalman({kalman, kalman_scale == KalmanScale::Variance, kalman_grid_search});
  }
  return FilterKind::raw();
}

FeatureSpec ExperimentConfig::feature_spec() const {
  FeatureSpec spec;
  spec.depth = depth;
  spec.include_raw_levels = raw_levels;
  spec.engineered = engineered;
  return spec;
}

LabelScheme ExperimentConfig::label_scheme() const {
  LabelScheme s;
  s.kind = label_kind;
  s.epsilon = epsilon.value_or(0.0);
  s.source = label_source;
  s.tie_rule = tie_rule;
  return s;
}

Horizon ExperimentConfig::horizon() const {
  try {
    return Horizon::from_ms(horizon_ms, grid_ms == 0 ? 100 : grid_ms);
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception& e) {
    throw ConfigError(std::string("config: label.horizon_ms: ") + e.what());
  }
}

WindowOptions ExperimentConfig::window_options() const {
  return {window_t, grid_ms, anchor};
}

std::string ExperimentConfig::canonical() const {
  std::string out;
  for (const auto& [key, field] : fields()) {
    if (!field.hashed) continue;
    out += key + " = " + field.get(*this) + "\n";
  }
  return out;
}

std::string ExperimentConfig::content_hash() const { return sha256_hex(canonical()); }

MatrixSpec parse_matrix(const std::string& text) {
  MatrixSpec spec;
  for (auto& [key, value] : parse_key_values(text)) {
    if (key.rfind("matrix.", 0) == 0) {
      auto axis = key.substr(7);
      if (fields().count(axis) == 0) throw ConfigError("config: unknown matrix axis " + axis);
      auto values = split_list(value);
      if (values.empty()) throw ConfigError("config: matrix axis " + axis + " has no values");
      spec.axes.emplace_back(std::move(axis), std::move(values));
    } else {
      spec.base.emplace_back(std::move(key), std::move(value));
    }
  }
  for (const auto& [axis, _] : spec.axes) {
    for (const auto& [key, __] : spec.base) {
      if (key == axis) throw ConfigError("config: " + axis + " is both a fixed key and a matrix axis");
    }
  }
  return spec;
}

std::vector<ExperimentConfig> MatrixSpec::expand() const {
  const auto base_cfg = config_from_key_values(base);
  std::vector<ExperimentConfig> out;
  std::vector<std::size_t> idx(axes.size(), 0);
  while (true) {
    KeyValues overrides;
    for (std::size_t a = 0; a < axes.size(); ++a) overrides.emplace_back(axes[a].first, axes[a].second[idx[a]]);
    auto cfg = config_from_key_values(overrides, base_cfg);
    cfg.validate();
    out.push_back(std::move(cfg));
    std::size_t a = axes.size();
    while (a > 0) {
      --a;
      if (++idx[a] < axes[a].second.size()) break;
      idx[a] = 0;
      if (a == 0) return out;
    }
    if (axes.empty()) return out;
  }
}

}  // namespace lobbench
