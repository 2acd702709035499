#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "lobbench/config.hpp"
#include "lobbench/errors.hpp"
#include "lobbench/matrix_io.hpp"
#include "lobbench/pipeline.hpp"
#include "lobbench/synth.hpp"

using namespace lobbench;
namespace fs = std::filesystem;

namespace {

// Flags shared by the standalone stage commands are collected as config
// key/value overrides so they validate exactly like a config file.
struct Overrides {
  KeyValues kv;
  std::string config_file;

  ExperimentConfig build() const {
    ExperimentConfig base;
    if (!config_file.empty()) {
      if (!fs::is_regular_file(config_file)) throw ConfigError("cannot read config " + config_file);
      base = config_from_key_values(parse_key_values(read_text_file(config_file)));
    }
    return config_from_key_values(kv, base);
  }
};

void add_key_option(CLI::App* cmd, Overrides& ov, const std::string& flag, const std::string& key,
                    const std::string& help) {
  cmd->add_option_function<std::string>(
      flag, [&ov, key](const std::string& v) { ov.kv.emplace_back(key, v); }, help + " (" + key + ")");
}

void add_filter_options(CLI::App* cmd, Overrides& ov) {
  add_key_option(cmd, ov, "--kind", "filter.kind", "raw, sg or kalman");
  add_key_option(cmd, ov, "--sg-half-window", "filter.sg.half_window", "SG half window m");
  add_key_option(cmd, ov, "--sg-degree", "filter.sg.degree", "SG polynomial degree");
  add_key_option(cmd, ov, "--sg-mode", "filter.sg.mode", "centered or causal");
  add_key_option(cmd, ov, "--kalman-q", "filter.kalman.q", "process noise");
  add_key_option(cmd, ov, "--kalman-r", "filter.kalman.r", "observation noise");
  add_key_option(cmd, ov, "--kalman-grid", "filter.kalman.grid_search", "grid-search q and r");
  add_key_option(cmd, ov, "--kalman-scale", "filter.kalman.scale", "variance or absolute");
}

void add_train_options(CLI::App* cmd, Overrides& ov) {
  add_key_option(cmd, ov, "--model", "model.kind", "logistic or gbdt");
  add_key_option(cmd, ov, "--epochs", "model.epochs", "gradient descent steps");
  add_key_option(cmd, ov, "--l2", "model.l2", "L2 penalty");
  add_key_option(cmd, ov, "--rounds", "model.rounds", "boosting rounds");
  add_key_option(cmd, ov, "--max-depth", "model.max_depth", "tree depth");
  add_key_option(cmd, ov, "--min-samples-leaf", "model.min_samples_leaf", "minimum rows per leaf");
  add_key_option(cmd, ov, "--bins", "model.bins", "histogram bins");
  add_key_option(cmd, ov, "--lambda", "model.lambda", "leaf L2 penalty");
  add_key_option(cmd, ov, "--learning-rate", "model.learning_rate", "step size or shrinkage");
  add_key_option(cmd, ov, "--early-stopping", "model.early_stopping_rounds", "patience in rounds");
  add_key_option(cmd, ov, "--class-weights", "model.class_weights", "inverse or none");
  add_key_option(cmd, ov, "--seed", "seed", "random seed");
}

std::ostream& open_out(const std::string& path, std::ofstream& file) {
  if (path.empty() || path == "-") return std::cout;
  file.open(path, std::ios::binary);
  if (!file) throw DataError("cannot write " + path);
  return file;
}

FeatureMatrix read_matrix_arg(const std::string& path) {
  if (path == "-") return read_matrix_csv(std::cin);
  return load_matrix_csv(path);
}

LabelSet labels_from_rows(const LabelRows& rows, int classes) {
  LabelSet ls;
  ls.labels = rows.labels;
  ls.returns = rows.returns;
  ls.valid.resize(rows.labels.size());
  ls.class_counts.assign(static_cast<std::size_t>(classes), 0);
  for (std::size_t i = 0; i < rows.labels.size(); ++i) {
    const int y = rows.labels[i];
    ls.valid[i] = y != label::kInvalid;
    if (y >= classes) throw DataError("label " + std::to_string(y) + " out of range");
    if (ls.valid[i]) ++ls.class_counts[static_cast<std::size_t>(y)];
  }
  ls.scheme.kind = classes == 2 ? LabelKind::Binary : LabelKind::Ternary;
  return ls;
}

std::optional<RowRange> parse_rows(const std::string& spec) {
  if (spec.empty()) return std::nullopt;
  const auto colon = spec.find(':');
  if (colon == std::string::npos) throw ConfigError("row range must look like begin:end");
  try {
    return RowRange{std::stoul(spec.substr(0, colon)), std::stoul(spec.substr(colon + 1))};
  } catch (const std::exception&) {
    throw ConfigError("row range must look like begin:end");
  }
}

void print_report(const MetricsReport& r, const std::string& model) {
  std::cout << metrics_markdown(r, model);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Limit order book benchmark: ingest, filter, label, train and evaluate"};
  app.require_subcommand(1);
  Overrides ov;

  // ingest
  auto* ingest = app.add_subcommand("ingest", "parse snapshots into a depth-k level matrix CSV");
  std::string in_path, out_path, report_path;
  add_key_option(ingest, ov, "--depth", "depth", "levels per side");
  add_key_option(ingest, ov, "--format", "data.format", "canonical or bybit");
  add_key_option(ingest, ov, "--max-snapshots", "data.max_snapshots", "record limit, 0 for all");
  add_key_option(ingest, ov, "--take-before-depth-filter", "data.take_before_depth_filter",
                 "count the limit before depth rejection");
  ingest->add_option("--input,-i", in_path, "snapshot NDJSON")->required();
  ingest->add_option("--out,-o", out_path, "level matrix CSV (stdout when omitted)");
  ingest->add_option("--report", report_path, "coverage CSV");

  // filter
  auto* filter = app.add_subcommand("filter", "smooth every column of a matrix CSV");
  std::string calib_rows;
  add_filter_options(filter, ov);
  filter->add_option("--in,-i", in_path, "matrix CSV")->required();
  filter->add_option("--out,-o", out_path, "filtered CSV");
  filter->add_option("--calibration-rows", calib_rows, "begin:end rows for Kalman calibration");

  // features
  auto* features = app.add_subcommand("features", "derive model features from a level matrix");
  add_key_option(features, ov, "--depth", "depth", "levels per side");
  add_key_option(features, ov, "--raw-levels", "features.raw_levels", "keep raw level columns");
  add_key_option(features, ov, "--engineered", "features.engineered", "comma list or none");
  features->add_option("--in,-i", in_path, "level matrix CSV")->required();
  features->add_option("--out,-o", out_path, "feature CSV");

  // label
  auto* label = app.add_subcommand("label", "label mid-price moves of a level matrix");
  add_key_option(label, ov, "--kind", "label.kind", "binary or ternary");
  add_key_option(label, ov, "--horizon-ms", "label.horizon_ms", "prediction horizon");
  add_key_option(label, ov, "--epsilon", "label.epsilon", "flat band, or auto");
  add_key_option(label, ov, "--tie-rule", "label.tie_rule", "up, down or drop");
  add_key_option(label, ov, "--grid-ms", "data.grid_ms", "sampling grid, 0 disables gap checks");
  std::string tune_rows;
  label->add_option("--in,-i", in_path, "level matrix CSV")->required();
  label->add_option("--out,-o", out_path, "labels CSV");
  label->add_option("--tune-rows", tune_rows, "begin:end rows used to tune epsilon");

  // windows
  auto* windows = app.add_subcommand("windows", "assemble T-step windows from features and labels");
  std::string labels_path;
  add_key_option(windows, ov, "--t", "window.t", "window length");
  add_key_option(windows, ov, "--anchor", "window.anchor", "last or first");
  add_key_option(windows, ov, "--grid-ms", "data.grid_ms", "sampling grid");
  add_key_option(windows, ov, "--horizon-ms", "label.horizon_ms", "horizon used to build the labels");
  windows->add_option("--features,-f", in_path, "feature CSV")->required();
  windows->add_option("--labels,-l", labels_path, "labels CSV")->required();
  windows->add_option("--out,-o", out_path, "window CSV");

  // train
  auto* train = app.add_subcommand("train", "train on exported tensors (or embeddings)");
  std::string tensors_dir, x_pattern = "{split}.x.f32", out_dir;
  add_train_options(train, ov);
  train->add_option("--tensors,-t", tensors_dir, "directory written by export")->required();
  train->add_option("--x-pattern", x_pattern, "feature file per split, {split} is substituted");
  train->add_option("--out,-o", out_dir, "output directory")->required();

  // predict
  auto* predict = app.add_subcommand("predict", "apply a saved model to an exported split");
  std::string model_path, split_name = "test";
  predict->add_option("--model,-m", model_path, "model.bin")->required();
  predict->add_option("--tensors,-t", tensors_dir, "export directory")->required();
  predict->add_option("--x-pattern", x_pattern, "feature file per split");
  predict->add_option("--split", split_name, "train, val or test")->check(CLI::IsMember({"train", "val", "test"}));
  predict->add_option("--out,-o", out_path, "predictions CSV");

  // evaluate
  auto* evaluate = app.add_subcommand("evaluate", "metrics from a predictions CSV");
  std::string model_name = "model";
  evaluate->add_option("--predictions,-p", in_path, "predictions CSV")->required();
  evaluate->add_option("--model-name", model_name, "model column in metrics.csv");
  evaluate->add_option("--out,-o", out_path, "metrics CSV");

  // synth
  auto* synth = app.add_subcommand("synth", "generate a synthetic snapshot stream");
  SynthConfig sc;
  synth->add_option("--seed", sc.seed, "random seed")->capture_default_str();
  synth->add_option("--n", sc.n, "grid steps")->capture_default_str();
  synth->add_option("--depth", sc.depth, "levels per side")->capture_default_str();
  synth->add_option("--tick-size", sc.tick_size, "price tick")->capture_default_str();
  synth->add_option("--base-price", sc.base_price, "starting mid")->capture_default_str();
  synth->add_option("--signal-strength", sc.signal_strength, "planted sign-match probability")->capture_default_str();
  synth->add_option("--noise-sigma", sc.noise_sigma, "level-1 quantity jitter")->capture_default_str();
  synth->add_option("--flicker-rate", sc.flicker_rate, "probability a level vanishes")->capture_default_str();
  synth->add_option("--gap-rate", sc.gap_rate, "probability a timestamp is skipped")->capture_default_str();
  synth->add_option("--missing-level-rate", sc.missing_level_rate, "probability of a null level")->capture_default_str();
  synth->add_option("--horizon-steps", sc.horizon_steps, "signal horizon in steps")->capture_default_str();
  synth->add_option("--switch-prob", sc.switch_prob, "regime flip probability")->capture_default_str();
  synth->add_option("--volatility-ticks", sc.volatility_ticks, "per-step diffusion in ticks")->capture_default_str();
  synth->add_option("--imbalance-amplitude", sc.imbalance_amplitude, "clean imbalance level")->capture_default_str();
  synth->add_option("--start-ts", sc.start_ts, "first timestamp (ms)")->capture_default_str();
  synth->add_option("--grid-ms", sc.grid_ms, "step in ms")->capture_default_str();
  synth->add_option("--out,-o", out_path, "NDJSON output");

  // export
  auto* exp = app.add_subcommand("export", "write train/val/test tensors for external trainers");
  exp->add_option("--config,-c", ov.config_file, "experiment config")->required();
  exp->add_option("--out,-o", out_dir, "output directory")->required();

  // run
  auto* run = app.add_subcommand("run", "run one experiment end to end");
  std::string output_override;
  run->add_option("--config,-c", ov.config_file, "experiment config")->required();
  run->add_option("--output-dir", output_override, "override output.dir");

  // matrix
  auto* matrix = app.add_subcommand("matrix", "run an experiment matrix and emit combined tables");
  bool no_cache = false;
  matrix->add_option("--config,-c", ov.config_file, "matrix config")->required();
  matrix->add_option("--output-dir", output_override, "override output.dir");
  matrix->add_flag("--no-cache", no_cache, "recompute shared stages for every cell");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : exit_code::kConfig;
  }

  try {
    if (*ingest) {
      auto cfg = ov.build();
      IngestOptions opts;
      opts.depth = cfg.depth;
      opts.max_records = cfg.max_snapshots;
      opts.take_before_depth_filter = cfg.take_before_depth_filter;
      if (cfg.input_format == "bybit") opts.converter = bybit_snapshot_converter;
      auto res = run_stage("ingest", [&] { return ingest_file(in_path, opts); });
      const auto rep = coverage_report(res.stats);
      std::cerr << rep.text;
      if (!report_path.empty()) write_text_file(report_path, rep.csv);
      std::ofstream f;
      write_matrix_csv(frames_to_matrix(res.frames), open_out(out_path, f));
    } else if (*filter) {
      auto cfg = ov.build();
      const auto m = run_stage("filter", [&] { return read_matrix_arg(in_path); });
      auto out = run_stage("filter", [&] { return apply_filter_detailed(m, cfg.filter(), parse_rows(calib_rows)); });
      for (const auto& p : out.kalman_params) {
        std::cerr << p.column << " q=" << format_double(p.q) << " r=" << format_double(p.r) << '\n';
      }
      std::ofstream f;
      write_matrix_csv(out.matrix, open_out(out_path, f));
    } else if (*features) {
      auto cfg = ov.build();
      const auto m = run_stage("features", [&] { return read_matrix_arg(in_path); });
      auto out = run_stage("features", [&] { return derive_features(m, cfg.feature_spec()); });
      std::ofstream f;
      write_matrix_csv(out, open_out(out_path, f));
    } else if (*label) {
      auto cfg = ov.build();
      const auto m = run_stage("labels", [&] { return read_matrix_arg(in_path); });
      auto labels = run_stage("labels", [&] {
        const auto mids = mid_series(m);
        const auto returns = horizon_returns(mids, m.ts(), cfg.horizon(), cfg.grid_ms);
        LabelScheme scheme = cfg.label_scheme();
        if (scheme.kind == LabelKind::Ternary && !cfg.epsilon) {
          const auto rows = parse_rows(tune_rows).value_or(RowRange{0, returns.size()});
          if (rows.end > returns.size() || rows.empty()) throw ConfigError("--tune-rows out of range");
          const std::vector<double> part(returns.begin() + static_cast<std::ptrdiff_t>(rows.begin),
                                         returns.begin() + static_cast<std::ptrdiff_t>(rows.end));
          scheme.epsilon = tune_epsilon(part).epsilon;
          std::cerr << "epsilon " << format_double(scheme.epsilon) << '\n';
        }
        return make_labels(returns, scheme, cfg.horizon());
      });
      std::ofstream f;
      write_labels_csv(m.ts(), labels, open_out(out_path, f));
    } else if (*windows) {
      auto cfg = ov.build();
      const auto m = run_stage("windows", [&] { return read_matrix_arg(in_path); });
      const auto rows = run_stage("windows", [&] {
        std::istringstream in(read_text_file(labels_path));
        return read_labels_csv(in);
      });
      if (rows.ts != m.ts()) throw StageError("windows", "labels and features have different timestamps", exit_code::kData);
      int classes = 2;
      for (int y : rows.labels) classes = std::max(classes, y + 1);
      const auto ls = labels_from_rows(rows, classes);
      const auto opts = cfg.window_options();
      const auto wins = run_stage("windows", [&] { return make_windows(m, ls, opts); });
      std::ofstream f;
      auto& os = open_out(out_path, f);
      os << "ts,label";
      for (std::size_t s = 0; s < opts.t; ++s) {
        for (const auto& n : m.names()) os << ',' << n << '@' << s;
      }
      os << '\n';
      for (const auto& w : wins) {
        os << w.anchor_ts << ',' << w.label;
        for (double v : w.rows) os << ',' << format_double(v);
        os << '\n';
      }
    } else if (*train) {
      auto cfg = ov.build();
      cfg.train.seed = cfg.seed;
      cfg.train.validate();
      auto ds = run_stage("train", [&] { return import_tensors(tensors_dir, x_pattern); });
      const int classes = ds.meta.classes;
      TrainConfig tc = cfg.train;
      if (cfg.inverse_class_weights) tc.class_weights = class_weights(ds.train.class_counts(classes)).weights;
      MetricsReport report;
      Model model;
      run_stage("train", [&] {
        time_phase(Phase::Train, [&] { model = train_model(cfg.model, ds.train, ds.val, tc, classes); }, report);
      });
      Prediction pred;
      const double train_s = report.train_seconds;
      time_phase(Phase::Infer, [&] { pred = predict_proba(model, ds.test); }, report, ds.test.size());
      const double infer = report.infer_ms_per_1k;
      const auto cm = run_stage("evaluate", [&] { return confusion(ds.test.y, pred.argmax(), classes); });
      report = metrics(cm);
      report.train_seconds = train_s;
      report.infer_ms_per_1k = infer;
      fs::create_directories(out_dir);
      const std::string name = to_string(cfg.model);
      write_text_file(fs::path(out_dir) / "metrics.csv", metrics_csv_header() + metrics_csv_rows(report, name));
      write_text_file(fs::path(out_dir) / "metrics.md", metrics_markdown(report, name));
      write_text_file(fs::path(out_dir) / "confusion.csv", confusion_csv(cm));
      save_model(model, tc, fs::path(out_dir) / "model.bin");
      std::ostringstream preds;
      write_predictions_csv(make_prediction_rows(ds.test.anchor_ts, ds.test.y, pred), preds);
      write_text_file(fs::path(out_dir) / "predictions.csv", preds.str());
      print_report(report, name);
    } else if (*predict) {
      const auto model = run_stage("predict", [&] { return load_model(model_path); });
      auto ds = run_stage("predict", [&] { return import_tensors(tensors_dir, x_pattern); });
      const Samples& s = split_name == "train" ? ds.train : split_name == "val" ? ds.val : ds.test;
      const auto expected = std::visit([](const auto& m) { return static_cast<std::size_t>(m.features); }, model);
      if (s.width() != expected) {
        throw StageError("predict", "model expects " + std::to_string(expected) + " features, tensors have " +
                                        std::to_string(s.width()), exit_code::kData);
      }
      const auto pred = predict_proba(model, s);
      std::ofstream f;
      write_predictions_csv(make_prediction_rows(s.anchor_ts, s.y, pred), open_out(out_path, f));
    } else if (*evaluate) {
      const auto rows = run_stage("evaluate", [&] {
        std::istringstream in(read_text_file(in_path));
        return read_predictions_csv(in);
      });
      const auto cm = run_stage("evaluate", [&] { return confusion(rows.labels, rows.predicted, rows.classes); });
      const auto report = metrics(cm);
      std::ofstream f;
      open_out(out_path, f) << metrics_csv_header() << metrics_csv_rows(report, model_name);
    } else if (*synth) {
      run_stage("synth", [&] { sc.validate(); });
      std::ofstream f;
      auto& os = open_out(out_path, f);
      run_stage("synth", [&] { write_ndjson(sc, os); });
    } else if (*exp) {
      auto cfg = run_stage("config", [&] {
        auto c = ov.build();
        c.validate();
        return c;
      });
      const auto data = export_experiment(cfg, out_dir);
      std::cerr << "exported " << data.dataset.train.size() << '/' << data.dataset.val.size() << '/'
                << data.dataset.test.size() << " windows to " << out_dir << '\n';
    } else if (*run) {
      auto cfg = run_stage("config", [&] {
        auto c = ov.build();
        if (!output_override.empty()) c.output_dir = output_override;
        c.validate();
        return c;
      });
      const auto r = run_experiment(cfg);
      std::cout << "experiment " << r.experiment_id << " -> " << r.dir.string() << "\n\n";
      print_report(r.report, to_string(cfg.model));
    } else if (*matrix) {
      auto cells = run_stage("config", [&] {
        if (!fs::is_regular_file(ov.config_file)) throw ConfigError("cannot read config " + ov.config_file);
        auto spec = parse_matrix(read_text_file(ov.config_file));
        if (!output_override.empty()) spec.base.emplace_back("output.dir", output_override);
        return spec.expand();
      });
      const fs::path dir = cells.front().output_dir;
      const auto res = run_matrix(cells, dir, !no_cache);
      std::cout << read_text_file(dir / "tables.md");
      std::cerr << cells.size() - res.failed << '/' << cells.size() << " cells completed; ingest ran "
                << res.counters.ingest << "x, filter " << res.counters.filter << "x\n";
      return res.exit_code();
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return exit_code_for(e);
  }
  return exit_code::kOk;
}
