#include "lobbench/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "lobbench/errors.hpp"
#include "lobbench/hashing.hpp"
#include "lobbench/matrix_io.hpp"

namespace lobbench {

namespace {

std::string ingest_key(const ExperimentConfig& c) {
  std::ostringstream os;
  os << c.input << '\n' << c.input_format << '\n' << c.max_snapshots << '\n'
     << c.take_before_depth_filter << '\n' << c.depth;
  return sha256_hex(os.str());
}

std::string feature_key(const ExperimentConfig& c, const std::string& ingest, RowRange calib) {
  KeyValues kv = parse_key_values(c.canonical());
  std::ostringstream os;
  os << ingest << '\n';
  for (const auto& [k, v] : kv) {
    if (k.rfind("filter.", 0) == 0 || k.rfind("features.", 0) == 0) os << k << '=' << v << '\n';
  }
  if (c.filter_kind == "kalman") os << "calib=" << calib.begin << ':' << calib.end << '\n';
  return sha256_hex(os.str());
}

std::shared_ptr<const PipelineCache::IngestEntry> run_ingest(const ExperimentConfig& cfg,
                                                             PipelineCache* cache) {
  const auto key = ingest_key(cfg);
  if (cache) {
    auto it = cache->ingest.find(key);
    if (it != cache->ingest.end()) return it->second;
  }
  auto entry = std::make_shared<PipelineCache::IngestEntry>();
  IngestOptions opts;
  opts.depth = cfg.depth;
  opts.max_records = cfg.max_snapshots;
  opts.take_before_depth_filter = cfg.take_before_depth_filter;
  if (cfg.input_format == "bybit") opts.converter = bybit_snapshot_converter;
  const std::string bytes = read_text_file(cfg.input);
  entry->input_sha256 = sha256_hex(bytes);
  std::istringstream in(bytes);
  auto res = ingest_stream(in, opts);
  entry->frames = std::move(res.frames);
  entry->stats = res.stats;
  if (entry->frames.empty()) throw DataError("no snapshot survived ingest at depth " + std::to_string(cfg.depth));
  if (cache) {
    ++cache->counters.ingest;
    cache->ingest[key] = entry;
  }
  return entry;
}

std::shared_ptr<const PipelineCache::FeatureEntry> run_features(const ExperimentConfig& cfg,
                                                                const FeatureMatrix& levels,
                                                                const std::string& ingest,
                                                                RowRange calib, PipelineCache* cache) {
  const auto key = feature_key(cfg, ingest, calib);
  if (cache) {
    auto it = cache->features.find(key);
    if (it != cache->features.end()) return it->second;
  }
  auto entry = std::make_shared<PipelineCache::FeatureEntry>();
  auto filtered = run_stage("filter", [&] { return apply_filter_detailed(levels, cfg.filter(), calib); });
  if (cache) ++cache->counters.filter;
  entry->kalman_params = std::move(filtered.kalman_params);
  entry->levels_filtered = std::move(filtered.matrix);
  entry->features = run_stage("features", [&] { return derive_features(entry->levels_filtered, cfg.feature_spec()); });
  if (cache) {
    ++cache->counters.features;
    cache->features[key] = entry;
  }
  return entry;
}

// Rows past the current one that a filtered value depends on.
std::size_t filter_lookahead(const ExperimentConfig& c) {
  if (c.filter_kind == "sg" && c.sg.mode == SgMode::Centered) return static_cast<std::size_t>(c.sg.half_window);
  return 0;
}

// Windows whose features or label read a row at or after `limit_row` are dropped.
std::vector<std::size_t> purge(const std::vector<std::size_t>& ends, std::size_t limit_row,
                               const WindowOptions& opts, Horizon h, std::size_t lookahead,
                               std::size_t& purged) {
  std::vector<std::size_t> kept;
  for (std::size_t e : ends) {
    const std::size_t reach =
        std::max(e, label_row(e, opts.t, opts.anchor) + static_cast<std::size_t>(h.steps)) + lookahead;
    if (reach >= limit_row) {
      ++purged;
    } else {
      kept.push_back(e);
    }
  }
  return kept;
}

std::vector<std::size_t> slice(const std::vector<std::size_t>& v, RowRange r) {
  return {v.begin() + static_cast<std::ptrdiff_t>(r.begin), v.begin() + static_cast<std::ptrdiff_t>(r.end)};
}

std::string join_doubles(const std::vector<double>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) out += (i ? "," : "") + format_double(v[i]);
  return out;
}

}  // namespace

int exit_code_for(const std::exception& e) {
  if (const auto* s = dynamic_cast<const StageError*>(&e)) return s->exit_code();
  if (dynamic_cast<const ConfigError*>(&e)) return exit_code::kConfig;
  if (dynamic_cast<const TrainingDivergence*>(&e)) return exit_code::kDivergence;
  return exit_code::kData;
}

PreparedData prepare_dataset(const ExperimentConfig& cfg, PipelineCache* cache) {
  run_stage("config", [&] { cfg.validate(); });
  PreparedData out;
  const auto ingest = run_stage("ingest", [&] { return run_ingest(cfg, cache); });
  out.stats = ingest->stats;
  out.input_sha256 = ingest->input_sha256;

  const FeatureMatrix levels = run_stage("features", [&] { return frames_to_matrix(ingest->frames); });
  out.rows = levels.rows();
  const Horizon h = cfg.horizon();
  const WindowOptions wopts = cfg.window_options();
  const auto& ts = levels.ts();

  // Candidate windows depend only on the grid and on whether a horizon
  // return exists, never on filtered values.
  const auto raw_mids = mid_series(levels);
  const auto raw_returns = horizon_returns(raw_mids, ts, h, cfg.grid_ms);
  LabelScheme probe;
  probe.tie_rule = TieRule::Up;
  const LabelSet candidates = make_labels(raw_returns, probe, h);
  const auto ends = run_stage("windows", [&] { return window_ends(ts, candidates, wopts); });
  out.candidate_windows = ends.size();
  const SplitRanges split = run_stage("split", [&] { return chronological_split(ends.size(), cfg.split); });

  auto train_ends = slice(ends, split.train);
  auto val_ends = slice(ends, split.val);
  auto test_ends = slice(ends, split.test);
  const std::size_t first_val_row = val_ends.front() + 1 - wopts.t;
  const std::size_t first_test_row = test_ends.front() + 1 - wopts.t;
  const std::size_t lookahead = filter_lookahead(cfg);
  train_ends = purge(train_ends, first_val_row, wopts, h, lookahead, out.purged_windows);
  val_ends = purge(val_ends, first_test_row, wopts, h, lookahead, out.purged_windows);
  if (train_ends.empty() || val_ends.empty()) {
    throw StageError("split", "purging horizon overlap left an empty train or validation split",
                     exit_code::kData);
  }
  out.train_rows = {train_ends.front() + 1 - wopts.t, train_ends.back() + 1};

  const auto feats = run_features(cfg, levels, ingest_key(cfg), out.train_rows, cache);
  out.kalman_params = feats->kalman_params;

  LabelSet labels = run_stage("labels", [&] {
    const auto mids = cfg.label_source == LabelSource::Raw ? raw_mids : mid_series(feats->levels_filtered);
    const auto returns = cfg.label_source == LabelSource::Raw ? raw_returns
                                                               : horizon_returns(mids, ts, h, cfg.grid_ms);
    LabelScheme scheme = cfg.label_scheme();
    if (scheme.kind == LabelKind::Ternary) {
      if (cfg.epsilon) {
        scheme.epsilon = *cfg.epsilon;
      } else {
        std::vector<double> train_returns;
        train_returns.reserve(train_ends.size());
        for (std::size_t e : train_ends) train_returns.push_back(returns[label_row(e, wopts.t, wopts.anchor)]);
        scheme.epsilon = tune_epsilon(train_returns).epsilon;
        out.epsilon_tuned = true;
      }
    }
    out.epsilon = scheme.epsilon;
    return make_labels(returns, scheme, h);
  });

  auto keep_labelled = [&](std::vector<std::size_t>& v) {
    const auto before = v.size();
    std::erase_if(v, [&](std::size_t e) { return !labels.valid[label_row(e, wopts.t, wopts.anchor)]; });
    out.dropped_windows += before - v.size();
  };
  keep_labelled(train_ends);
  keep_labelled(val_ends);
  keep_labelled(test_ends);
  if (train_ends.empty() || val_ends.empty() || test_ends.empty()) {
    throw StageError("labels", "a split has no labelled windows", exit_code::kData);
  }

  const int classes = labels.scheme.num_classes();
  run_stage("normalize", [&] {
    out.normalizer = fit_normalizer(feats->features, out.train_rows);
    out.features = apply_normalizer(feats->features, out.normalizer);
  });

  auto& ds = out.dataset;
  ds.train = materialize(out.features, labels, train_ends, wopts);
  ds.val = materialize(out.features, labels, val_ends, wopts);
  ds.test = materialize(out.features, labels, test_ends, wopts);

  run_stage("labels", [&] {
    if (cfg.inverse_class_weights) {
      out.class_weights = class_weights(ds.train.class_counts(classes)).weights;
    }
  });

  ds.meta.columns = out.features.names();
  ds.meta.classes = classes;
  ds.meta.label_kind = to_string(cfg.label_kind);
  ds.meta.label_source = to_string(cfg.label_source);
  ds.meta.horizon_steps = h.steps;
  ds.meta.filter = cfg.filter_kind;
  ds.meta.depth = cfg.depth;
  ds.meta.epsilon = out.epsilon;
  ds.meta.class_weights = out.class_weights;
  ds.meta.seed = cfg.seed;
  ds.meta.config_hash = cfg.content_hash();
  out.labels = std::move(labels);
  return out;
}

std::string manifest_text(const ExperimentConfig& cfg, const RunResult& r) {
  const auto& d = r.data;
  std::ostringstream os;
  os << cfg.canonical();
  os << "run.experiment_id = " << r.experiment_id << '\n';
  os << "run.version = " << kVersion << '\n';
  os << "run.input_sha256 = " << d.input_sha256 << '\n';
  os << "run.ingest.total_records = " << d.stats.total_records << '\n';
  os << "run.ingest.accepted = " << d.stats.accepted << '\n';
  os << "run.ingest.rejected_missing_depth = " << d.stats.rejected_missing_depth << '\n';
  os << "run.ingest.rejected_crossed = " << d.stats.rejected_crossed << '\n';
  os << "run.ingest.rejected_malformed = " << d.stats.rejected_malformed << '\n';
  os << "run.ingest.rejected_duplicate_ts = " << d.stats.rejected_duplicate_ts << '\n';
  os << "run.rows = " << d.rows << '\n';
  os << "run.windows.candidates = " << d.candidate_windows << '\n';
  os << "run.windows.purged = " << d.purged_windows << '\n';
  os << "run.windows.dropped = " << d.dropped_windows << '\n';
  os << "run.windows.train = " << d.dataset.train.size() << '\n';
  os << "run.windows.val = " << d.dataset.val.size() << '\n';
  os << "run.windows.test = " << d.dataset.test.size() << '\n';
  os << "run.train_rows = " << d.train_rows.begin << ':' << d.train_rows.end << '\n';
  os << "run.features = " << d.dataset.meta.columns.size() << '\n';
  os << "run.epsilon = " << format_double(d.epsilon) << '\n';
  os << "run.epsilon_tuned = " << (d.epsilon_tuned ? "true" : "false") << '\n';
  os << "run.class_weights = " << join_doubles(d.class_weights) << '\n';
  for (const auto& p : d.kalman_params) {
    os << "run.kalman." << p.column << " = " << format_double(p.q) << ',' << format_double(p.r) << '\n';
  }
  std::size_t constant = 0;
  for (bool c : d.normalizer.constant) constant += c ? 1 : 0;
  os << "run.normalizer.constant_columns = " << constant << '\n';
  os << "run.chosen.learning_rate = " << format_double(r.chosen.learning_rate) << '\n';
  if (kind_of(r.model) == ModelKind::Gbdt) {
    os << "run.chosen.rounds = " << r.chosen.rounds << '\n';
    os << "run.best_round = " << std::get<GbdtModel>(r.model).best_round << '\n';
  } else {
    os << "run.chosen.epochs = " << r.chosen.epochs << '\n';
  }
  os << "run.timing.train_seconds = " << format_metric(r.report.train_seconds, 6) << '\n';
  os << "run.timing.infer_ms_per_1k = " << format_metric(r.report.infer_ms_per_1k, 6) << '\n';
  return os.str();
}

ExperimentConfig config_from_manifest(const std::string& text) {
  KeyValues kv;
  for (auto& [k, v] : parse_key_values(text)) {
    if (k.rfind("run.", 0) != 0) kv.emplace_back(std::move(k), std::move(v));
  }
  auto cfg = config_from_key_values(kv);
  cfg.validate();
  return cfg;
}

RunResult run_experiment(const ExperimentConfig& cfg, PipelineCache* cache) {
  RunResult r;
  r.experiment_id = cfg.content_hash();
  r.data = prepare_dataset(cfg, cache);
  const auto& ds = r.data.dataset;
  const int classes = ds.meta.classes;

  TrainConfig train_cfg = cfg.train;
  train_cfg.seed = cfg.seed;
  train_cfg.class_weights = r.data.class_weights;

  run_stage("train", [&] {
    time_phase(Phase::Train, [&] {
      if (cfg.use_grid) {
        r.grid = grid_search(cfg.model, cfg.grid, ds.train, ds.val, train_cfg, classes);
        r.chosen = r.grid->best_config;
        r.model = r.grid->best_model;
      } else {
        r.chosen = train_cfg;
        r.model = train_model(cfg.model, ds.train, ds.val, train_cfg, classes);
      }
    }, r.report);
  });

  Prediction pred;
  run_stage("evaluate", [&] {
    const double train_s = r.report.train_seconds;
    time_phase(Phase::Infer, [&] { pred = predict_proba(r.model, ds.test); }, r.report, ds.test.size());
    r.confusion = confusion(ds.test.y, pred.argmax(), classes);
    const double infer = r.report.infer_ms_per_1k;
    r.report = metrics(r.confusion);
    r.report.train_seconds = train_s;
    r.report.infer_ms_per_1k = infer;
    r.report.meta["experiment_id"] = r.experiment_id;
    r.report.meta["filter"] = cfg.filter_kind;
    r.report.meta["label_kind"] = to_string(cfg.label_kind);
    r.report.meta["horizon_ms"] = std::to_string(cfg.horizon_ms);
    r.report.meta["depth"] = std::to_string(cfg.depth);
    r.report.meta["t"] = std::to_string(cfg.window_t);
  });

  run_stage("output", [&] {
    r.dir = std::filesystem::path(cfg.output_dir) / r.experiment_id;
    std::filesystem::create_directories(r.dir);
    const std::string model_name = to_string(cfg.model);
    write_text_file(r.dir / "manifest.txt", manifest_text(cfg, r));
    write_text_file(r.dir / "metrics.csv", metrics_csv_header() + metrics_csv_rows(r.report, model_name));
    write_text_file(r.dir / "metrics.md", metrics_markdown(r.report, model_name));
    write_text_file(r.dir / "confusion.csv", confusion_csv(r.confusion));
    std::ostringstream timings;
    timings << "phase,seconds\n"
            << "train," << format_metric(r.report.train_seconds, 6) << '\n'
            << "infer_per_1k," << format_metric(r.report.infer_ms_per_1k / 1000.0, 6) << '\n';
    write_text_file(r.dir / "timings.csv", timings.str());
    save_model(r.model, r.chosen, r.dir / "model.bin");
    std::ostringstream preds;
    write_predictions_csv(make_prediction_rows(ds.test.anchor_ts, ds.test.y, pred), preds);
    write_text_file(r.dir / "predictions.csv", preds.str());
    if (r.grid) write_text_file(r.dir / "grid.csv", r.grid->report_csv());
  });
  return r;
}

int MatrixResult::exit_code() const {
  return failed == 0 ? exit_code::kOk : exit_code::kPartial;
}

MatrixResult run_matrix(const std::vector<ExperimentConfig>& configs,
                        const std::filesystem::path& output_dir, bool use_cache) {
  if (configs.empty()) throw ConfigError("matrix: no cells");
  for (const auto& c : configs) {
    if (c.input != configs.front().input) throw ConfigError("matrix: cells must share one input");
  }
  PipelineCache cache;
  MatrixResult out;
  for (const auto& c : configs) {
    ResultCell cell;
    cell.label_kind = to_string(c.label_kind);
    cell.horizon_ms = static_cast<int>(c.horizon_ms);
    cell.depth = c.depth;
    cell.filter = c.filter_kind;
    cell.t = c.window_t;
    cell.model = to_string(c.model);
    cell.experiment_id = c.content_hash();
    try {
      PipelineCache local;
      auto r = run_experiment(c, use_cache ? &cache : &local);
      if (!use_cache) {
        out.counters.ingest += local.counters.ingest;
        out.counters.filter += local.counters.filter;
        out.counters.features += local.counters.features;
      }
      cell.report = r.report;
    } catch (const std::exception& e) {
      cell.error = e.what();
      ++out.failed;
    }
    out.cells.push_back(std::move(cell));
  }
  if (use_cache) out.counters = cache.counters;

  std::filesystem::create_directories(output_dir);
  write_text_file(output_dir / "results.csv", results_csv(out.cells));
  write_text_file(output_dir / "tables.csv", filter_tables_csv(out.cells));
  std::ostringstream md;
  md << filter_tables_markdown(out.cells, TableMetric::Accuracy)
     << filter_tables_markdown(out.cells, TableMetric::WeightedF1)
     << "### Depth\n\n" << depth_table_markdown(out.cells)
     << "\n### Sequence length\n\n" << sequence_table_markdown(out.cells);
  write_text_file(output_dir / "tables.md", md.str());
  return out;
}

PreparedData export_experiment(const ExperimentConfig& cfg, const std::filesystem::path& dir) {
  auto data = prepare_dataset(cfg);
  run_stage("export", [&] { export_tensors(data.dataset, dir); });
  return data;
}

}  // namespace lobbench
