#include "lobbench/tables.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <map>
#include <set>
#include <sstream>
#include <tuple>

namespace lobbench {

namespace {

int filter_rank(const std::string& f) {
  if (f == "raw") return 0;
  if (f == "kalman") return 1;
  if (f == "sg") return 2;
  return 3;
}

std::string filter_label(const std::string& f) {
  if (f == "raw") return "Raw";
  if (f == "kalman") return "Kalman";
  if (f == "sg") return "Savitzky-Golay";
  return f;
}

std::vector<std::string> model_order(const std::vector<ResultCell>& cells) {
  std::vector<std::string> models;
  for (const auto& c : cells) {
    if (std::find(models.begin(), models.end(), c.model) == models.end()) models.push_back(c.model);
  }
  return models;
}

std::vector<std::string> label_kinds(const std::vector<ResultCell>& cells) {
  std::vector<std::string> kinds;
  for (const auto& c : cells) {
    if (std::find(kinds.begin(), kinds.end(), c.label_kind) == kinds.end()) kinds.push_back(c.label_kind);
  }
  return kinds;
}

double pick(const MetricsReport& r, TableMetric m) {
  return m == TableMetric::Accuracy ? r.accuracy : r.weighted_f1;
}

std::string csv_escape(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char ch : s) {
    if (ch == '"') out += '"';
    out += ch == '\n' ? ' ' : ch;
  }
  return out + "\"";
}

using BlockKey = std::tuple<int, std::size_t, std::size_t>;  // horizon, depth, T

struct Block {
  // filter -> model -> cell
  std::map<std::string, std::map<std::string, const ResultCell*>> rows;
};

std::map<BlockKey, Block> blocks_for(const std::vector<ResultCell>& cells, const std::string& kind) {
  std::map<BlockKey, Block> blocks;
  for (const auto& c : cells) {
    if (c.label_kind != kind) continue;
    blocks[{c.horizon_ms, c.depth, c.t}].rows[c.filter][c.model] = &c;
  }
  return blocks;
}

std::vector<std::string> sorted_filters(const Block& b) {
  std::vector<std::string> fs;
  for (const auto& [f, _] : b.rows) fs.push_back(f);
  std::stable_sort(fs.begin(), fs.end(),
                   [](const auto& a, const auto& c) { return filter_rank(a) < filter_rank(c); });
  return fs;
}

}  // namespace

std::string format_duration(double seconds) {
  std::ostringstream os;
  if (seconds < 60.0) {
    os << std::fixed << std::setprecision(1) << seconds << " s";
    return os.str();
  }
  const auto whole = static_cast<long long>(std::llround(seconds));
  os << whole / 60 << " m " << std::setw(2) << std::setfill('0') << whole % 60 << " s";
  return os.str();
}

std::string results_csv(const std::vector<ResultCell>& cells) {
  std::ostringstream os;
  os << "experiment_id,label_kind,horizon_ms,depth,filter,t,model,accuracy,weighted_f1,macro_f1,"
        "support,train_seconds,error\n";
  for (const auto& c : cells) {
    os << c.experiment_id << ',' << c.label_kind << ',' << c.horizon_ms << ',' << c.depth << ','
       << c.filter << ',' << c.t << ',' << c.model << ',';
    if (c.report) {
      os << format_metric(c.report->accuracy, 6) << ',' << format_metric(c.report->weighted_f1, 6)
         << ',' << format_metric(c.report->macro_f1, 6) << ',' << c.report->total << ','
         << format_metric(c.report->train_seconds, 3) << ',';
    } else {
      os << ",,,,,";
    }
    os << csv_escape(c.error) << '\n';
  }
  return os.str();
}

std::string filter_tables_csv(const std::vector<ResultCell>& cells, TableMetric metric) {
  const auto models = model_order(cells);
  std::ostringstream os;
  os << "label_kind,horizon_ms,depth,t,filter";
  for (const auto& m : models) os << ',' << m;
  os << '\n';
  for (const auto& kind : label_kinds(cells)) {
    for (const auto& [key, block] : blocks_for(cells, kind)) {
      for (const auto& f : sorted_filters(block)) {
        os << kind << ',' << std::get<0>(key) << ',' << std::get<1>(key) << ',' << std::get<2>(key)
           << ',' << f;
        const auto& row = block.rows.at(f);
        for (const auto& m : models) {
          os << ',';
          auto it = row.find(m);
          if (it != row.end() && it->second->report) os << format_metric(pick(*it->second->report, metric));
        }
        os << '\n';
      }
    }
  }
  return os.str();
}

std::string filter_tables_markdown(const std::vector<ResultCell>& cells, TableMetric metric) {
  const auto models = model_order(cells);
  std::ostringstream os;
  const char* what = metric == TableMetric::Accuracy ? "accuracy" : "weighted F1";
  for (const auto& kind : label_kinds(cells)) {
    os << "### " << kind << " classification (" << what << ")\n\n";
    os << "| Filter |";
    for (const auto& m : models) os << ' ' << m << " |";
    os << "\n|---|";
    for (std::size_t i = 0; i < models.size(); ++i) os << "---|";
    os << '\n';
    std::vector<std::string> notes;
    for (const auto& [key, block] : blocks_for(cells, kind)) {
      os << "| **Next " << std::get<0>(key) << " ms, " << std::get<1>(key) << "-level LOB, T="
         << std::get<2>(key) << "** |";
      for (std::size_t i = 0; i < models.size(); ++i) os << " |";
      os << '\n';
      for (const auto& f : sorted_filters(block)) {
        os << "| " << filter_label(f) << " |";
        const auto& row = block.rows.at(f);
        for (const auto& m : models) {
          auto it = row.find(m);
          if (it != row.end() && it->second->report) {
            os << ' ' << format_metric(pick(*it->second->report, metric)) << " |";
          } else {
            os << "  |";
            if (it != row.end()) {
              notes.push_back(std::to_string(std::get<0>(key)) + " ms / " + f + " / " + m + ": " +
                              it->second->error);
            }
          }
        }
        os << '\n';
      }
    }
    if (!notes.empty()) {
      os << "\nFailed cells:\n";
      for (const auto& n : notes) os << "- " << n << '\n';
    }
    os << '\n';
  }
  return os.str();
}

std::string depth_table_markdown(const std::vector<ResultCell>& cells) {
  std::size_t k = 0;
  for (const auto& c : cells) {
    if (c.report) k = std::max(k, c.report->per_class.size());
  }
  std::ostringstream os;
  os << "| Model | Depth | Accuracy |";
  for (std::size_t c = 0; c < k; ++c) os << " F1(" << c << ") |";
  os << " Support |\n|---|---|---|";
  for (std::size_t c = 0; c < k; ++c) os << "---|";
  os << "---|\n";
  std::vector<const ResultCell*> sorted;
  for (const auto& c : cells) sorted.push_back(&c);
  std::stable_sort(sorted.begin(), sorted.end(), [](const ResultCell* a, const ResultCell* b) {
    return std::tie(a->model, b->depth) < std::tie(b->model, a->depth);
  });
  for (const auto* c : sorted) {
    os << "| " << c->model << " | " << c->depth << " levels | ";
    if (!c->report) {
      os << "failed: " << c->error << " |\n";
      continue;
    }
    os << format_metric(c->report->accuracy) << " |";
    for (std::size_t i = 0; i < k; ++i) {
      os << ' ' << (i < c->report->per_class.size() ? format_metric(c->report->per_class[i].f1) : "")
         << " |";
    }
    os << ' ' << c->report->total << " |\n";
  }
  return os.str();
}

std::string sequence_table_markdown(const std::vector<ResultCell>& cells) {
  std::size_t k = 0;
  for (const auto& c : cells) {
    if (c.report) k = std::max(k, c.report->per_class.size());
  }
  std::ostringstream os;
  os << "| Model | T | Accuracy |";
  for (std::size_t c = 0; c < k; ++c) os << " F1(" << c << ") |";
  for (std::size_t c = 0; c < k; ++c) os << " Support " << c << " |";
  os << " Run time |\n|---|---|---|";
  for (std::size_t c = 0; c < 2 * k + 1; ++c) os << "---|";
  os << '\n';
  std::vector<const ResultCell*> sorted;
  for (const auto& c : cells) sorted.push_back(&c);
  std::stable_sort(sorted.begin(), sorted.end(), [](const ResultCell* a, const ResultCell* b) {
    return std::tie(a->model, a->t) < std::tie(b->model, b->t);
  });
  for (const auto* c : sorted) {
    os << "| " << c->model << " | " << c->t << " | ";
    if (!c->report) {
      os << "failed: " << c->error << " |\n";
      continue;
    }
    const auto& pc = c->report->per_class;
    os << format_metric(c->report->accuracy) << " |";
    for (std::size_t i = 0; i < k; ++i) os << ' ' << (i < pc.size() ? format_metric(pc[i].f1) : "") << " |";
    for (std::size_t i = 0; i < k; ++i) os << ' ' << (i < pc.size() ? std::to_string(pc[i].support) : "") << " |";
    os << ' ' << format_duration(c->report->train_seconds) << " |\n";
  }
  return os.str();
}

}  // namespace lobbench
