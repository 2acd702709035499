#include "lobbench/model.hpp"

#include <cmath>
#include <iomanip>
#include <sstream>

#include "lobbench/errors.hpp"

namespace lobbench {

const char* to_string(ModelKind k) { return k == ModelKind::Logistic ? "logistic" : "gbdt"; }

ModelKind model_kind_from_string(const std::string& s) {
  if (s == "logistic") return ModelKind::Logistic;
  if (s == "gbdt") return ModelKind::Gbdt;
  throw ConfigError("model.kind must be logistic or gbdt, got " + s);
}

ModelKind kind_of(const Model& m) {
  return std::holds_alternative<LogisticModel>(m) ? ModelKind::Logistic : ModelKind::Gbdt;
}

int classes_of(const Model& m) {
  return std::visit([](const auto& v) { return v.classes; }, m);
}

Prediction predict_proba(const Model& m, const Samples& data) {
  return std::visit([&](const auto& v) { return predict_proba(v, data); }, m);
}

Model train_model(ModelKind kind, const Samples& train, const Samples& val, const TrainConfig& cfg,
                  int classes) {
  if (kind == ModelKind::Logistic) return train_logistic(train, cfg, classes);
  return train_gbdt(train, cfg, classes, val);
}

std::string GridSearchResult::report_csv() const {
  std::ostringstream os;
  os << std::setprecision(10);
  os << "rounds,learning_rate,val_loss,best_round,selected,error\n";
  for (std::size_t i = 0; i < cells.size(); ++i) {
    const auto& c = cells[i];
    os << c.rounds << ',' << c.learning_rate << ',';
    if (c.failed) {
      os << ",," << 0 << ',' << '"' << c.error << '"' << '\n';
    } else {
      os << c.val_loss << ',' << c.best_round << ',' << (i == best_index ? 1 : 0) << ",\n";
    }
  }
  return os.str();
}

GridSearchResult grid_search(ModelKind kind, const SearchGrid& grid, const Samples& train,
                             const Samples& val, const TrainConfig& base, int classes) {
  if (grid.rounds.empty() || grid.learning_rates.empty()) throw ConfigError("model grid is empty");
  GridSearchResult res;
  bool have = false;
  for (int rounds : grid.rounds) {
    for (double lr : grid.learning_rates) {
      TrainConfig cfg = base;
      cfg.learning_rate = lr;
      if (kind == ModelKind::Logistic) {
        cfg.epochs = rounds;
      } else {
        cfg.rounds = rounds;
      }
      GridCell cell{rounds, lr, 0.0, 0, false, {}};
      try {
        Model m = train_model(kind, train, val, cfg, classes);
        cell.val_loss = weighted_log_loss(predict_proba(m, val), val.y, cfg.class_weights);
        if (const auto* g = std::get_if<GbdtModel>(&m)) cell.best_round = g->best_round;
        else cell.best_round = rounds;
        if (!std::isfinite(cell.val_loss)) throw TrainingDivergence("non-finite validation loss");
        const bool better =
            !have || cell.val_loss < res.cells[res.best_index].val_loss ||
            (cell.val_loss == res.cells[res.best_index].val_loss &&
             (lr < res.best_config.learning_rate ||
              (lr == res.best_config.learning_rate && rounds < res.cells[res.best_index].rounds)));
        res.cells.push_back(cell);
        if (better) {
          have = true;
          res.best_index = res.cells.size() - 1;
          res.best_config = cfg;
          res.best_model = std::move(m);
        }
      } catch (const TrainingDivergence& e) {
        cell.failed = true;
        cell.error = e.what();
        res.cells.push_back(cell);
      }
    }
  }
  if (!have) throw TrainingDivergence("every grid cell diverged");
  return res;
}

}  // namespace lobbench
