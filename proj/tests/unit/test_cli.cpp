#include <gtest/gtest.h>
#include <sys/wait.h>

#include <cstdlib>
#include <fstream>
#include <sstream>

#include "lobbench/errors.hpp"
#include "lobbench/eval.hpp"
#include "lobbench/matrix_io.hpp"
#include "support/helpers.hpp"

using namespace lobbench;
using testing_support::TempDir;

namespace {

int cli(const std::string& args) {
  const std::string cmd = std::string(LOBBENCH_CLI_PATH) + " " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string q(const std::filesystem::path& p) { return "'" + p.string() + "'"; }

void write(const std::filesystem::path& p, const std::string& text) { write_text_file(p, text); }

std::string config_text(const std::filesystem::path& input, const std::filesystem::path& out) {
  return "input = " + input.string() + "\noutput.dir = " + out.string() +
         "\nlabel.horizon_ms = 500\nmodel.rounds = 10\nmodel.epochs = 40\nseed = 3\n";
}

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    ASSERT_EQ(cli("synth --n 2500 --noise-sigma 0.5 --seed 4 --out " + q(book())), 0);
  }
  std::filesystem::path book() const { return dir_ / "book.ndjson"; }
  TempDir dir_{"cli"};
};

}  // namespace

TEST_F(CliTest, StageCommandsChain) {
  const auto& d = dir_;
  ASSERT_EQ(cli("ingest --input " + q(book()) + " --depth 10 --out " + q(d / "levels.csv") + " --report " +
                q(d / "coverage.csv")),
            0);
  auto levels = load_matrix_csv(d / "levels.csv");
  EXPECT_EQ(levels.rows(), 2500u);
  EXPECT_EQ(levels.cols(), 40u);
  EXPECT_NE(read_text_file(d / "coverage.csv").find("acceptance_ratio"), std::string::npos);

  ASSERT_EQ(cli("filter --in " + q(d / "levels.csv") + " --kind sg --sg-half-window 5 --sg-degree 2 --out " +
                q(d / "sg.csv")),
            0);
  ASSERT_EQ(cli("filter --in " + q(d / "levels.csv") + " --kind kalman --calibration-rows 0:1000 --out " +
                q(d / "kf.csv")),
            0);
  EXPECT_EQ(load_matrix_csv(d / "sg.csv").rows(), 2500u);

  ASSERT_EQ(cli("features --in " + q(d / "sg.csv") + " --depth 10 --out " + q(d / "features.csv")), 0);
  auto feats = load_matrix_csv(d / "features.csv");
  EXPECT_TRUE(feats.index_of("imb5").has_value());

  ASSERT_EQ(cli("label --in " + q(d / "levels.csv") + " --kind ternary --horizon-ms 500 --tune-rows 0:1500 --out " +
                q(d / "labels.csv")),
            0);
  std::ifstream lin(d / "labels.csv");
  auto labels = read_labels_csv(lin);
  EXPECT_EQ(labels.ts, levels.ts());

  ASSERT_EQ(cli("windows --features " + q(d / "features.csv") + " --labels " + q(d / "labels.csv") +
                " --t 3 --out " + q(d / "windows.csv")),
            0);
  const auto win = read_text_file(d / "windows.csv");
  EXPECT_EQ(win.rfind("ts,label,", 0), 0u);
  EXPECT_NE(win.find("imb1@2"), std::string::npos);
}

TEST_F(CliTest, ExportTrainPredictEvaluate) {
  const auto& d = dir_;
  write(d / "exp.cfg", config_text(book(), d / "results"));
  ASSERT_EQ(cli("export --config " + q(d / "exp.cfg") + " --out " + q(d / "tensors")), 0);
  for (const char* f : {"train.x.f32", "val.y.i8", "test.x.f32", "manifest.txt"}) {
    EXPECT_TRUE(std::filesystem::exists(d / "tensors" / f)) << f;
  }
  ASSERT_EQ(cli("train --tensors " + q(d / "tensors") + " --model gbdt --rounds 10 --out " + q(d / "trained")), 0);
  for (const char* f : {"metrics.csv", "metrics.md", "confusion.csv", "model.bin", "predictions.csv"}) {
    EXPECT_TRUE(std::filesystem::exists(d / "trained" / f)) << f;
  }
  ASSERT_EQ(cli("predict --model " + q(d / "trained" / "model.bin") + " --tensors " + q(d / "tensors") +
                " --split test --out " + q(d / "pred.csv")),
            0);
  EXPECT_EQ(read_text_file(d / "pred.csv"), read_text_file(d / "trained" / "predictions.csv"));
  ASSERT_EQ(cli("evaluate --predictions " + q(d / "pred.csv") + " --model-name gbdt --out " + q(d / "m.csv")), 0);
  EXPECT_EQ(read_text_file(d / "m.csv"), read_text_file(d / "trained" / "metrics.csv"));
  auto rows = parse_metrics_csv(read_text_file(d / "m.csv"));
  EXPECT_EQ(rows.front().metric, "accuracy");
}

TEST_F(CliTest, TrainAcceptsEmbeddings) {
  const auto& d = dir_;
  write(d / "exp.cfg", config_text(book(), d / "results"));
  ASSERT_EQ(cli("export --config " + q(d / "exp.cfg") + " --out " + q(d / "tensors")), 0);
  for (const char* split : {"train", "val", "test"}) {
    // 4-wide embedding: the first four features of each sample
    const auto x = read_text_file(d / "tensors" / (std::string(split) + ".x.f32"));
    const std::size_t width = 4 * sizeof(float);
    const auto n = std::filesystem::file_size(d / "tensors" / (std::string(split) + ".y.i8"));
    const std::size_t full = x.size() / n;
    std::string emb;
    for (std::size_t i = 0; i < n; ++i) emb += x.substr(i * full, width);
    write(d / "tensors" / ("embeddings." + std::string(split) + ".f32"), emb);
  }
  ASSERT_EQ(cli("train --tensors " + q(d / "tensors") + " --x-pattern 'embeddings.{split}.f32' --model logistic"
                " --out " + q(d / "emb")),
            0);
  EXPECT_TRUE(std::filesystem::exists(d / "emb" / "metrics.csv"));
  // the embedding width does not match a model trained on full tensors
  ASSERT_EQ(cli("train --tensors " + q(d / "tensors") + " --model logistic --epochs 5 --out " + q(d / "full")), 0);
  EXPECT_EQ(cli("predict --model " + q(d / "full" / "model.bin") + " --tensors " + q(d / "tensors") +
                " --x-pattern 'embeddings.{split}.f32' --split test"),
            exit_code::kData);
}

TEST_F(CliTest, RunIsDeterministic) {
  const auto& d = dir_;
  write(d / "run.cfg", config_text(book(), d / "results") + "filter.kind = sg\n");
  ASSERT_EQ(cli("run --config " + q(d / "run.cfg") + " --output-dir " + q(d / "a")), 0);
  ASSERT_EQ(cli("run --config " + q(d / "run.cfg") + " --output-dir " + q(d / "b")), 0);
  std::vector<std::filesystem::path> ids;
  for (const auto& e : std::filesystem::directory_iterator(d / "a")) ids.push_back(e.path().filename());
  ASSERT_EQ(ids.size(), 1u);
  for (const char* f : {"metrics.csv", "model.bin"}) {
    EXPECT_EQ(read_text_file(d / "a" / ids[0] / f), read_text_file(d / "b" / ids[0] / f)) << f;
  }
}

TEST_F(CliTest, MatrixWritesTablesAndFlagsPartialFailure) {
  const auto& d = dir_;
  write(d / "m.cfg", config_text(book(), d / "cells") +
                         "matrix.filter.kind = raw, kalman, sg\nmatrix.model.kind = logistic, gbdt\n");
  ASSERT_EQ(cli("matrix --config " + q(d / "m.cfg")), 0);
  const auto results = read_text_file(d / "cells" / "results.csv");
  EXPECT_EQ(std::count(results.begin(), results.end(), '\n'), 7);
  EXPECT_TRUE(std::filesystem::exists(d / "cells" / "tables.md"));

  write(d / "bad.cfg", config_text(book(), d / "bad") +
                           "model.kind = logistic\nmatrix.model.learning_rate = 0.1, 1e300\n");
  EXPECT_EQ(cli("matrix --config " + q(d / "bad.cfg")), exit_code::kPartial);
}

TEST_F(CliTest, ExitCodes) {
  const auto& d = dir_;
  EXPECT_EQ(cli(""), exit_code::kConfig);
  EXPECT_EQ(cli("run"), exit_code::kConfig);
  EXPECT_EQ(cli("run --config " + q(d / "missing.cfg")), exit_code::kConfig);
  write(d / "unknown.cfg", "input = x\nfilter.flavour = sg\n");
  EXPECT_EQ(cli("run --config " + q(d / "unknown.cfg")), exit_code::kConfig);
  write(d / "noinput.cfg", config_text(d / "absent.ndjson", d / "r"));
  EXPECT_EQ(cli("run --config " + q(d / "noinput.cfg")), exit_code::kData);
  write(d / "diverge.cfg", config_text(book(), d / "r") + "model.kind = logistic\nmodel.learning_rate = 1e300\n");
  EXPECT_EQ(cli("run --config " + q(d / "diverge.cfg")), exit_code::kDivergence);
  EXPECT_EQ(cli("synth --signal-strength 0.2"), exit_code::kConfig);
  EXPECT_EQ(cli("ingest --input " + q(d / "absent.ndjson")), exit_code::kData);
}
