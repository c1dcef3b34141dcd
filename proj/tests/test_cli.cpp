// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include <unistd.h>

#include <filesystem>

#include <nlohmann/json.hpp>

#include "tabgen/cli/cli.hpp"
#include "tabgen/common/hash.hpp"
#include "tabgen/dataprep/csv.hpp"
#include "tabgen/dataprep/schema.hpp"
#include "tabgen/training/checkpoint.hpp"
#include "tabgen/training/trainer.hpp"

namespace fs = std::filesystem;
using namespace tabgen;

namespace {

class Cli : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    root_ = fs::temp_directory_path() / ("tabgen_cli_" + std::to_string(::getpid()));
    fs::remove_all(root_);
    fs::create_directories(root_);
    ASSERT_EQ(run({"benchmark", "--patients", "240", "--seed", "3", "--out", p("bench")}), 0);
    ASSERT_EQ(run({"prepare", "--schema", p("bench/schema.json"), "--input", p("bench/raw.csv"), "--split",
                   "0.2,0.2", "--seed", "3", "--out", p("prep")}),
              0);
    write_config("tiny.json", {{"variant", "SCVAE"}});
    ASSERT_EQ(run({"train", "--data", p("prep"), "--config", p("tiny.json"), "--out", p("model/m.ckpt"), "--seed", "5"}),
              0);
  }
  static void TearDownTestSuite() { fs::remove_all(root_); }

  static int run(std::vector<std::string> args) {
    args.insert(args.begin(), "tabgen");
    return run_cli(args);
  }
  static std::string p(const std::string& rel) { return (root_ / rel).string(); }
  static nlohmann::json read_json(const std::string& rel) { return nlohmann::json::parse(read_file(p(rel))); }

  static void write_config(const std::string& name, nlohmann::json extra) {
    nlohmann::json j = {{"E", 4}, {"h", 4}, {"epochs", 8}, {"batch_size", 32}};
    j.update(extra);
    write_file(p(name), j.dump());
  }

  static fs::path root_;
};

fs::path Cli::root_;

}  // namespace

TEST_F(Cli, BenchmarkWritesCorpusAndManifest) {
  ASSERT_EQ(run({"benchmark", "--out", p("default")}), 0);
  EXPECT_EQ(read_csv(p("default/raw.csv")).rows.size(), 811u);
  const auto m = read_json("default/manifest.json");
  EXPECT_EQ(m["command"], "benchmark");
  for (const auto& f : m["outputs"]) EXPECT_EQ(f["sha256"], sha256_file(f["path"].get<std::string>()));

  ASSERT_EQ(run({"benchmark", "--out", p("again")}), 0);
  EXPECT_EQ(sha256_file(p("default/raw.csv")), sha256_file(p("again/raw.csv")));
  EXPECT_EQ(sha256_file(p("default/schema.json")), sha256_file(p("again/schema.json")));
}

TEST_F(Cli, ExitCodes) {
  EXPECT_EQ(run({"benchmark", "--patients", "49", "--out", p("small")}), 2);
  EXPECT_EQ(run({"frobnicate"}), 2);
  EXPECT_EQ(run({"generate", "--model", p("model/m.ckpt"), "--class", "healthy", "--out", p("x.csv")}), 2);
  // A regular file where a directory is needed.
  write_file(p("blocker"), "x");
  EXPECT_EQ(run({"benchmark", "--out", p("blocker/sub")}), 5);
  EXPECT_EQ(run({"generate", "--model", p("missing.ckpt"), "--class", "risk", "--out", p("x.csv")}), 5);
  // More neighbours than the bank holds.
  EXPECT_EQ(run({"generate", "--model", p("model/m.ckpt"), "--class", "risk", "--k", "100000", "--out", p("x.csv")}),
            4);
  write_config("bad_lr.json", {{"learning_rate", 1e300}});
  EXPECT_EQ(run({"train", "--data", p("prep"), "--config", p("bad_lr.json"), "--out", p("bad/m.ckpt")}), 3);
  write_config("bad_key.json", {{"learning_rte", 1e-3}});
  EXPECT_EQ(run({"train", "--data", p("prep"), "--config", p("bad_key.json"), "--out", p("bad/m.ckpt")}), 2);
}

TEST_F(Cli, PrepareIsIdempotentAndReportsDuplicates) {
  ASSERT_EQ(run({"prepare", "--schema", p("bench/schema.json"), "--input", p("bench/raw.csv"), "--seed", "3", "--out",
                 p("prep2")}),
            0);
  for (const char* f : {"schema.json", "train.csv", "val.csv", "test.csv", "prune_report.json"})
    EXPECT_EQ(sha256_file(p(std::string("prep/") + f)), sha256_file(p(std::string("prep2/") + f))) << f;

  // Copy x1 into a new column and declare it.
  auto raw = read_csv(p("bench/raw.csv"));
  const std::size_t x1 = raw.index("x1");
  raw.add_column("x1_copy");
  for (auto& row : raw.rows) row.back() = row[x1];
  write_csv(raw, p("dup.csv"));
  auto schema = load_schema(p("bench/schema.json"));
  auto col = schema.columns[schema.column_index("x1")];
  col.name = "x1_copy";
  schema.columns.push_back(col);
  save_schema(schema, p("dup_schema.json"));
  ASSERT_EQ(run({"prepare", "--schema", p("dup_schema.json"), "--input", p("dup.csv"), "--out", p("prep_dup")}), 0);
  const auto report = read_json("prep_dup/prune_report.json");
  bool listed = false;
  for (const auto& r : report["removed"]) listed |= r.dump().find("x1_copy") != std::string::npos;
  EXPECT_TRUE(listed) << report.dump();
}

TEST_F(Cli, TrainWritesLoadableCheckpointAndHistory) {
  const auto ckpt = load_checkpoint(p("model/m.ckpt"));
  EXPECT_EQ(ckpt.config.seed, 5u);
  EXPECT_EQ(ckpt.config.variant, Variant::kScvae);
  EXPECT_NE(ckpt.extra("bank.risk"), nullptr);
  const auto hist = TrainingHistory::from_json(read_json("model/history.json"));
  ASSERT_FALSE(hist.epochs.empty());
  for (const auto& e : hist.epochs) EXPECT_EQ(e.train.nce, 0.0);
  const auto m = read_json("model/m.ckpt.manifest.json");
  EXPECT_EQ(m["seed"], 5);
  for (const auto& f : m["outputs"]) EXPECT_EQ(f["sha256"], sha256_file(f["path"].get<std::string>()));

  // Same seed, same bytes.
  ASSERT_EQ(run({"train", "--data", p("prep"), "--config", p("tiny.json"), "--out", p("model2/m.ckpt"), "--seed", "5"}),
            0);
  EXPECT_EQ(sha256_file(p("model/m.ckpt")), sha256_file(p("model2/m.ckpt")));
  EXPECT_EQ(sha256_file(p("model/history.json")), sha256_file(p("model2/history.json")));
}

TEST_F(Cli, EarlyStopShowsInHistory) {
  write_config("impatient.json", {{"patience", 1}, {"epochs", 40}});
  ASSERT_EQ(run({"train", "--data", p("prep"), "--config", p("impatient.json"), "--out", p("es/m.ckpt")}), 0);
  const auto hist = TrainingHistory::from_json(read_json("es/history.json"));
  EXPECT_TRUE(hist.stopped_early);
  EXPECT_LT(hist.epochs.size(), 40u);
  EXPECT_EQ(hist.epochs.back().epoch, hist.best_epoch + 1);
}

TEST_F(Cli, GenerateIsLabelledAndDeterministic) {
  ASSERT_EQ(run({"generate", "--model", p("model/m.ckpt"), "--class", "risk", "--count", "77", "--seed", "9", "--out",
                 p("gen/a.csv")}),
            0);
  ASSERT_EQ(run({"generate", "--model", p("model/m.ckpt"), "--class", "risk", "--count", "77", "--seed", "9", "--out",
                 p("gen/b.csv")}),
            0);
  const auto t = read_csv(p("gen/a.csv"));
  ASSERT_EQ(t.rows.size(), 77u);
  const std::size_t label = t.index("risk");
  for (const auto& row : t.rows) EXPECT_EQ(row[label], "risk");
  EXPECT_EQ(sha256_file(p("gen/a.csv")), sha256_file(p("gen/b.csv")));
  const auto prov = read_json("gen/a.csv.provenance.json");
  EXPECT_EQ(prov["request"]["count"], 77);
  EXPECT_EQ(prov["model_sha256"], sha256_file(p("model/m.ckpt")));
}

TEST_F(Cli, EvaluateReportCardinality) {
  ASSERT_EQ(run({"evaluate", "--data", p("prep"), "--model", p("model/m.ckpt"), "--factors", "2,3", "--classifiers",
                 "logreg,forest", "--seeds", "2", "--out", p("eval/report.json")}),
            0);
  const auto r = read_json("eval/report.json");
  // Baseline plus 2 factors, times 2 classifiers, times 2 seeds.
  EXPECT_EQ(r["reports"].size(), 12u);
  EXPECT_EQ(r["consistency"].size(), 4u);
  for (const auto& c : r["consistency"]) {
    EXPECT_TRUE(c["classes"].contains("risk"));
    EXPECT_TRUE(c["classes"].contains("non-risk"));
  }
  EXPECT_TRUE(fs::exists(p("eval/report.txt")));
  EXPECT_EQ(run({"evaluate", "--data", p("prep"), "--model", p("model/m.ckpt"), "--classifiers", "xgboost", "--out",
                 p("eval/bad.json")}),
            2);
}
