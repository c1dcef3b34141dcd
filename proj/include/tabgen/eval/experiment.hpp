// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "tabgen/dataprep/prepare.hpp"
#include "tabgen/eval/classifiers.hpp"
#include "tabgen/eval/metrics.hpp"
#include "tabgen/sampling/sampler.hpp"
#include "tabgen/training/checkpoint.hpp"

namespace tabgen {

struct ExperimentConfig {
  std::vector<int> factors{2, 5};
  std::vector<ClassifierKind> classifiers{ClassifierKind::kLogreg, ClassifierKind::kMlp, ClassifierKind::kForest};
  std::size_t seeds = 5;
  std::uint64_t seed = 42;
  std::size_t k = 5;
  DecodeMode mode = DecodeMode::kArgmax;
  /// 0 means TABGEN_THREADS, else hardware concurrency.
  std::size_t threads = 0;

  void validate() const;  // throws ConfigError
  nlohmann::json to_json() const;
};

/// One fitted classifier scored once on the test split. Factor 1 is the
/// original training set.
struct EvalReport {
  std::string generator;  // "original" or the generator variant name
  int factor = 1;
  ClassifierKind classifier = ClassifierKind::kLogreg;
  std::size_t seed_index = 0;
  std::uint64_t seed = 0;
  std::array<std::size_t, 2> train_counts{};
  std::size_t grid_index = 0;
  GridPoint point;
  double validation_f1 = 0.0;
  F1Scores test;

  nlohmann::json to_json() const;
};

struct ConsistencyEntry {
  int factor = 0;
  std::size_t seed_index = 0;
  ConsistencyResult result;
};

struct AccessEntry {
  std::string split;  // train | validation | test
  std::string stage;  // fit | select | generate | score
  std::string task;
};

struct ExperimentReport {
  ExperimentConfig config;
  std::string generator;
  std::vector<EvalReport> reports;
  std::vector<ConsistencyEntry> consistency;
  std::vector<AccessEntry> access_log;

  const EvalReport* find(int factor, ClassifierKind kind, std::size_t seed_index) const;
  /// Median over seeds of (augmented - original) weighted test F1.
  double median_gain(int factor, ClassifierKind kind) const;

  nlohmann::json to_json() const;
  /// Aligned text table: rows original and each factor, columns per
  /// classifier F1 for the risk class and weighted, medians over seeds.
  std::string table() const;
};

/// Threads for evaluation: TABGEN_THREADS when set and positive, else the
/// hardware concurrency (at least 1).
std::size_t evaluation_threads();

/// Trains every classifier on the original training split and on the split
/// augmented with (factor - 1) x per-class synthetic records, for every
/// seed. Validation and test splits are never augmented; the test split is
/// read only to score fitted classifiers. Reports are independent of the
/// thread count.
ExperimentReport augmentation_experiment(const PreparedData& data, Checkpoint& generator, const ExperimentConfig& cfg);

double median(std::vector<double> v);

}  // namespace tabgen
