// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "tabgen/dataprep/dataset.hpp"

namespace tabgen {

enum class ClassifierKind { kLogreg, kMlp, kForest };
std::string to_string(ClassifierKind k);
ClassifierKind parse_classifier(const std::string& s);  // throws ConfigError

/// Prediction features: every column with role feature. Generation-only
/// columns are dropped.
struct FeatureLayout {
  std::vector<std::size_t> columns;
  std::vector<std::size_t> offsets;  // one-hot offset per column
  std::size_t width = 0;             // total one-hot width

  static FeatureLayout of(const Schema& schema);
};

/// One point of a classifier's hyperparameter grid. Only the fields of the
/// matching kind are used.
struct GridPoint {
  // logreg
  double l2 = 0.0;
  std::size_t iterations = 300;
  // mlp
  std::size_t hidden = 32;
  std::size_t epochs = 40;
  std::size_t batch_size = 64;
  // logreg and mlp
  double lr = 1e-2;
  // forest; depth 0 is unlimited, features 0 is sqrt(p)
  std::size_t trees = 50;
  std::size_t depth = 6;
  std::size_t features = 0;
  bool bootstrap = true;

  nlohmann::json to_json(ClassifierKind kind) const;
};

std::vector<GridPoint> default_grid(ClassifierKind kind);

class Classifier {
 public:
  virtual ~Classifier() = default;
  virtual ClassifierKind kind() const noexcept = 0;
  /// 0 non-risk, 1 risk, per record.
  virtual std::vector<std::uint8_t> predict(const Dataset& data) const = 0;
};

/// Trains one grid point. Throws ContractError when the training set holds
/// a single class. With a validation set the MLP keeps the weights of its
/// best epoch by validation weighted F1.
std::unique_ptr<Classifier> fit_classifier(ClassifierKind kind, const Dataset& train, const GridPoint& point,
                                           std::uint64_t seed, const Dataset* validation = nullptr);

struct FittedClassifier {
  std::unique_ptr<Classifier> model;
  std::size_t grid_index = 0;
  GridPoint point;
  double validation_f1 = 0.0;  // weighted
};

/// Exhaustive grid search scored by weighted F1 on the validation split;
/// the first of equally scored points wins. Point i trains with the seed
/// derived from (seed, kind, i).
FittedClassifier train_classifier(ClassifierKind kind, const Dataset& train, const Dataset& validation,
                                  const std::vector<GridPoint>& grid, std::uint64_t seed);

}  // namespace tabgen
