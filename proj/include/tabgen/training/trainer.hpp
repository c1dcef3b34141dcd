// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <functional>
#include <optional>
#include <vector>

#include <nlohmann/json.hpp>

#include "tabgen/dataprep/dataset.hpp"
#include "tabgen/losses/losses.hpp"
#include "tabgen/model/cvae.hpp"
#include "tabgen/training/config.hpp"

namespace tabgen {

struct EpochRecord {
  int epoch = 0;
  /// Row-weighted mean over the epoch's batches, evaluated at end-of-epoch
  /// weights.
  LossBreakdown train;
  std::optional<double> validation;
  /// The value early stopping compares (train.total or validation).
  double monitored = 0.0;
};

struct TrainingHistory {
  std::vector<EpochRecord> epochs;
  bool stopped_early = false;
  int best_epoch = -1;
  double best_loss = 0.0;

  nlohmann::json to_json() const;
  static TrainingHistory from_json(const nlohmann::json& j);
};

struct TrainResult {
  CvaeModel model;  // best-epoch weights
  TrainingHistory history;
};

using EpochCallback = std::function<void(const EpochRecord&)>;

ModelDims dims_for(const Schema& schema, const TrainingConfig& cfg);

/// Mini-batch Adam training with scheduled beta (and alpha for
/// SCCVAE-Calpha) and early stopping on the monitored loss. Deterministic
/// for a given config seed. `validation` is required when the config
/// monitors validation loss.
TrainResult train(const Dataset& data, const TrainingConfig& cfg, const Dataset* validation = nullptr,
                  const EpochCallback& on_epoch = {});

/// Forward-only loss of `model` over the batches and epsilon stream the
/// trainer records for `epoch`.
LossBreakdown evaluate_epoch_loss(CvaeModel& model, const Dataset& data, const TrainingConfig& cfg, int epoch);

/// Forward-only loss over `data` as one pass of batches in row order.
LossBreakdown evaluate_loss(CvaeModel& model, const Dataset& data, const TrainingConfig& cfg, int epoch);

}  // namespace tabgen
