// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <string>

#include <nlohmann/json.hpp>

#include "tabgen/losses/losses.hpp"

namespace tabgen {

enum class Variant { kSccvae, kScvae, kCcvae, kSccvaeCalpha };

std::string to_string(Variant v);
Variant parse_variant(const std::string& s);  // "SCCVAE", "SCVAE", "CCVAE", "SCCVAE-Calpha"

enum class Monitor { kTrain, kValidation };

struct TrainingConfig {
  Variant variant = Variant::kSccvae;
  std::size_t E = 32;
  std::size_t h = 64;
  double tau = 0.5;
  double alpha = 0.1;
  double lambda = 1e-3;
  ScheduleConfig beta_schedule{4, 0.9, 1.0, 200};
  ScheduleConfig alpha_schedule{4, 0.9, 1.0, 200};  // SCCVAE-Calpha only
  int epochs = 200;
  int patience = 10;
  std::size_t batch_size = 64;
  double learning_rate = 1e-3;
  std::uint64_t seed = 42;
  bool l1_on_weights = false;
  Monitor monitor = Monitor::kTrain;

  void validate() const;  // throws ConfigError
  /// Loss weights in effect at `epoch`, with the variant rules applied.
  LossWeights weights_at(int epoch) const;

  nlohmann::json to_json() const;
  /// Missing keys keep their defaults; unknown keys are a ConfigError.
  /// Schedule total_epochs defaults to `epochs`.
  static TrainingConfig from_json(const nlohmann::json& j);
};

TrainingConfig load_training_config(const std::string& path);

}  // namespace tabgen
