// SPDX-License-Identifier: Apache-2.0
#include "tabgen/training/config.hpp"

#include <set>

#include "tabgen/common/error.hpp"
#include "tabgen/common/hash.hpp"

namespace tabgen {

std::string to_string(Variant v) {
  switch (v) {
    case Variant::kSccvae: return "SCCVAE";
    case Variant::kScvae: return "SCVAE";
    case Variant::kCcvae: return "CCVAE";
    case Variant::kSccvaeCalpha: return "SCCVAE-Calpha";
  }
  return "?";
}

Variant parse_variant(const std::string& s) {
  for (Variant v : {Variant::kSccvae, Variant::kScvae, Variant::kCcvae, Variant::kSccvaeCalpha})
    if (to_string(v) == s) return v;
  throw ConfigError("unknown variant '" + s + "' (expected SCCVAE, SCVAE, CCVAE or SCCVAE-Calpha)");
}

void TrainingConfig::validate() const {
  if (E < 1) throw ConfigError("E must be >= 1");
  if (h < 1) throw ConfigError("h must be >= 1");
  if (!(tau > 0.0)) throw ConfigError("tau must be > 0");
  if (!(alpha >= 0.0)) throw ConfigError("alpha must be >= 0");
  if (!(lambda >= 0.0)) throw ConfigError("lambda must be >= 0");
  if (epochs < 1) throw ConfigError("epochs must be >= 1");
  if (patience < 1) throw ConfigError("patience must be >= 1");
  if (batch_size < 2) throw ConfigError("batch_size must be >= 2");
  if (!(learning_rate > 0.0)) throw ConfigError("learning_rate must be > 0");
  beta_schedule.validate();
  if (beta_schedule.total_epochs != epochs) throw ConfigError("beta_schedule.total_epochs must equal epochs");
  if (variant == Variant::kSccvaeCalpha) {
    alpha_schedule.validate();
    if (alpha_schedule.total_epochs != epochs) throw ConfigError("alpha_schedule.total_epochs must equal epochs");
  }
}

LossWeights TrainingConfig::weights_at(int epoch) const {
  LossWeights w;
  w.beta = cyclic_schedule(epoch, beta_schedule);
  w.alpha = alpha;
  w.lambda = lambda;
  w.tau = tau;
  w.l1_on_weights = l1_on_weights;
  switch (variant) {
    case Variant::kSccvae: break;
    case Variant::kScvae:
      w.alpha = 0.0;
      w.contrastive = false;
      break;
    case Variant::kCcvae: w.lambda = 0.0; break;
    case Variant::kSccvaeCalpha: w.alpha = cyclic_schedule(epoch, alpha_schedule); break;
  }
  return w;
}

namespace {

nlohmann::json schedule_json(const ScheduleConfig& s) {
  return {{"cycles", s.cycles}, {"ratio", s.ratio}, {"max_value", s.max_value}, {"total_epochs", s.total_epochs}};
}

ScheduleConfig schedule_from(const nlohmann::json& j, const ScheduleConfig& base, int epochs,
                             const std::string& what) {
  static const std::set<std::string> keys{"cycles", "ratio", "max_value", "total_epochs"};
  if (!j.is_object()) throw ConfigError(what + " must be an object");
  for (const auto& [k, _] : j.items())
    if (!keys.count(k)) throw ConfigError("unknown key '" + k + "' in " + what);
  ScheduleConfig s = base;
  s.cycles = j.value("cycles", s.cycles);
  s.ratio = j.value("ratio", s.ratio);
  s.max_value = j.value("max_value", s.max_value);
  s.total_epochs = j.value("total_epochs", epochs);
  return s;
}

}  // namespace

nlohmann::json TrainingConfig::to_json() const {
  return {{"variant", to_string(variant)},
          {"E", E},
          {"h", h},
          {"tau", tau},
          {"alpha", alpha},
          {"lambda", lambda},
          {"beta_schedule", schedule_json(beta_schedule)},
          {"alpha_schedule", schedule_json(alpha_schedule)},
          {"epochs", epochs},
          {"patience", patience},
          {"batch_size", batch_size},
          {"learning_rate", learning_rate},
          {"seed", seed},
          {"l1_on_weights", l1_on_weights},
          {"monitor", monitor == Monitor::kTrain ? "train" : "validation"}};
}

TrainingConfig TrainingConfig::from_json(const nlohmann::json& j) {
  static const std::set<std::string> keys{"variant", "E", "h", "tau", "alpha", "lambda", "beta_schedule",
                                          "alpha_schedule", "epochs", "patience", "batch_size",
                                          "learning_rate", "seed", "l1_on_weights", "monitor"};
  if (!j.is_object()) throw ConfigError("training config must be a JSON object");
  for (const auto& [k, _] : j.items())
    if (!keys.count(k)) throw ConfigError("unknown training config key '" + k + "'");
  TrainingConfig c;
  try {
    if (j.contains("variant")) c.variant = parse_variant(j.at("variant").get<std::string>());
    c.E = j.value("E", c.E);
    c.h = j.value("h", c.h);
    c.tau = j.value("tau", c.tau);
    c.alpha = j.value("alpha", c.alpha);
    c.lambda = j.value("lambda", c.lambda);
    c.epochs = j.value("epochs", c.epochs);
    c.patience = j.value("patience", c.patience);
    c.batch_size = j.value("batch_size", c.batch_size);
    c.learning_rate = j.value("learning_rate", c.learning_rate);
    c.seed = j.value("seed", c.seed);
    c.l1_on_weights = j.value("l1_on_weights", c.l1_on_weights);
    if (j.contains("monitor")) {
      const std::string m = j.at("monitor");
      if (m == "train") c.monitor = Monitor::kTrain;
      else if (m == "validation") c.monitor = Monitor::kValidation;
      else throw ConfigError("monitor must be 'train' or 'validation'");
    }
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("training config: ") + e.what());
  }
  c.beta_schedule = schedule_from(j.value("beta_schedule", nlohmann::json::object()), c.beta_schedule,
                                  c.epochs, "beta_schedule");
  c.alpha_schedule = schedule_from(j.value("alpha_schedule", nlohmann::json::object()), c.alpha_schedule,
                                   c.epochs, "alpha_schedule");
  c.validate();
  return c;
}

TrainingConfig load_training_config(const std::string& path) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(read_file(path));
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError("cannot parse " + path + ": " + e.what());
  }
  return TrainingConfig::from_json(j);
}

}  // namespace tabgen
