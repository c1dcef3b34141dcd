// SPDX-License-Identifier: Apache-2.0
#include "tabgen/eval/metrics.hpp"

#include <optional>
#include <vector>

#include "tabgen/common/error.hpp"
#include "tabgen/dataprep/preprocess.hpp"

namespace tabgen {

ConfusionCounts confusion(std::span<const std::uint8_t> predictions, std::span<const std::uint8_t> labels) {
  if (predictions.size() != labels.size()) throw ContractError("predictions and labels differ in length");
  if (labels.empty()) throw ContractError("f1 of an empty prediction set");
  ConfusionCounts c;
  c.total = labels.size();
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const std::uint8_t y = labels[i], p = predictions[i];
    if (y > 1 || p > 1) throw ContractError("labels must be binary");
    ++c.support[y];
    if (p == y) {
      ++c.tp[y];
      ++c.tn[1 - y];
    } else {
      ++c.fn[y];
      ++c.fp[p];
    }
  }
  return c;
}

F1Scores f1_from_counts(const ConfusionCounts& c) {
  F1Scores s;
  s.support = c.support;
  for (std::size_t k = 0; k < 2; ++k) {
    const double tp = static_cast<double>(c.tp[k]);
    const std::size_t pp = c.tp[k] + c.fp[k], ap = c.tp[k] + c.fn[k];
    s.precision[k] = pp ? tp / static_cast<double>(pp) : 0.0;
    s.recall[k] = ap ? tp / static_cast<double>(ap) : 0.0;
    const double pr = s.precision[k] + s.recall[k];
    s.f1[k] = pr > 0.0 ? 2.0 * s.precision[k] * s.recall[k] / pr : 0.0;
  }
  const double n = static_cast<double>(c.total);
  s.weighted = 0.0;
  for (std::size_t k = 0; k < 2; ++k) s.weighted += static_cast<double>(c.support[k]) / n * s.f1[k];
  return s;
}

F1Scores f1_scores(std::span<const std::uint8_t> predictions, std::span<const std::uint8_t> labels) {
  return f1_from_counts(confusion(predictions, labels));
}

nlohmann::json F1Scores::to_json() const {
  return {{"f1_risk", f1[1]},
          {"f1_non_risk", f1[0]},
          {"f1_weighted", weighted},
          {"precision", precision},
          {"recall", recall},
          {"support", support}};
}

double ConsistencyResult::accuracy(Condition c) const noexcept {
  const auto k = static_cast<std::size_t>(c);
  return determinate[k] ? static_cast<double>(consistent[k]) / static_cast<double>(determinate[k]) : 0.0;
}

nlohmann::json ConsistencyResult::to_json() const {
  nlohmann::json j;
  for (Condition c : {Condition::kNonRisk, Condition::kRisk}) {
    const auto k = static_cast<std::size_t>(c);
    j[c == Condition::kRisk ? "risk" : "non-risk"] = {{"accuracy", accuracy(c)},
                                                      {"consistent", consistent[k]},
                                                      {"determinate", determinate[k]},
                                                      {"indeterminate", indeterminate[k]}};
  }
  return j;
}

ConsistencyResult class_consistency(const Dataset& data) {
  const Schema& s = data.schema();
  struct Pair {
    const AttributeSpec* start;
    const AttributeSpec* end;
    std::size_t cs, ce;
  };
  std::vector<Pair> pairs;
  for (const auto& e : s.ergometry) {
    const std::size_t cs = s.column_index(e.start), ce = s.column_index(e.end);
    const auto& a = s.columns[cs];
    const auto& b = s.columns[ce];
    if (!a.is_binned() || !b.is_binned() || a.midpoints.empty() || b.midpoints.empty())
      throw SchemaError("ergometry column without bin midpoints: " + e.name);
    pairs.push_back({&a, &b, cs, ce});
  }
  auto midpoint = [](const AttributeSpec& a, std::uint32_t v) -> std::optional<double> {
    if (a.missing_index && v == *a.missing_index) return std::nullopt;
    if (v >= a.midpoints.size()) return std::nullopt;
    return a.midpoints[v];
  };

  ConsistencyResult r;
  std::vector<std::optional<bool>> flags(pairs.size());
  for (std::size_t i = 0; i < data.rows(); ++i) {
    for (std::size_t p = 0; p < pairs.size(); ++p)
      flags[p] = improvement_flag(midpoint(*pairs[p].start, data.at(i, pairs[p].cs)),
                                  midpoint(*pairs[p].end, data.at(i, pairs[p].ce)), s.improvement_threshold);
    const auto k = static_cast<std::size_t>(data.condition(i));
    const auto implied = condition_from_flags(flags);
    if (!implied) {
      ++r.indeterminate[k];
      continue;
    }
    ++r.determinate[k];
    if (*implied == data.condition(i)) ++r.consistent[k];
  }
  return r;
}

}  // namespace tabgen
