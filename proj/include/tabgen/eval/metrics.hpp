// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <cstdint>
#include <span>

#include <nlohmann/json.hpp>

#include "tabgen/dataprep/dataset.hpp"

namespace tabgen {

/// Per-class one-vs-rest counts, indexed by Condition.
struct ConfusionCounts {
  std::array<std::size_t, 2> tp{}, fp{}, fn{}, tn{};
  std::array<std::size_t, 2> support{};  // true-label counts
  std::size_t total = 0;
};

/// Labels and predictions are 0 (non-risk) or 1 (risk).
ConfusionCounts confusion(std::span<const std::uint8_t> predictions, std::span<const std::uint8_t> labels);

struct F1Scores {
  std::array<double, 2> precision{}, recall{}, f1{};
  std::array<std::size_t, 2> support{};
  double weighted = 0.0;

  double risk() const noexcept { return f1[1]; }
  nlohmann::json to_json() const;
};

/// Zero denominators give 0 for precision, recall and F1. Weighted F1 is
/// sum_c (support_c / n) F1_c. Throws ContractError on empty or
/// mismatched input, or labels outside {0, 1}.
F1Scores f1_scores(std::span<const std::uint8_t> predictions, std::span<const std::uint8_t> labels);
F1Scores f1_from_counts(const ConfusionCounts& c);

struct ConsistencyResult {
  std::array<std::size_t, 2> consistent{}, determinate{}, indeterminate{};

  /// consistent / determinate, or 0 when nothing is determinate.
  double accuracy(Condition c) const noexcept;
  nlohmann::json to_json() const;
};

/// Whether each record's ergometry bins agree with its label under the
/// improvement rule, with bin midpoints standing in for raw values. A
/// record whose pairs are all missing (or start midpoints all zero) is
/// indeterminate and left out of the accuracy.
ConsistencyResult class_consistency(const Dataset& data);

}  // namespace tabgen
