// SPDX-License-Identifier: Apache-2.0
#pragma once
// Small categorical corpora shared by the unit tests.

#include <memory>
#include <random>
#include <string>
#include <vector>

#include "tabgen/dataprep/dataset.hpp"

namespace toy {

inline tabgen::AttributeSpec categorical(std::string name, std::uint32_t values) {
  tabgen::AttributeSpec a;
  a.name = std::move(name);
  a.kind = tabgen::AttributeKind::kCategorical;
  for (std::uint32_t i = 0; i < values; ++i) a.categories.push_back("v" + std::to_string(i));
  a.categories.emplace_back(tabgen::kMissingLabel);
  a.missing_index = values;
  return a;
}

inline std::shared_ptr<const tabgen::Schema> schema(const std::vector<std::uint32_t>& values) {
  tabgen::Schema s;
  for (std::size_t i = 0; i < values.size(); ++i) s.columns.push_back(categorical("a" + std::to_string(i), values[i]));
  s.condition.name = "risk";
  s.condition.kind = tabgen::AttributeKind::kBinary;
  s.condition.role = tabgen::Role::kCondition;
  s.condition.categories = {"non-risk", "risk"};
  s.validate();
  return std::make_shared<const tabgen::Schema>(std::move(s));
}

/// Records whose attributes lean towards low values for non-risk and high
/// values for risk; about 40% risk.
inline tabgen::Dataset corpus(std::size_t n, std::uint64_t seed,
                              const std::vector<std::uint32_t>& values = {3, 4, 2, 5, 3, 4}) {
  auto s = schema(values);
  std::mt19937_64 rng(seed);
  std::bernoulli_distribution is_risk(0.4), follow(0.8), missing(0.05);
  tabgen::Dataset d(s);
  std::vector<std::uint32_t> row(values.size());
  for (std::size_t r = 0; r < n; ++r) {
    const bool risk = is_risk(rng);
    for (std::size_t a = 0; a < values.size(); ++a) {
      const std::uint32_t v = values[a];
      if (missing(rng)) row[a] = v;
      else if (follow(rng)) row[a] = risk ? v - 1 - static_cast<std::uint32_t>(rng() % 2 * (v > 2)) : static_cast<std::uint32_t>(rng() % 2 * (v > 2));
      else row[a] = static_cast<std::uint32_t>(rng() % v);
    }
    d.push_back(row, risk ? tabgen::Condition::kRisk : tabgen::Condition::kNonRisk);
  }
  return d;
}

}  // namespace toy
