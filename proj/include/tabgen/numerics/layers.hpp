// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string>
#include <vector>

#include "tabgen/common/rng.hpp"
#include "tabgen/numerics/graph.hpp"

namespace tabgen {

/// y = x W + b with W [in x out], b [1 x out].
struct Linear {
  Linear() = default;
  Linear(const std::string& name, std::size_t in, std::size_t out);

  Parameter weight;
  Parameter bias;

  std::size_t in_features() const noexcept { return weight.value.rows(); }
  std::size_t out_features() const noexcept { return weight.value.cols(); }

  /// Weights ~ U(-1/sqrt(in), 1/sqrt(in)), bias 0.
  void init_uniform(Rng& rng);

  NodeId apply(Graph& g, NodeId x);
  std::vector<Parameter*> parameters() { return {&weight, &bias}; }
};

}  // namespace tabgen
