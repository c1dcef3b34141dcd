// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "tabgen/numerics/tensor.hpp"

namespace tabgen {

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

/// First and second moments, one tensor per parameter.
struct AdamState {
  std::vector<Tensor> m;
  std::vector<Tensor> v;
  std::int64_t t = 0;  // steps taken

  static AdamState for_params(std::span<Parameter* const> params);
};

/// One bias-corrected Adam update with step index state.t + 1:
///   m = b1 m + (1-b1) g,  v = b2 v + (1-b2) g^2,
///   x -= lr * (m / (1-b1^t)) / (sqrt(v / (1-b2^t)) + eps).
void adam_step(std::span<Parameter* const> params, AdamState& state, const AdamConfig& cfg);

}  // namespace tabgen
