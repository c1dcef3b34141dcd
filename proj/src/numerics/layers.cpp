// SPDX-License-Identifier: Apache-2.0
#include "tabgen/numerics/layers.hpp"

#include <cmath>

namespace tabgen {

Linear::Linear(const std::string& name, std::size_t in, std::size_t out)
    : weight(name + ".weight", Tensor({in, out})), bias(name + ".bias", Tensor({1, out})) {}

void Linear::init_uniform(Rng& rng) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(in_features()));
  std::uniform_real_distribution<double> u(-bound, bound);
  for (double& w : weight.value.values()) w = u(rng);
  bias.value.fill(0.0);
}

NodeId Linear::apply(Graph& g, NodeId x) {
  return g.add_bias(g.matmul(x, g.param(weight)), g.param(bias));
}

}  // namespace tabgen
