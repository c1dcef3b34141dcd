// SPDX-License-Identifier: Apache-2.0
#include "tabgen/training/adam.hpp"

#include <cmath>

#include "tabgen/common/error.hpp"

namespace tabgen {

AdamState AdamState::for_params(std::span<Parameter* const> params) {
  AdamState s;
  for (const Parameter* p : params) {
    s.m.emplace_back(p->value.shape());
    s.v.emplace_back(p->value.shape());
  }
  return s;
}

void adam_step(std::span<Parameter* const> params, AdamState& state, const AdamConfig& cfg) {
  if (state.m.size() != params.size() || state.v.size() != params.size())
    throw ContractError("adam_step: state does not match parameter list");
  const std::int64_t t = ++state.t;
  const double c1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(t));
  const double c2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(t));
  for (std::size_t i = 0; i < params.size(); ++i) {
    Parameter& p = *params[i];
    Tensor& m = state.m[i];
    Tensor& v = state.v[i];
    if (!m.same_shape(p.value) || !p.grad.same_shape(p.value))
      throw ShapeError("adam_step: moment shape mismatch for " + p.name);
    double* x = p.value.data();
    const double* g = p.grad.data();
    double* mp = m.data();
    double* vp = v.data();
    for (std::size_t k = 0; k < p.value.size(); ++k) {
      mp[k] = cfg.beta1 * mp[k] + (1.0 - cfg.beta1) * g[k];
      vp[k] = cfg.beta2 * vp[k] + (1.0 - cfg.beta2) * g[k] * g[k];
      x[k] -= cfg.lr * (mp[k] / c1) / (std::sqrt(vp[k] / c2) + cfg.eps);
    }
  }
}

}  // namespace tabgen
