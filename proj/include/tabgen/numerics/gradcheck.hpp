// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <span>
#include <string>

#include "tabgen/numerics/graph.hpp"

namespace tabgen {

struct GradCheckReport {
  double max_rel_err = 0.0;
  bool pass = true;
  std::size_t coordinates = 0;
  std::string worst_param;
  std::size_t worst_index = 0;
  double worst_analytic = 0.0;
  double worst_numeric = 0.0;
};

/// |a - b| / max(|a|, |b|, 1e-8)
double relative_error(double a, double b) noexcept;

/// Compares the analytic gradient of the scalar `root` with central
/// differences (f(x+h) - f(x-h)) / 2h, coordinate-wise over `params`.
/// Re-runs graph.forward() for every probe and restores the parameter
/// values afterwards. `max_coords_per_param` (0 = all) checks an evenly
/// strided subset of large tensors.
GradCheckReport finite_diff_check(Graph& graph, NodeId root, std::span<Parameter* const> params,
                                  double h, double tol, std::size_t max_coords_per_param = 0);

}  // namespace tabgen
