// SPDX-License-Identifier: Apache-2.0
#pragma once
//
// Training objectives. Graph builders return scalar nodes; every term is
// reduced as a mean over batch rows so the weights are batch-size free.

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include <nlohmann/json.hpp>

#include "tabgen/model/cvae.hpp"
#include "tabgen/numerics/graph.hpp"

namespace tabgen {

struct LossBreakdown {
  double ce = 0.0;
  double kld = 0.0;
  double nce = 0.0;
  double l1 = 0.0;
  double beta = 0.0;
  double alpha = 0.0;
  double lambda = 0.0;
  double total = 0.0;

  nlohmann::json to_json() const;
  static LossBreakdown from_json(const nlohmann::json& j);
};

struct ScheduleConfig {
  int cycles = 4;
  double ratio = 0.9;
  double max_value = 1.0;
  int total_epochs = 200;

  void validate() const;  // throws ConfigError
};

/// Per-attribute softmax cross-entropy, summed over attributes, mean over
/// rows. `targets` is N x A row-major.
NodeId reconstruction_ce(Graph& g, std::span<const NodeId> logits, std::span<const std::uint32_t> targets);

/// KL(N(mu_p, var_p) || N(mu_q, var_q)) summed over dimensions.
double kld_two_normals(std::span<const double> mu_p, std::span<const double> var_p,
                       std::span<const double> mu_q, std::span<const double> var_q);

/// KL(q(z|x) || N(0, I)) = -1/2 sum(1 + logvar - mu^2 - exp(logvar)), mean
/// over rows.
NodeId kld_standard(Graph& g, const LatentNodes& dist);

/// InfoNCE over cosine similarities: row i of `positives` is the positive
/// of anchor i and the other rows are its negatives. Needs N >= 2.
NodeId info_nce(Graph& g, NodeId latents, NodeId positives, double tau);

/// Mean over rows of sum |z_j|.
NodeId l1_latent(Graph& g, NodeId z);
/// Sum of |w| over the given weight tensors.
NodeId l1_weights(Graph& g, std::span<Parameter* const> weights);

/// P = ceil(total / cycles), t = epoch mod P,
/// value = max * min(1, t / (ratio * P)).
double cyclic_schedule(int epoch, const ScheduleConfig& cfg);

/// total = ce + beta * kld + alpha * nce + lambda * l1.
LossBreakdown total_loss(double ce, double kld, double nce, double l1, double lambda, double beta,
                         double alpha);

/// Scalar nodes of one objective evaluation. nce is absent when the
/// contrastive term is disabled and l1 when lambda is 0; absent terms are
/// reported as exactly 0.
struct LossNodes {
  NodeId ce;
  NodeId kld;
  std::optional<NodeId> nce;
  std::optional<NodeId> l1;
  NodeId total;
};

struct LossWeights {
  double beta = 1.0;
  double alpha = 0.1;
  double lambda = 1e-3;
  double tau = 0.5;
  bool l1_on_weights = false;
  bool contrastive = true;
};

/// Builds the full objective for a batch. `eps` and `eps_positive` are the
/// N x h standard-normal draws for the anchor and the positive view.
LossNodes build_objective(Graph& g, CvaeModel& model, std::span<const std::uint32_t> rows,
                          std::span<const std::uint8_t> conditions, NodeId eps, NodeId eps_positive,
                          const LossWeights& w);

/// Reads the scalar values of `nodes` back into a breakdown.
LossBreakdown read_breakdown(const Graph& g, const LossNodes& nodes, const LossWeights& w);

}  // namespace tabgen
