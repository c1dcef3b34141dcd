// SPDX-License-Identifier: Apache-2.0
#include "tabgen/losses/losses.hpp"

#include <algorithm>
#include <cmath>

#include "tabgen/common/error.hpp"

namespace tabgen {

nlohmann::json LossBreakdown::to_json() const {
  return {{"ce", ce},     {"kld", kld},       {"nce", nce},       {"l1", l1},
          {"beta", beta}, {"alpha", alpha}, {"lambda", lambda}, {"total", total}};
}

LossBreakdown LossBreakdown::from_json(const nlohmann::json& j) {
  LossBreakdown b;
  b.ce = j.at("ce");
  b.kld = j.at("kld");
  b.nce = j.at("nce");
  b.l1 = j.at("l1");
  b.beta = j.at("beta");
  b.alpha = j.at("alpha");
  b.lambda = j.at("lambda");
  b.total = j.at("total");
  return b;
}

void ScheduleConfig::validate() const {
  if (cycles < 1) throw ConfigError("schedule: cycles must be >= 1");
  if (!(ratio > 0.0 && ratio <= 1.0)) throw ConfigError("schedule: ratio must be in (0, 1]");
  if (total_epochs < cycles) throw ConfigError("schedule: total_epochs must be >= cycles");
  if (!std::isfinite(max_value)) throw ConfigError("schedule: max_value must be finite");
}

NodeId reconstruction_ce(Graph& g, std::span<const NodeId> logits, std::span<const std::uint32_t> targets) {
  if (logits.empty()) throw ContractError("reconstruction_ce: no attributes");
  const std::size_t na = logits.size();
  const std::size_t n = g.value(logits[0]).rows();
  if (targets.size() != n * na) throw ShapeError("reconstruction_ce: target shape mismatch");

  std::optional<NodeId> acc;
  for (std::size_t a = 0; a < na; ++a) {
    const Tensor& lv = g.value(logits[a]);
    if (lv.rows() != n) throw ShapeError("reconstruction_ce: logits row mismatch");
    Tensor onehot({n, lv.cols()});
    for (std::size_t r = 0; r < n; ++r) {
      const std::uint32_t t = targets[r * na + a];
      if (t >= lv.cols()) throw EncodingError("reconstruction_ce: target index out of range");
      onehot(r, t) = 1.0;
    }
    const NodeId picked = g.sum(g.mul(g.log_softmax(logits[a]), g.input(std::move(onehot))));
    acc = acc ? g.add(*acc, picked) : picked;
  }
  return g.affine(*acc, -1.0 / static_cast<double>(n));
}

double kld_two_normals(std::span<const double> mu_p, std::span<const double> var_p,
                       std::span<const double> mu_q, std::span<const double> var_q) {
  const std::size_t d = mu_p.size();
  if (var_p.size() != d || mu_q.size() != d || var_q.size() != d)
    throw ShapeError("kld_two_normals: dimension mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < d; ++i) {
    if (!(var_p[i] > 0.0) || !(var_q[i] > 0.0)) throw ContractError("kld_two_normals: variance must be > 0");
    const double diff = mu_p[i] - mu_q[i];
    s += 0.5 * (diff * diff / var_q[i] + var_p[i] / var_q[i] - std::log(var_p[i] / var_q[i]) - 1.0);
  }
  return s;
}

NodeId kld_standard(Graph& g, const LatentNodes& dist) {
  const double n = static_cast<double>(g.value(dist.mu).rows());
  const NodeId inner =
      g.sub(g.sub(g.affine(dist.logvar, 1.0, 1.0), g.mul(dist.mu, dist.mu)), g.exp(dist.logvar));
  return g.affine(g.sum(inner), -0.5 / n);
}

NodeId info_nce(Graph& g, NodeId latents, NodeId positives, double tau) {
  if (!(tau > 0.0)) throw ContractError("info_nce: tau must be > 0");
  const Tensor& z = g.value(latents);
  const std::size_t n = z.rows();
  if (n < 2) throw ContractError("info_nce: needs at least 2 rows");
  if (!z.same_shape(g.value(positives))) throw ShapeError("info_nce: latent/positive shape mismatch");

  const NodeId sim = g.matmul_nt(g.row_normalize(latents), g.row_normalize(positives));
  const NodeId logp = g.log_softmax(g.affine(sim, 1.0 / tau));
  Tensor eye({n, n});
  for (std::size_t i = 0; i < n; ++i) eye(i, i) = 1.0;
  return g.affine(g.sum(g.mul(logp, g.input(std::move(eye)))), -1.0 / static_cast<double>(n));
}

NodeId l1_latent(Graph& g, NodeId z) {
  return g.affine(g.l1_norm(z), 1.0 / static_cast<double>(g.value(z).rows()));
}

NodeId l1_weights(Graph& g, std::span<Parameter* const> weights) {
  if (weights.empty()) throw ContractError("l1_weights: no tensors");
  std::optional<NodeId> acc;
  for (Parameter* p : weights) {
    const NodeId t = g.l1_norm(g.param(*p));
    acc = acc ? g.add(*acc, t) : t;
  }
  return *acc;
}

double cyclic_schedule(int epoch, const ScheduleConfig& cfg) {
  cfg.validate();
  if (epoch < 0 || epoch >= cfg.total_epochs) throw ContractError("cyclic_schedule: epoch out of range");
  const int period = (cfg.total_epochs + cfg.cycles - 1) / cfg.cycles;
  const int t = epoch % period;
  return cfg.max_value * std::min(1.0, static_cast<double>(t) / (cfg.ratio * period));
}

LossBreakdown total_loss(double ce, double kld, double nce, double l1, double lambda, double beta,
                         double alpha) {
  LossBreakdown b{ce, kld, nce, l1, beta, alpha, lambda, 0.0};
  b.total = ce + beta * kld + alpha * nce + lambda * l1;
  return b;
}

LossNodes build_objective(Graph& g, CvaeModel& model, std::span<const std::uint32_t> rows,
                          std::span<const std::uint8_t> conditions, NodeId eps, NodeId eps_positive,
                          const LossWeights& w) {
  const ForwardNodes f = model.forward(g, rows, conditions, eps);
  LossNodes out;
  out.ce = reconstruction_ce(g, f.logits, rows);
  out.kld = kld_standard(g, f.dist);
  NodeId total = g.add(out.ce, g.affine(out.kld, w.beta));
  if (w.contrastive) {
    const NodeId z_pos = CvaeModel::reparameterize(g, f.dist, eps_positive);
    out.nce = info_nce(g, f.z, z_pos, w.tau);
    total = g.add(total, g.affine(*out.nce, w.alpha));
  }
  if (w.lambda != 0.0) {
    if (w.l1_on_weights) {
      const auto ws = model.weight_matrices();
      out.l1 = l1_weights(g, ws);
    } else {
      out.l1 = l1_latent(g, f.z);
    }
    total = g.add(total, g.affine(*out.l1, w.lambda));
  }
  out.total = total;
  return out;
}

LossBreakdown read_breakdown(const Graph& g, const LossNodes& nodes, const LossWeights& w) {
  LossBreakdown b;
  b.ce = g.value(nodes.ce).item();
  b.kld = g.value(nodes.kld).item();
  b.nce = nodes.nce ? g.value(*nodes.nce).item() : 0.0;
  b.l1 = nodes.l1 ? g.value(*nodes.l1).item() : 0.0;
  b.beta = w.beta;
  b.alpha = w.alpha;
  b.lambda = w.lambda;
  b.total = g.value(nodes.total).item();
  return b;
}

}  // namespace tabgen
