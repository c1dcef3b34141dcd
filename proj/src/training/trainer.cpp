// SPDX-License-Identifier: Apache-2.0
#include "tabgen/training/trainer.hpp"

#include <cmath>
#include <numeric>
#include <random>

#include "tabgen/common/error.hpp"
#include "tabgen/common/rng.hpp"
#include "tabgen/dataprep/preprocess.hpp"
#include "tabgen/training/adam.hpp"

namespace tabgen {

nlohmann::json TrainingHistory::to_json() const {
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& e : epochs) {
    nlohmann::json r = e.train.to_json();
    r["epoch"] = e.epoch;
    r["monitored"] = e.monitored;
    if (e.validation) r["validation"] = *e.validation;
    rows.push_back(std::move(r));
  }
  return {{"epochs", rows}, {"stopped_early", stopped_early}, {"best_epoch", best_epoch}, {"best_loss", best_loss}};
}

TrainingHistory TrainingHistory::from_json(const nlohmann::json& j) {
  TrainingHistory h;
  for (const auto& r : j.at("epochs")) {
    EpochRecord e;
    e.epoch = r.at("epoch");
    e.train = LossBreakdown::from_json(r);
    e.monitored = r.at("monitored");
    if (r.contains("validation")) e.validation = r.at("validation").get<double>();
    h.epochs.push_back(e);
  }
  h.stopped_early = j.at("stopped_early");
  h.best_epoch = j.at("best_epoch");
  h.best_loss = j.at("best_loss");
  return h;
}

ModelDims dims_for(const Schema& schema, const TrainingConfig& cfg) {
  ModelDims d;
  d.cardinalities = schema.cardinalities();
  d.embedding = cfg.E;
  d.latent = cfg.h;
  return d;
}

namespace {

struct Batch {
  std::vector<std::uint32_t> rows;
  std::vector<std::uint8_t> conditions;
};

Batch gather_batch(const Dataset& data, std::span<const std::size_t> idx) {
  Batch b;
  b.rows.reserve(idx.size() * data.cols());
  b.conditions.reserve(idx.size());
  for (std::size_t i : idx) {
    const auto r = data.row(i);
    b.rows.insert(b.rows.end(), r.begin(), r.end());
    b.conditions.push_back(static_cast<std::uint8_t>(data.condition(i)));
  }
  return b;
}

Tensor standard_normal(std::size_t n, std::size_t h, Rng& rng) {
  std::normal_distribution<double> nd(0.0, 1.0);
  Tensor t({n, h});
  for (double& v : t.values()) v = nd(rng);
  return t;
}

// Row-weighted mean of forward-only losses over the given batches.
LossBreakdown forward_mean(CvaeModel& model, const Dataset& data, const LossWeights& w,
                           const std::vector<std::vector<std::size_t>>& batches, std::uint64_t seed,
                           std::string_view stream, int epoch) {
  LossBreakdown acc;
  std::size_t total_rows = 0;
  for (std::size_t b = 0; b < batches.size(); ++b) {
    const Batch batch = gather_batch(data, batches[b]);
    const std::size_t n = batch.conditions.size();
    Rng rng = make_rng(seed, stream, {static_cast<std::uint64_t>(epoch), b});
    const std::size_t h = model.dims().latent;
    Graph g;
    const NodeId eps = g.input(standard_normal(n, h, rng));
    const NodeId eps_pos = g.input(standard_normal(n, h, rng));
    const LossNodes nodes = build_objective(g, model, batch.rows, batch.conditions, eps, eps_pos, w);
    const LossBreakdown lb = read_breakdown(g, nodes, w);
    const double wgt = static_cast<double>(n);
    acc.ce += wgt * lb.ce;
    acc.kld += wgt * lb.kld;
    acc.nce += wgt * lb.nce;
    acc.l1 += wgt * lb.l1;
    acc.total += wgt * lb.total;
    total_rows += n;
  }
  const double inv = 1.0 / static_cast<double>(total_rows);
  acc.ce *= inv;
  acc.kld *= inv;
  acc.nce *= inv;
  acc.l1 *= inv;
  acc.total *= inv;
  acc.beta = w.beta;
  acc.alpha = w.alpha;
  acc.lambda = w.lambda;
  return acc;
}

std::vector<std::vector<std::size_t>> sequential_batches(std::size_t n, std::size_t bs) {
  std::vector<std::vector<std::size_t>> out;
  for (std::size_t i = 0; i < n; i += bs) {
    std::vector<std::size_t> b(std::min(bs, n - i));
    std::iota(b.begin(), b.end(), i);
    out.push_back(std::move(b));
  }
  if (out.size() >= 2 && out.back().size() < 2) {
    auto last = std::move(out.back());
    out.pop_back();
    out.back().insert(out.back().end(), last.begin(), last.end());
  }
  return out;
}

std::vector<Tensor> snapshot(CvaeModel& model) {
  std::vector<Tensor> s;
  for (const Parameter* p : model.parameters()) s.push_back(p->value);
  return s;
}

void restore(CvaeModel& model, const std::vector<Tensor>& s) {
  const auto ps = model.parameters();
  for (std::size_t i = 0; i < ps.size(); ++i) ps[i]->value = s[i];
}

}  // namespace

LossBreakdown evaluate_epoch_loss(CvaeModel& model, const Dataset& data, const TrainingConfig& cfg, int epoch) {
  const auto batches = make_batches(data.rows(), cfg.batch_size, cfg.seed, static_cast<std::uint64_t>(epoch));
  return forward_mean(model, data, cfg.weights_at(epoch), batches, cfg.seed, "eval-eps", epoch);
}

LossBreakdown evaluate_loss(CvaeModel& model, const Dataset& data, const TrainingConfig& cfg, int epoch) {
  if (data.rows() < 2) throw DataError("loss evaluation needs at least 2 records");
  return forward_mean(model, data, cfg.weights_at(epoch), sequential_batches(data.rows(), cfg.batch_size),
                      cfg.seed, "val-eps", epoch);
}

TrainResult train(const Dataset& data, const TrainingConfig& cfg, const Dataset* validation,
                  const EpochCallback& on_epoch) {
  cfg.validate();
  if (data.rows() < 2) throw DataError("training needs at least 2 records");
  if (data.count(Condition::kRisk) == 0 || data.count(Condition::kNonRisk) == 0)
    throw DataError("training data must contain both classes");
  if (cfg.monitor == Monitor::kValidation && (validation == nullptr || validation->rows() < 2))
    throw ConfigError("validation monitoring needs a validation set with at least 2 records");

  Rng init_rng = make_rng(cfg.seed, "init");
  TrainResult result{CvaeModel(dims_for(data.schema(), cfg), init_rng), {}};
  CvaeModel& model = result.model;
  const auto params = model.parameters();
  AdamState adam = AdamState::for_params(params);
  const AdamConfig adam_cfg{cfg.learning_rate};
  const std::size_t h = model.dims().latent;

  TrainingHistory& hist = result.history;
  std::vector<Tensor> best_weights;
  int since_best = 0;

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    const LossWeights w = cfg.weights_at(epoch);
    const auto batches = make_batches(data.rows(), cfg.batch_size, cfg.seed, static_cast<std::uint64_t>(epoch));
    for (std::size_t b = 0; b < batches.size(); ++b) {
      const Batch batch = gather_batch(data, batches[b]);
      const std::size_t n = batch.conditions.size();
      Rng rng = make_rng(cfg.seed, "eps", {static_cast<std::uint64_t>(epoch), b});
      try {
        Graph g;
        const NodeId eps = g.input(standard_normal(n, h, rng));
        const NodeId eps_pos = g.input(standard_normal(n, h, rng));
        const LossNodes nodes = build_objective(g, model, batch.rows, batch.conditions, eps, eps_pos, w);
        g.backward(nodes.total);
        for (const Parameter* p : params)
          if (!p->grad.all_finite()) throw NumericError("non-finite gradient in " + p->name);
      } catch (const NumericError& e) {
        throw NumericError("epoch " + std::to_string(epoch) + " batch " + std::to_string(b) + ": " + e.what());
      }
      adam_step(params, adam, adam_cfg);
    }

    EpochRecord rec;
    rec.epoch = epoch;
    try {
      rec.train = forward_mean(model, data, w, batches, cfg.seed, "eval-eps", epoch);
      if (validation != nullptr && validation->rows() >= 2) rec.validation = evaluate_loss(model, *validation, cfg, epoch).total;
    } catch (const NumericError& e) {
      throw NumericError("epoch " + std::to_string(epoch) + " evaluation: " + e.what());
    }
    rec.monitored = cfg.monitor == Monitor::kValidation ? *rec.validation : rec.train.total;
    hist.epochs.push_back(rec);
    if (on_epoch) on_epoch(rec);

    if (hist.best_epoch < 0 || rec.monitored < hist.best_loss) {
      hist.best_epoch = epoch;
      hist.best_loss = rec.monitored;
      best_weights = snapshot(model);
      since_best = 0;
    } else if (++since_best >= cfg.patience) {
      hist.stopped_early = true;
      break;
    }
  }
  restore(model, best_weights);
  return result;
}

}  // namespace tabgen
