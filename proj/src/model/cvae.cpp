// SPDX-License-Identifier: Apache-2.0
#include "tabgen/model/cvae.hpp"

#include <cmath>

#include "tabgen/common/error.hpp"

namespace tabgen {

namespace {

std::size_t ceil_div(std::size_t a, std::size_t b) { return (a + b - 1) / b; }

}  // namespace

std::vector<std::size_t> ModelDims::hidden() const {
  const std::size_t in = encoder_input();
  return {ceil_div(in, 2), ceil_div(in, 4)};
}

void ModelDims::validate() const {
  if (cardinalities.empty()) throw ConfigError("model needs at least one attribute");
  if (embedding < 1) throw ConfigError("embedding size must be >= 1");
  if (latent < 1) throw ConfigError("latent size must be >= 1");
  for (std::size_t a = 0; a < cardinalities.size(); ++a)
    if (cardinalities[a] < 2)
      throw ConfigError("attribute " + std::to_string(a) + " has cardinality < 2");
}

CvaeModel::CvaeModel(ModelDims dims) : dims_(std::move(dims)) {
  dims_.validate();
  const std::size_t e = dims_.embedding;
  const std::size_t h = dims_.latent;
  const auto hid = dims_.hidden();

  for (std::size_t a = 0; a < dims_.attributes(); ++a)
    embeddings_.emplace_back("emb." + std::to_string(a), Tensor({dims_.cardinalities[a], e}));
  condition_ = Parameter("emb.condition", Tensor({2, e}));

  encoder_.emplace_back("enc.0", dims_.encoder_input(), hid[0]);
  encoder_.emplace_back("enc.1", hid[0], hid[1]);
  mu_head_ = Linear("enc.mu", hid[1], h);
  logvar_head_ = Linear("enc.logvar", hid[1], h);

  decoder_.emplace_back("dec.0", h + e, hid[1]);
  decoder_.emplace_back("dec.1", hid[1], hid[0]);
  for (std::size_t a = 0; a < dims_.attributes(); ++a)
    heads_.emplace_back("head." + std::to_string(a), hid[0], dims_.cardinalities[a]);
}

CvaeModel::CvaeModel(ModelDims dims, Rng& rng) : CvaeModel(std::move(dims)) { init(rng); }

void CvaeModel::init(Rng& rng) {
  // Embedding tables are lookups with fan-in 1 in the U(+-1/sqrt(fan_in))
  // rule.
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (auto& t : embeddings_)
    for (double& v : t.value.values()) v = u(rng);
  for (double& v : condition_.value.values()) v = u(rng);
  for (auto& l : encoder_) l.init_uniform(rng);
  mu_head_.init_uniform(rng);
  logvar_head_.init_uniform(rng);
  for (auto& l : decoder_) l.init_uniform(rng);
  for (auto& l : heads_) l.init_uniform(rng);
}

std::vector<Parameter*> CvaeModel::parameters() {
  std::vector<Parameter*> out;
  for (auto& t : embeddings_) out.push_back(&t);
  out.push_back(&condition_);
  auto add = [&](Linear& l) {
    out.push_back(&l.weight);
    out.push_back(&l.bias);
  };
  for (auto& l : encoder_) add(l);
  add(mu_head_);
  add(logvar_head_);
  for (auto& l : decoder_) add(l);
  for (auto& l : heads_) add(l);
  return out;
}

std::vector<const Parameter*> CvaeModel::parameters() const {
  auto ps = const_cast<CvaeModel*>(this)->parameters();
  return {ps.begin(), ps.end()};
}

std::vector<Parameter*> CvaeModel::weight_matrices() {
  std::vector<Parameter*> out;
  for (auto& l : encoder_) out.push_back(&l.weight);
  out.push_back(&mu_head_.weight);
  out.push_back(&logvar_head_.weight);
  for (auto& l : decoder_) out.push_back(&l.weight);
  for (auto& l : heads_) out.push_back(&l.weight);
  return out;
}

Parameter* CvaeModel::find(const std::string& name) {
  for (Parameter* p : parameters())
    if (p->name == name) return p;
  return nullptr;
}

std::size_t CvaeModel::parameter_count() const {
  std::size_t n = 0;
  for (const Parameter* p : parameters()) n += p->value.size();
  return n;
}

NodeId CvaeModel::condition_embedding(Graph& g, std::span<const std::uint8_t> conditions) {
  return g.gather(g.param(condition_), {conditions.begin(), conditions.end()});
}

LatentNodes CvaeModel::encode(Graph& g, std::span<const std::uint32_t> rows,
                              std::span<const std::uint8_t> conditions) {
  const std::size_t n = conditions.size();
  const std::size_t na = dims_.attributes();
  if (n == 0) throw ContractError("encode: empty batch");
  if (rows.size() != n * na)
    throw ShapeError("encode: expected " + std::to_string(n) + " x " + std::to_string(na) + " indices");

  std::vector<NodeId> parts;
  parts.reserve(na + 1);
  std::vector<std::uint32_t> column(n);
  for (std::size_t a = 0; a < na; ++a) {
    for (std::size_t r = 0; r < n; ++r) column[r] = rows[r * na + a];
    parts.push_back(g.gather(g.param(embeddings_[a]), column));
  }
  parts.push_back(condition_embedding(g, conditions));

  NodeId x = g.concat(parts);
  for (auto& l : encoder_) x = g.relu(l.apply(g, x));
  LatentNodes out;
  out.mu = mu_head_.apply(g, x);
  out.logvar = g.clamp(logvar_head_.apply(g, x), kLogvarMin, kLogvarMax);
  return out;
}

NodeId CvaeModel::reparameterize(Graph& g, const LatentNodes& dist, NodeId eps) {
  const NodeId sigma = g.exp(g.affine(dist.logvar, 0.5));
  return g.add(dist.mu, g.mul(sigma, eps));
}

std::vector<NodeId> CvaeModel::decode(Graph& g, NodeId z, std::span<const std::uint8_t> conditions) {
  if (g.value(z).rows() != conditions.size())
    throw ShapeError("decode: latent rows do not match condition count");
  const NodeId parts[] = {z, condition_embedding(g, conditions)};
  NodeId x = g.concat(parts);
  for (auto& l : decoder_) x = g.relu(l.apply(g, x));
  std::vector<NodeId> logits;
  logits.reserve(heads_.size());
  for (auto& head : heads_) logits.push_back(head.apply(g, x));
  return logits;
}

ForwardNodes CvaeModel::forward(Graph& g, std::span<const std::uint32_t> rows,
                                std::span<const std::uint8_t> conditions, NodeId eps) {
  ForwardNodes out;
  out.dist = encode(g, rows, conditions);
  out.z = reparameterize(g, out.dist, eps);
  out.logits = decode(g, out.z, conditions);
  return out;
}

CvaeModel::Posterior CvaeModel::posterior(std::span<const std::uint32_t> rows,
                                          std::span<const std::uint8_t> conditions) {
  Graph g;
  const LatentNodes d = encode(g, rows, conditions);
  return {g.value(d.mu), g.value(d.logvar)};
}

CvaeModel::Posterior CvaeModel::posterior(const Dataset& data) {
  return posterior(data.cells(), data.conditions());
}

std::vector<Tensor> CvaeModel::decode_logits(const Tensor& z, std::span<const std::uint8_t> conditions) {
  if (z.rank() != 2 || z.cols() != dims_.latent)
    throw ShapeError("decode_logits: expected N x " + std::to_string(dims_.latent) + " latent, got " +
                     shape_string(z.shape()));
  Graph g;
  const NodeId zn = g.input(z);
  std::vector<Tensor> out;
  for (NodeId id : decode(g, zn, conditions)) out.push_back(g.value(id));
  return out;
}

}  // namespace tabgen
