// SPDX-License-Identifier: Apache-2.0
#include "tabgen/sampling/sampler.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "tabgen/common/error.hpp"
#include "tabgen/simd/kernels.hpp"
#include "tabgen/training/checkpoint.hpp"

namespace tabgen {

std::string to_string(DecodeMode m) { return m == DecodeMode::kSample ? "sample" : "argmax"; }

DecodeMode parse_decode_mode(const std::string& s) {
  if (s == "sample") return DecodeMode::kSample;
  if (s == "argmax") return DecodeMode::kArgmax;
  throw ConfigError("decode mode must be 'sample' or 'argmax', got '" + s + "'");
}

std::string condition_label(Condition c) { return c == Condition::kRisk ? "risk" : "non-risk"; }

Condition parse_condition(const std::string& s) {
  if (s == "risk") return Condition::kRisk;
  if (s == "non-risk") return Condition::kNonRisk;
  throw ConfigError("class must be 'risk' or 'non-risk', got '" + s + "'");
}

nlohmann::json GenerationRequest::to_json() const {
  return {{"condition", condition_label(condition)}, {"count", count}, {"k", k}, {"seed", seed}, {"mode", to_string(mode)}};
}

LatentBank build_bank(CvaeModel& model, const Dataset& data, Condition condition) {
  LatentBank bank;
  bank.condition = condition;
  bank.source_rows = data.indices_of(condition);
  if (bank.source_rows.size() < 2)
    throw BankError("class " + condition_label(condition) + " has " + std::to_string(bank.source_rows.size()) +
                    " records; a latent bank needs at least 2");
  const Dataset subset = data.subset(bank.source_rows);
  bank.z = model.posterior(subset).mu;
  if (!bank.z.all_finite()) throw NumericError("latent bank contains non-finite values");
  return bank;
}

std::vector<std::size_t> knn(const LatentBank& bank, std::size_t index, std::size_t k) {
  const std::size_t m = bank.size();
  if (index >= m) throw ContractError("knn: index out of range");
  if (k < 1 || k >= m) throw ContractError("knn: need 1 <= k < bank size");
  const auto& kern = simd::kernels();
  const std::size_t h = bank.z.cols();
  std::vector<std::pair<double, std::size_t>> d;
  d.reserve(m - 1);
  for (std::size_t j = 0; j < m; ++j)
    if (j != index) d.emplace_back(kern.sqdist(h, bank.z.row(index).data(), bank.z.row(j).data()), j);
  std::partial_sort(d.begin(), d.begin() + static_cast<long>(k), d.end());
  std::vector<std::size_t> out(k);
  for (std::size_t i = 0; i < k; ++i) out[i] = d[i].second;
  return out;
}

std::vector<double> smote_interpolate(std::span<const double> zi, std::span<const double> zj, double u) {
  if (zi.size() != zj.size()) throw ShapeError("smote_interpolate: dimension mismatch");
  if (!(u >= 0.0 && u <= 1.0)) throw ContractError("smote_interpolate: u must be in [0, 1]");
  if (u == 1.0) return {zj.begin(), zj.end()};
  std::vector<double> z(zi.size());
  for (std::size_t i = 0; i < z.size(); ++i) {
    // Rounding in zj - zi can step just past the far endpoint.
    const auto [lo, hi] = std::minmax(zi[i], zj[i]);
    z[i] = std::clamp(zi[i] + u * (zj[i] - zi[i]), lo, hi);
  }
  return z;
}

std::vector<std::uint32_t> decode_rows(const std::vector<Tensor>& logits, DecodeMode mode, Rng& rng) {
  if (logits.empty()) return {};
  const std::size_t n = logits[0].rows();
  const std::size_t na = logits.size();
  std::vector<std::uint32_t> rows(n * na);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::vector<double> p;
  for (std::size_t r = 0; r < n; ++r) {
    for (std::size_t a = 0; a < na; ++a) {
      const auto lr = logits[a].row(r);
      std::size_t pick = 0;
      if (mode == DecodeMode::kArgmax) {
        pick = static_cast<std::size_t>(std::max_element(lr.begin(), lr.end()) - lr.begin());
      } else {
        const double mx = *std::max_element(lr.begin(), lr.end());
        p.assign(lr.size(), 0.0);
        double s = 0.0;
        for (std::size_t c = 0; c < lr.size(); ++c) s += p[c] = std::exp(lr[c] - mx);
        double target = unif(rng) * s;
        pick = lr.size() - 1;
        for (std::size_t c = 0; c < lr.size(); ++c) {
          target -= p[c];
          if (target < 0.0) {
            pick = c;
            break;
          }
        }
      }
      rows[r * na + a] = static_cast<std::uint32_t>(pick);
    }
  }
  return rows;
}

namespace {

const LatentBank& find_bank(std::span<const LatentBank> banks, Condition c) {
  for (const auto& b : banks)
    if (b.condition == c) return b;
  throw BankError("no latent bank for class " + condition_label(c));
}

void append_decoded(Dataset& out, CvaeModel& model, const Tensor& z, Condition c, DecodeMode mode, Rng& rng) {
  const std::vector<std::uint8_t> conds(z.rows(), static_cast<std::uint8_t>(c));
  const auto rows = decode_rows(model.decode_logits(z, conds), mode, rng);
  const std::size_t na = model.dims().attributes();
  for (std::size_t r = 0; r < z.rows(); ++r) out.push_back(std::span(rows).subspan(r * na, na), c);
}

void check_request(const CvaeModel& model, const Schema& schema, const GenerationRequest& req) {
  if (req.count < 1) throw ConfigError("count must be >= 1");
  if (schema.cardinalities() != model.dims().cardinalities) throw SchemaError("schema does not match the model");
}

}  // namespace

Dataset generate(CvaeModel& model, std::shared_ptr<const Schema> schema, std::span<const LatentBank> banks,
                 const GenerationRequest& req) {
  check_request(model, *schema, req);
  const LatentBank& bank = find_bank(banks, req.condition);
  if (bank.size() < 2) throw BankError("latent bank for " + condition_label(req.condition) + " has fewer than 2 rows");
  if (req.k < 1 || req.k >= bank.size())
    throw BankError("k = " + std::to_string(req.k) + " needs a bank of more than k rows (bank has " +
                    std::to_string(bank.size()) + ")");

  std::vector<std::vector<std::size_t>> neighbours(bank.size());
  for (std::size_t i = 0; i < bank.size(); ++i) neighbours[i] = knn(bank, i, req.k);

  const std::size_t h = bank.z.cols();
  Dataset out(schema);
  for (std::size_t start = 0, shard = 0; start < req.count; start += kGenerationShard, ++shard) {
    const std::size_t n = std::min(kGenerationShard, req.count - start);
    Rng rng = make_rng(req.seed, "generate", {shard});
    std::uniform_int_distribution<std::size_t> pick_row(0, bank.size() - 1), pick_nb(0, req.k - 1);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    Tensor z({n, h});
    for (std::size_t r = 0; r < n; ++r) {
      const std::size_t i = pick_row(rng);
      const std::size_t j = neighbours[i][pick_nb(rng)];
      const auto zn = smote_interpolate(bank.z.row(i), bank.z.row(j), unif(rng));
      std::copy(zn.begin(), zn.end(), z.row(r).begin());
    }
    append_decoded(out, model, z, req.condition, req.mode, rng);
  }
  return out;
}

Dataset prior_sample(CvaeModel& model, std::shared_ptr<const Schema> schema, const GenerationRequest& req) {
  check_request(model, *schema, req);
  const std::size_t h = model.dims().latent;
  Dataset out(schema);
  for (std::size_t start = 0, shard = 0; start < req.count; start += kGenerationShard, ++shard) {
    const std::size_t n = std::min(kGenerationShard, req.count - start);
    Rng rng = make_rng(req.seed, "prior", {shard});
    std::normal_distribution<double> nd(0.0, 1.0);
    Tensor z({n, h});
    for (double& v : z.values()) v = nd(rng);
    append_decoded(out, model, z, req.condition, req.mode, rng);
  }
  return out;
}

std::array<std::size_t, 2> augmentation_counts(const Dataset& train, int factor) {
  if (factor < 1) throw ConfigError("augmentation factor must be >= 1");
  const auto f = static_cast<std::size_t>(factor - 1);
  return {f * train.count(Condition::kNonRisk), f * train.count(Condition::kRisk)};
}

std::string bank_blob_name(Condition c) { return "bank." + condition_label(c); }

void store_banks(Checkpoint& ckpt, std::span<const LatentBank> banks) {
  for (const auto& b : banks) ckpt.extras.emplace_back(bank_blob_name(b.condition), b.z);
}

std::vector<LatentBank> load_banks(const Checkpoint& ckpt) {
  std::vector<LatentBank> out;
  for (Condition c : {Condition::kNonRisk, Condition::kRisk}) {
    if (const Tensor* t = ckpt.extra(bank_blob_name(c))) {
      if (t->rank() != 2 || t->cols() != ckpt.model.dims().latent)
        throw CheckpointError("latent bank " + bank_blob_name(c) + " has the wrong shape");
      LatentBank b;
      b.condition = c;
      b.z = *t;
      b.source_rows.resize(t->rows());
      std::iota(b.source_rows.begin(), b.source_rows.end(), std::size_t{0});
      out.push_back(std::move(b));
    }
  }
  return out;
}

}  // namespace tabgen
