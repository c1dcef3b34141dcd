// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "tabgen/dataprep/dataset.hpp"
#include "tabgen/model/cvae.hpp"

namespace tabgen {

struct Checkpoint;

/// Encoder means of the records of one class.
struct LatentBank {
  Condition condition = Condition::kRisk;
  Tensor z;  // M x h
  std::vector<std::size_t> source_rows;

  std::size_t size() const noexcept { return z.rows(); }
};

enum class DecodeMode { kSample, kArgmax };

std::string to_string(DecodeMode m);
DecodeMode parse_decode_mode(const std::string& s);
std::string condition_label(Condition c);  // "risk" / "non-risk"
Condition parse_condition(const std::string& s);

struct GenerationRequest {
  Condition condition = Condition::kRisk;
  std::size_t count = 1;
  std::size_t k = 5;
  std::uint64_t seed = 0;
  DecodeMode mode = DecodeMode::kArgmax;

  nlohmann::json to_json() const;
};

/// Throws BankError when the class has fewer than 2 records.
LatentBank build_bank(CvaeModel& model, const Dataset& data, Condition condition);

/// Indices of the k nearest rows to `index` (Euclidean, self excluded,
/// ties to the lower index), nearest first.
std::vector<std::size_t> knn(const LatentBank& bank, std::size_t index, std::size_t k);

/// z_i + u (z_j - z_i)
std::vector<double> smote_interpolate(std::span<const double> zi, std::span<const double> zj, double u);

/// Rows are produced in shards of kGenerationShard with RNG streams derived
/// from (seed, shard), so the output depends only on the request.
inline constexpr std::size_t kGenerationShard = 256;

Dataset generate(CvaeModel& model, std::shared_ptr<const Schema> schema, std::span<const LatentBank> banks,
                 const GenerationRequest& request);

/// Baseline: z ~ N(0, I) decoded under `request.condition` (k is unused).
Dataset prior_sample(CvaeModel& model, std::shared_ptr<const Schema> schema, const GenerationRequest& request);

/// Category index per row from per-attribute logits.
std::vector<std::uint32_t> decode_rows(const std::vector<Tensor>& logits, DecodeMode mode, Rng& rng);

/// Synthetic records per class for an augmentation factor f: (f - 1) n_c,
/// indexed by Condition.
std::array<std::size_t, 2> augmentation_counts(const Dataset& train, int factor);

// Banks travel inside checkpoints as extra blobs named bank.<label>.
std::string bank_blob_name(Condition c);
void store_banks(Checkpoint& ckpt, std::span<const LatentBank> banks);
std::vector<LatentBank> load_banks(const Checkpoint& ckpt);

}  // namespace tabgen
