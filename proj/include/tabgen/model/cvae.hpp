// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "tabgen/common/rng.hpp"
#include "tabgen/dataprep/dataset.hpp"
#include "tabgen/numerics/graph.hpp"
#include "tabgen/numerics/layers.hpp"

namespace tabgen {

struct ModelDims {
  std::vector<std::uint32_t> cardinalities;  // V_a, one per attribute
  std::size_t embedding = 32;                // E
  std::size_t latent = 64;                   // h

  std::size_t attributes() const noexcept { return cardinalities.size(); }
  std::size_t encoder_input() const noexcept { return (attributes() + 1) * embedding; }
  /// Hidden widths ceil(in/2), ceil(in/4) of the encoder; the decoder uses
  /// them in reverse.
  std::vector<std::size_t> hidden() const;
  void validate() const;  // throws ConfigError
};

/// Graph handles for the approximate posterior.
struct LatentNodes {
  NodeId mu;
  NodeId logvar;
};

struct ForwardNodes {
  LatentNodes dist;
  NodeId z;
  std::vector<NodeId> logits;  // one N x V_a node per attribute
};

inline constexpr double kLogvarMin = -10.0;
inline constexpr double kLogvarMax = 10.0;

class CvaeModel {
 public:
  CvaeModel() = default;
  /// Zero-initialised model; call init() for the uniform fan-in init.
  explicit CvaeModel(ModelDims dims);
  CvaeModel(ModelDims dims, Rng& rng);

  CvaeModel(const CvaeModel&) = delete;
  CvaeModel& operator=(const CvaeModel&) = delete;
  CvaeModel(CvaeModel&&) = default;
  CvaeModel& operator=(CvaeModel&&) = default;

  const ModelDims& dims() const noexcept { return dims_; }
  void init(Rng& rng);

  /// Every learnable tensor in a fixed order (the checkpoint order).
  std::vector<Parameter*> parameters();
  std::vector<const Parameter*> parameters() const;
  /// Decoder-side and encoder weight matrices (no biases, no embeddings).
  std::vector<Parameter*> weight_matrices();
  Parameter* find(const std::string& name);
  std::size_t parameter_count() const;

  /// rows: N x A category indices (row-major), conditions: N labels.
  LatentNodes encode(Graph& g, std::span<const std::uint32_t> rows,
                     std::span<const std::uint8_t> conditions);
  /// z = mu + exp(logvar / 2) * eps.
  static NodeId reparameterize(Graph& g, const LatentNodes& dist, NodeId eps);
  std::vector<NodeId> decode(Graph& g, NodeId z, std::span<const std::uint8_t> conditions);
  ForwardNodes forward(Graph& g, std::span<const std::uint32_t> rows,
                       std::span<const std::uint8_t> conditions, NodeId eps);

  // Tensor-level helpers for inference (no gradients needed).
  struct Posterior {
    Tensor mu;
    Tensor logvar;
  };
  Posterior posterior(std::span<const std::uint32_t> rows, std::span<const std::uint8_t> conditions);
  Posterior posterior(const Dataset& data);
  std::vector<Tensor> decode_logits(const Tensor& z, std::span<const std::uint8_t> conditions);

 private:
  NodeId condition_embedding(Graph& g, std::span<const std::uint8_t> conditions);

  ModelDims dims_;
  std::vector<Parameter> embeddings_;  // one V_a x E table per attribute
  Parameter condition_;                // 2 x E
  std::vector<Linear> encoder_;
  Linear mu_head_;
  Linear logvar_head_;
  std::vector<Linear> decoder_;
  std::vector<Linear> heads_;
};

}  // namespace tabgen
