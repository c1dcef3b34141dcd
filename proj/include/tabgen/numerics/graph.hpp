// SPDX-License-Identifier: Apache-2.0
#pragma once
//
// Reverse-mode differentiation over a closed operator set. A Graph is a
// tape: every builder call appends a node and computes its value
// immediately. forward() recomputes all nodes in insertion order (after
// set_input() or after parameter values changed) and backward(root)
// propagates adjoints from a scalar root into every node and into the
// gradient accumulator of every Parameter the graph references.

#include <cstdint>
#include <deque>
#include <span>
#include <string_view>
#include <vector>

#include "tabgen/numerics/tensor.hpp"

namespace tabgen {

struct NodeId {
  std::uint32_t index = 0;
  friend bool operator==(NodeId, NodeId) = default;
};

enum class Op : std::uint8_t {
  kInput,
  kParam,
  kMatMul,      // A[n x k] * B[k x m]
  kMatMulNT,    // A[n x k] * B[m x k]^T
  kAddBias,     // A[n x m] + b[1 x m], broadcast over rows
  kAdd,
  kSub,
  kMul,         // elementwise
  kAffine,      // s * a + t
  kExp,
  kRelu,
  kClamp,
  kConcat,      // along columns
  kGather,      // rows of an embedding table
  kLogSoftmax,  // per row
  kRowNormalize,
  kSum,         // reduce to scalar
  kMean,        // reduce to scalar
  kL1Norm,      // sum |a|
};

std::string_view op_name(Op op) noexcept;

class Graph {
 public:
  Graph() = default;
  Graph(const Graph&) = delete;
  Graph& operator=(const Graph&) = delete;
  Graph(Graph&&) = default;
  Graph& operator=(Graph&&) = default;

  NodeId input(Tensor value);
  void set_input(NodeId id, Tensor value);
  /// The parameter must outlive the graph.
  NodeId param(Parameter& p);

  NodeId matmul(NodeId a, NodeId b);
  NodeId matmul_nt(NodeId a, NodeId b);
  NodeId add_bias(NodeId a, NodeId bias);
  NodeId add(NodeId a, NodeId b);
  NodeId sub(NodeId a, NodeId b);
  NodeId mul(NodeId a, NodeId b);
  NodeId affine(NodeId a, double scale, double shift = 0.0);
  NodeId exp(NodeId a);
  NodeId relu(NodeId a);
  NodeId clamp(NodeId a, double lo, double hi);
  NodeId concat(std::span<const NodeId> parts);
  /// Rows `indices` of `table`; out-of-range indices raise EncodingError.
  NodeId gather(NodeId table, std::vector<std::uint32_t> indices);
  NodeId log_softmax(NodeId a);
  /// x / max(||x||_2, eps) per row.
  NodeId row_normalize(NodeId a, double eps = 1e-8);
  NodeId sum(NodeId a);
  NodeId mean(NodeId a);
  NodeId l1_norm(NodeId a);

  const Tensor& value(NodeId id) const;
  const Tensor& adjoint(NodeId id) const;
  Op op(NodeId id) const { return nodes_.at(id.index).op; }
  std::size_t size() const noexcept { return nodes_.size(); }

  /// Recomputes every node from the current inputs and parameter values.
  void forward();
  /// Resets and recomputes all adjoints and the gradients of every
  /// referenced Parameter. Root must be a scalar.
  void backward(NodeId root);

  /// Distinct parameters referenced by the graph, in first-use order.
  std::vector<Parameter*> parameters() const;

 private:
  struct Node {
    Op op = Op::kInput;
    std::vector<NodeId> inputs;
    Tensor value;
    Tensor adjoint;
    Parameter* param = nullptr;
    double s0 = 0.0;
    double s1 = 0.0;
    std::vector<std::uint32_t> indices;
  };

  NodeId push(Node node);
  void compute(Node& node);
  void propagate(Node& node);
  bool val_finite(const Node& node) const;
  const Tensor& val(NodeId id) const;
  Tensor& adj(NodeId id);

  std::deque<Node> nodes_;  // stable references across push
};

}  // namespace tabgen
