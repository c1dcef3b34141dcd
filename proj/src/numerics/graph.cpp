// SPDX-License-Identifier: Apache-2.0
#include "tabgen/numerics/graph.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <unordered_set>

#include "tabgen/common/error.hpp"
#include "tabgen/simd/kernels.hpp"

namespace tabgen {

std::string_view op_name(Op op) noexcept {
  switch (op) {
    case Op::kInput: return "input";
    case Op::kParam: return "param";
    case Op::kMatMul: return "matmul";
    case Op::kMatMulNT: return "matmul_nt";
    case Op::kAddBias: return "add_bias";
    case Op::kAdd: return "add";
    case Op::kSub: return "sub";
    case Op::kMul: return "mul";
    case Op::kAffine: return "affine";
    case Op::kExp: return "exp";
    case Op::kRelu: return "relu";
    case Op::kClamp: return "clamp";
    case Op::kConcat: return "concat";
    case Op::kGather: return "gather";
    case Op::kLogSoftmax: return "log_softmax";
    case Op::kRowNormalize: return "row_normalize";
    case Op::kSum: return "sum";
    case Op::kMean: return "mean";
    case Op::kL1Norm: return "l1_norm";
  }
  return "?";
}

namespace {

void require_matrix(const Tensor& t, std::string_view what) {
  if (t.rank() != 2) throw ShapeError(std::string(what) + ": expected matrix, got " + shape_string(t.shape()));
}

void require_same(const Tensor& a, const Tensor& b, std::string_view what) {
  if (!a.same_shape(b))
    throw ShapeError(std::string(what) + ": shape mismatch " + shape_string(a.shape()) + " vs " +
                     shape_string(b.shape()));
}

}  // namespace

NodeId Graph::push(Node node) {
  compute(node);
  nodes_.push_back(std::move(node));
  return NodeId{static_cast<std::uint32_t>(nodes_.size() - 1)};
}

const Tensor& Graph::val(NodeId id) const {
  const Node& n = nodes_.at(id.index);
  return n.param ? n.param->value : n.value;
}

Tensor& Graph::adj(NodeId id) {
  Node& n = nodes_[id.index];
  return n.param ? n.param->grad : n.adjoint;
}

const Tensor& Graph::value(NodeId id) const { return val(id); }

const Tensor& Graph::adjoint(NodeId id) const {
  const Node& n = nodes_.at(id.index);
  return n.param ? n.param->grad : n.adjoint;
}

NodeId Graph::input(Tensor value) {
  Node n;
  n.op = Op::kInput;
  n.value = std::move(value);
  return push(std::move(n));
}

void Graph::set_input(NodeId id, Tensor value) {
  Node& n = nodes_.at(id.index);
  if (n.op != Op::kInput) throw ContractError("set_input on a non-input node");
  require_same(n.value, value, "set_input");
  n.value = std::move(value);
}

NodeId Graph::param(Parameter& p) {
  Node n;
  n.op = Op::kParam;
  n.param = &p;
  return push(std::move(n));
}

#define TABGEN_UNARY(fn, kind)        \
  NodeId Graph::fn(NodeId a) {        \
    Node n;                           \
    n.op = kind;                      \
    n.inputs = {a};                   \
    return push(std::move(n));        \
  }
#define TABGEN_BINARY(fn, kind)           \
  NodeId Graph::fn(NodeId a, NodeId b) {  \
    Node n;                               \
    n.op = kind;                          \
    n.inputs = {a, b};                    \
    return push(std::move(n));            \
  }

TABGEN_BINARY(matmul, Op::kMatMul)
TABGEN_BINARY(matmul_nt, Op::kMatMulNT)
TABGEN_BINARY(add_bias, Op::kAddBias)
TABGEN_BINARY(add, Op::kAdd)
TABGEN_BINARY(sub, Op::kSub)
TABGEN_BINARY(mul, Op::kMul)
TABGEN_UNARY(exp, Op::kExp)
TABGEN_UNARY(relu, Op::kRelu)
TABGEN_UNARY(log_softmax, Op::kLogSoftmax)
TABGEN_UNARY(sum, Op::kSum)
TABGEN_UNARY(mean, Op::kMean)
TABGEN_UNARY(l1_norm, Op::kL1Norm)

#undef TABGEN_UNARY
#undef TABGEN_BINARY

NodeId Graph::affine(NodeId a, double scale, double shift) {
  Node n;
  n.op = Op::kAffine;
  n.inputs = {a};
  n.s0 = scale;
  n.s1 = shift;
  return push(std::move(n));
}

NodeId Graph::clamp(NodeId a, double lo, double hi) {
  if (!(lo < hi)) throw ContractError("clamp: lo must be < hi");
  Node n;
  n.op = Op::kClamp;
  n.inputs = {a};
  n.s0 = lo;
  n.s1 = hi;
  return push(std::move(n));
}

NodeId Graph::concat(std::span<const NodeId> parts) {
  if (parts.empty()) throw ContractError("concat of zero tensors");
  Node n;
  n.op = Op::kConcat;
  n.inputs.assign(parts.begin(), parts.end());
  return push(std::move(n));
}

NodeId Graph::gather(NodeId table, std::vector<std::uint32_t> indices) {
  Node n;
  n.op = Op::kGather;
  n.inputs = {table};
  n.indices = std::move(indices);
  return push(std::move(n));
}

NodeId Graph::row_normalize(NodeId a, double eps) {
  Node n;
  n.op = Op::kRowNormalize;
  n.inputs = {a};
  n.s0 = eps;
  return push(std::move(n));
}

void Graph::compute(Node& node) {
  const auto& k = simd::kernels();
  auto in = [&](std::size_t i) -> const Tensor& { return val(node.inputs[i]); };
  Tensor& out = node.value;

  switch (node.op) {
    case Op::kInput:
      break;
    case Op::kParam:
      break;
    case Op::kMatMul: {
      const Tensor& a = in(0);
      const Tensor& b = in(1);
      require_matrix(a, "matmul");
      require_matrix(b, "matmul");
      if (a.cols() != b.rows())
        throw ShapeError("matmul: " + shape_string(a.shape()) + " x " + shape_string(b.shape()));
      out = Tensor({a.rows(), b.cols()});
      k.gemm_nn(a.rows(), b.cols(), a.cols(), a.data(), b.data(), out.data());
      break;
    }
    case Op::kMatMulNT: {
      const Tensor& a = in(0);
      const Tensor& b = in(1);
      require_matrix(a, "matmul_nt");
      require_matrix(b, "matmul_nt");
      if (a.cols() != b.cols())
        throw ShapeError("matmul_nt: " + shape_string(a.shape()) + " x " + shape_string(b.shape()) + "^T");
      out = Tensor({a.rows(), b.rows()});
      k.gemm_nt(a.rows(), b.rows(), a.cols(), a.data(), b.data(), out.data());
      break;
    }
    case Op::kAddBias: {
      const Tensor& a = in(0);
      const Tensor& b = in(1);
      require_matrix(a, "add_bias");
      if (b.size() != a.cols())
        throw ShapeError("add_bias: bias " + shape_string(b.shape()) + " for " + shape_string(a.shape()));
      out = a;
      for (std::size_t r = 0; r < a.rows(); ++r) {
        auto row = out.row(r);
        for (std::size_t c = 0; c < row.size(); ++c) row[c] += b[c];
      }
      break;
    }
    case Op::kAdd:
    case Op::kSub:
    case Op::kMul: {
      const Tensor& a = in(0);
      const Tensor& b = in(1);
      require_same(a, b, op_name(node.op));
      out = a;
      if (node.op == Op::kAdd)
        for (std::size_t i = 0; i < out.size(); ++i) out[i] += b[i];
      else if (node.op == Op::kSub)
        for (std::size_t i = 0; i < out.size(); ++i) out[i] -= b[i];
      else
        for (std::size_t i = 0; i < out.size(); ++i) out[i] *= b[i];
      break;
    }
    case Op::kAffine:
      out = in(0);
      for (double& v : out.values()) v = node.s0 * v + node.s1;
      break;
    case Op::kExp:
      out = in(0);
      for (double& v : out.values()) v = std::exp(v);
      break;
    case Op::kRelu:
      out = in(0);
      for (double& v : out.values()) v = v > 0.0 ? v : 0.0;
      break;
    case Op::kClamp:
      out = in(0);
      for (double& v : out.values()) v = std::clamp(v, node.s0, node.s1);
      break;
    case Op::kConcat: {
      const std::size_t rows = in(0).rows();
      std::size_t cols = 0;
      for (std::size_t i = 0; i < node.inputs.size(); ++i) {
        require_matrix(in(i), "concat");
        if (in(i).rows() != rows) throw ShapeError("concat: row count mismatch");
        cols += in(i).cols();
      }
      out = Tensor({rows, cols});
      std::size_t off = 0;
      for (std::size_t i = 0; i < node.inputs.size(); ++i) {
        const Tensor& p = in(i);
        for (std::size_t r = 0; r < rows; ++r)
          std::copy_n(p.row(r).data(), p.cols(), out.row(r).data() + off);
        off += p.cols();
      }
      break;
    }
    case Op::kGather: {
      const Tensor& t = in(0);
      require_matrix(t, "gather");
      out = Tensor({node.indices.size(), t.cols()});
      for (std::size_t r = 0; r < node.indices.size(); ++r) {
        const auto idx = node.indices[r];
        if (idx >= t.rows())
          throw EncodingError("gather: index " + std::to_string(idx) + " out of range for table with " +
                              std::to_string(t.rows()) + " rows");
        std::copy_n(t.row(idx).data(), t.cols(), out.row(r).data());
      }
      break;
    }
    case Op::kLogSoftmax: {
      out = in(0);
      for (std::size_t r = 0; r < out.rows(); ++r) {
        auto row = out.row(r);
        const double mx = *std::max_element(row.begin(), row.end());
        double s = 0.0;
        for (double v : row) s += std::exp(v - mx);
        const double lse = mx + std::log(s);
        for (double& v : row) v -= lse;
      }
      break;
    }
    case Op::kRowNormalize: {
      out = in(0);
      for (std::size_t r = 0; r < out.rows(); ++r) {
        auto row = out.row(r);
        const double nrm = std::max(std::sqrt(k.dot(row.size(), row.data(), row.data())), node.s0);
        for (double& v : row) v /= nrm;
      }
      break;
    }
    case Op::kSum:
    case Op::kMean:
    case Op::kL1Norm: {
      const Tensor& a = in(0);
      double s = 0.0;
      if (node.op == Op::kL1Norm)
        for (double v : a.values()) s += std::abs(v);
      else
        for (double v : a.values()) s += v;
      if (node.op == Op::kMean) s /= static_cast<double>(a.size());
      out = Tensor::scalar(s);
      break;
    }
  }

  if (node.op != Op::kParam && !val_finite(node)) {
    throw NumericError(std::string("non-finite value produced by ") + std::string(op_name(node.op)));
  }
}

bool Graph::val_finite(const Node& node) const { return node.value.all_finite(); }

void Graph::forward() {
  for (Node& n : nodes_) compute(n);
}

std::vector<Parameter*> Graph::parameters() const {
  std::vector<Parameter*> out;
  std::unordered_set<Parameter*> seen;
  for (const Node& n : nodes_)
    if (n.param && seen.insert(n.param).second) out.push_back(n.param);
  return out;
}

void Graph::backward(NodeId root) {
  if (root.index >= nodes_.size()) throw ContractError("backward: unknown root");
  if (!val(root).is_scalar())
    throw ContractError("backward: root must be scalar, got " + shape_string(val(root).shape()));

  for (Parameter* p : parameters()) {
    if (!p->grad.same_shape(p->value)) p->grad = Tensor(p->value.shape());
    p->zero_grad();
  }
  for (std::size_t i = 0; i <= root.index; ++i) {
    Node& n = nodes_[i];
    if (!n.param) n.adjoint = Tensor(n.value.shape());
  }
  adj(root)[0] = 1.0;
  for (std::size_t i = root.index + 1; i-- > 0;) propagate(nodes_[i]);
}

void Graph::propagate(Node& node) {
  if (node.op == Op::kInput || node.op == Op::kParam) return;
  const auto& k = simd::kernels();
  const Tensor& g = node.adjoint;
  auto in = [&](std::size_t i) -> const Tensor& { return val(node.inputs[i]); };
  auto din = [&](std::size_t i) -> Tensor& { return adj(node.inputs[i]); };

  switch (node.op) {
    case Op::kInput:
    case Op::kParam:
      break;
    case Op::kMatMul: {
      const Tensor& a = in(0);
      const Tensor& b = in(1);
      const std::size_t n = a.rows(), kk = a.cols(), m = b.cols();
      k.gemm_nt(n, kk, m, g.data(), b.data(), din(0).data());  // dA += G B^T
      k.gemm_tn(kk, m, n, a.data(), g.data(), din(1).data());  // dB += A^T G
      break;
    }
    case Op::kMatMulNT: {
      const Tensor& a = in(0);
      const Tensor& b = in(1);
      const std::size_t n = a.rows(), kk = a.cols(), m = b.rows();
      k.gemm_nn(n, kk, m, g.data(), b.data(), din(0).data());  // dA += G B
      k.gemm_tn(m, kk, n, g.data(), a.data(), din(1).data());  // dB += G^T A
      break;
    }
    case Op::kAddBias: {
      Tensor& da = din(0);
      for (std::size_t i = 0; i < g.size(); ++i) da[i] += g[i];
      Tensor& db = din(1);
      for (std::size_t r = 0; r < g.rows(); ++r) {
        auto row = g.row(r);
        for (std::size_t c = 0; c < row.size(); ++c) db[c] += row[c];
      }
      break;
    }
    case Op::kAdd: {
      Tensor& da = din(0);
      for (std::size_t i = 0; i < g.size(); ++i) da[i] += g[i];
      Tensor& db = din(1);
      for (std::size_t i = 0; i < g.size(); ++i) db[i] += g[i];
      break;
    }
    case Op::kSub: {
      Tensor& da = din(0);
      for (std::size_t i = 0; i < g.size(); ++i) da[i] += g[i];
      Tensor& db = din(1);
      for (std::size_t i = 0; i < g.size(); ++i) db[i] -= g[i];
      break;
    }
    case Op::kMul: {
      const Tensor& a = in(0);
      const Tensor& b = in(1);
      Tensor& da = din(0);
      for (std::size_t i = 0; i < g.size(); ++i) da[i] += g[i] * b[i];
      Tensor& db = din(1);
      for (std::size_t i = 0; i < g.size(); ++i) db[i] += g[i] * a[i];
      break;
    }
    case Op::kAffine: {
      Tensor& da = din(0);
      for (std::size_t i = 0; i < g.size(); ++i) da[i] += node.s0 * g[i];
      break;
    }
    case Op::kExp: {
      Tensor& da = din(0);
      for (std::size_t i = 0; i < g.size(); ++i) da[i] += g[i] * node.value[i];
      break;
    }
    case Op::kRelu: {
      const Tensor& a = in(0);
      Tensor& da = din(0);
      for (std::size_t i = 0; i < g.size(); ++i)
        if (a[i] > 0.0) da[i] += g[i];
      break;
    }
    case Op::kClamp: {
      const Tensor& a = in(0);
      Tensor& da = din(0);
      for (std::size_t i = 0; i < g.size(); ++i)
        if (a[i] > node.s0 && a[i] < node.s1) da[i] += g[i];
      break;
    }
    case Op::kConcat: {
      std::size_t off = 0;
      for (std::size_t i = 0; i < node.inputs.size(); ++i) {
        Tensor& dp = din(i);
        const std::size_t pc = dp.cols();
        for (std::size_t r = 0; r < g.rows(); ++r) {
          const double* src = g.row(r).data() + off;
          double* dst = dp.row(r).data();
          for (std::size_t c = 0; c < pc; ++c) dst[c] += src[c];
        }
        off += pc;
      }
      break;
    }
    case Op::kGather: {
      Tensor& dt = din(0);
      for (std::size_t r = 0; r < node.indices.size(); ++r)
        k.axpy(g.cols(), 1.0, g.row(r).data(), dt.row(node.indices[r]).data());
      break;
    }
    case Op::kLogSoftmax: {
      Tensor& da = din(0);
      for (std::size_t r = 0; r < g.rows(); ++r) {
        auto gr = g.row(r);
        auto yr = node.value.row(r);
        auto dr = da.row(r);
        double gs = 0.0;
        for (double v : gr) gs += v;
        for (std::size_t c = 0; c < gr.size(); ++c) dr[c] += gr[c] - std::exp(yr[c]) * gs;
      }
      break;
    }
    case Op::kRowNormalize: {
      const Tensor& a = in(0);
      Tensor& da = din(0);
      for (std::size_t r = 0; r < g.rows(); ++r) {
        auto xr = a.row(r);
        auto yr = node.value.row(r);
        auto gr = g.row(r);
        auto dr = da.row(r);
        const double nrm = std::sqrt(k.dot(xr.size(), xr.data(), xr.data()));
        if (nrm > node.s0) {
          const double yg = k.dot(yr.size(), yr.data(), gr.data());
          for (std::size_t c = 0; c < gr.size(); ++c) dr[c] += (gr[c] - yr[c] * yg) / nrm;
        } else {
          for (std::size_t c = 0; c < gr.size(); ++c) dr[c] += gr[c] / node.s0;
        }
      }
      break;
    }
    case Op::kSum:
    case Op::kMean: {
      Tensor& da = din(0);
      const double s = node.op == Op::kMean ? g[0] / static_cast<double>(da.size()) : g[0];
      for (double& v : da.values()) v += s;
      break;
    }
    case Op::kL1Norm: {
      const Tensor& a = in(0);
      Tensor& da = din(0);
      for (std::size_t i = 0; i < a.size(); ++i) {
        if (a[i] > 0.0) da[i] += g[0];
        else if (a[i] < 0.0) da[i] -= g[0];
      }
      break;
    }
  }
}

}  // namespace tabgen
