#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "rvla/gradcore/tensor.hpp"

namespace rvla {

struct NodeId {
  std::uint32_t index = 0;
  friend bool operator==(NodeId, NodeId) = default;
};

enum class OpKind : std::uint8_t {
  kConstant,
  kInput,
  kParameter,
  kMatMul,
  kAdd,
  kAddRow,
  kSub,
  kMul,
  kScale,
  kTanh,
  kRelu,
  kClamp,
  kConv2d,
  kAddChannelBias,
  kReshape,
  kConcatCols,
  kEmbeddingMean,
  kSum,
  kMean,
  kMse,
  kSoftmaxCrossEntropy,
  kSoftmaxRows,
};

const char* op_name(OpKind op);

/// Append-only tape for reverse-mode differentiation.
///
/// Nodes are recorded in evaluation order, so every input id of node k is
/// smaller than k and insertion order is a topological order. Parameter
/// leaves refer to caller-owned tensors which must outlive the graph;
/// backward() accumulates into their gradient buffers.
class Graph {
 public:
  Graph() = default;
  Graph(const Graph&) = delete;
  Graph& operator=(const Graph&) = delete;
  Graph(Graph&&) = default;
  Graph& operator=(Graph&&) = default;

  NodeId constant(Tensor value);
  // A differentiable leaf owned by the graph (attack variables, test inputs).
  NodeId input(Tensor value);
  // A caller-owned leaf. Differentiable iff param.requires_grad().
  NodeId parameter(Tensor& param);

  const Tensor& value(NodeId id) const;
  std::size_t size() const { return nodes_.size(); }
  OpKind op(NodeId id) const { return node(id).op; }

  // a(m x k) * b(k x n)
  NodeId matmul(NodeId a, NodeId b);
  // Elementwise over equal shapes.
  NodeId add(NodeId a, NodeId b);
  NodeId sub(NodeId a, NodeId b);
  NodeId mul(NodeId a, NodeId b);
  // a(m x n) + row vector b(n), broadcast over rows.
  NodeId add_row(NodeId a, NodeId row);
  NodeId scale(NodeId a, double factor);
  NodeId tanh(NodeId a);
  // Subgradient 0 at the kink.
  NodeId relu(NodeId a);
  // Gradient passes where lo <= a <= hi.
  NodeId clamp(NodeId a, double lo, double hi);
  // 3x3 cross-correlation, zero padding 1. x is C x H x W or N x C x H x W,
  // kernel is F x C x 3 x 3, stride is 1 or 2.
  NodeId conv2d(NodeId x, NodeId kernel, std::size_t stride);
  // x(N x F x H x W) + bias(F) per channel.
  NodeId add_channel_bias(NodeId x, NodeId bias);
  NodeId reshape(NodeId a, Shape shape);
  // Concatenate 2-D nodes with equal row counts along columns.
  NodeId concat_cols(std::span<const NodeId> parts);
  // Mean of embedding rows: tokens holds batch x length ids into table(V x D).
  NodeId embedding_mean(NodeId table, std::span<const int> tokens, std::size_t length);
  NodeId sum(NodeId a);
  NodeId mean(NodeId a);
  // Mean of squared differences over all elements.
  NodeId mse(NodeId a, NodeId b);
  // Softmax along each row of a 2-D tensor.
  NodeId softmax_rows(NodeId a);
  // Mean over rows of -log softmax(logits)[target].
  NodeId softmax_cross_entropy(NodeId logits, std::span<const int> targets);

  // Accumulates d(loss)/d(leaf) into every differentiable leaf.
  void backward(NodeId loss);
  // d(loss)/d(input) for a graph-owned input leaf; no gradient buffer of any
  // tensor is touched.
  Tensor grad_wrt_input(NodeId loss, NodeId input) const;
  // Gradient accumulated on an input or parameter leaf by backward().
  std::span<const double> grad(NodeId leaf) const;

 private:
  struct Node {
    OpKind op = OpKind::kConstant;
    std::vector<std::uint32_t> inputs;
    Tensor value;
    Tensor* param = nullptr;
    std::vector<double> saved;
    std::vector<int> ints;
    double lo = 0.0;
    double hi = 0.0;
    std::size_t stride = 1;
    bool tracked = false;
  };

  const Node& node(NodeId id) const;
  NodeId push(Node n);
  bool tracked(std::uint32_t i) const { return nodes_[i].tracked; }
  std::vector<std::vector<double>> propagate(NodeId loss, const std::vector<char>& mask) const;

  std::vector<Node> nodes_;
};

}  // namespace rvla
