#include "rvla/gradcore/graph.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "rvla/common/errors.hpp"
#include "rvla/gradcore/kernels.hpp"

namespace rvla {

const char* op_name(OpKind op) {
  switch (op) {
    case OpKind::kConstant: return "constant";
    case OpKind::kInput: return "input";
    case OpKind::kParameter: return "parameter";
    case OpKind::kMatMul: return "matmul";
    case OpKind::kAdd: return "add";
    case OpKind::kAddRow: return "add_row";
    case OpKind::kSub: return "sub";
    case OpKind::kMul: return "mul";
    case OpKind::kScale: return "scale";
    case OpKind::kTanh: return "tanh";
    case OpKind::kRelu: return "relu";
    case OpKind::kClamp: return "clamp";
    case OpKind::kConv2d: return "conv2d";
    case OpKind::kAddChannelBias: return "add_channel_bias";
    case OpKind::kReshape: return "reshape";
    case OpKind::kConcatCols: return "concat_cols";
    case OpKind::kEmbeddingMean: return "embedding_mean";
    case OpKind::kSum: return "sum";
    case OpKind::kMean: return "mean";
    case OpKind::kMse: return "mse";
    case OpKind::kSoftmaxCrossEntropy: return "softmax_cross_entropy";
    case OpKind::kSoftmaxRows: return "softmax_rows";
  }
  return "?";
}

namespace {

void require_same_shape(const Tensor& a, const Tensor& b, const char* op) {
  if (a.shape() != b.shape())
    throw DimensionError(std::string(op) + ": shape mismatch " + shape_to_string(a.shape()) +
                         " vs " + shape_to_string(b.shape()));
}

void require_rank(const Tensor& a, std::size_t rank, const char* op) {
  if (a.rank() != rank)
    throw DimensionError(std::string(op) + ": expected rank " + std::to_string(rank) + ", got " +
                         shape_to_string(a.shape()));
}

kernels::ConvShape conv_shape(const Tensor& x, const Tensor& k, std::size_t stride) {
  kernels::ConvShape s;
  const bool batched = x.rank() == 4;
  s.batch = batched ? x.dim(0) : 1;
  s.channels = x.dim(batched ? 1 : 0);
  s.height = x.dim(batched ? 2 : 1);
  s.width = x.dim(batched ? 3 : 2);
  s.filters = k.dim(0);
  s.stride = stride;
  return s;
}

}  // namespace

const Graph::Node& Graph::node(NodeId id) const {
  if (id.index >= nodes_.size())
    throw LookupError("node " + std::to_string(id.index) + " is not in the graph");
  return nodes_[id.index];
}

NodeId Graph::push(Node n) {
  for (std::uint32_t in : n.inputs) n.tracked = n.tracked || nodes_[in].tracked;
  nodes_.push_back(std::move(n));
  return NodeId{static_cast<std::uint32_t>(nodes_.size() - 1)};
}

const Tensor& Graph::value(NodeId id) const {
  const Node& n = node(id);
  return n.param != nullptr ? *n.param : n.value;
}

NodeId Graph::constant(Tensor value) {
  Node n;
  n.op = OpKind::kConstant;
  value.set_requires_grad(false);
  n.value = std::move(value);
  return push(std::move(n));
}

NodeId Graph::input(Tensor value) {
  Node n;
  n.op = OpKind::kInput;
  value.set_requires_grad(true);
  value.drop_grad();
  n.value = std::move(value);
  n.tracked = true;
  return push(std::move(n));
}

NodeId Graph::parameter(Tensor& param) {
  Node n;
  n.op = OpKind::kParameter;
  n.param = &param;
  n.tracked = param.requires_grad();
  return push(std::move(n));
}

NodeId Graph::matmul(NodeId a, NodeId b) {
  const Tensor& ta = value(a);
  const Tensor& tb = value(b);
  require_rank(ta, 2, "matmul");
  require_rank(tb, 2, "matmul");
  if (ta.dim(1) != tb.dim(0))
    throw DimensionError("matmul: inner dimensions differ " + shape_to_string(ta.shape()) +
                         " x " + shape_to_string(tb.shape()));
  const std::size_t m = ta.dim(0), k = ta.dim(1), n = tb.dim(1);
  Node node;
  node.op = OpKind::kMatMul;
  node.inputs = {a.index, b.index};
  node.value = Tensor({m, n});
  kernels::omp::matmul(ta.data(), tb.data(), node.value.data(), m, k, n);
  return push(std::move(node));
}

NodeId Graph::add(NodeId a, NodeId b) {
  const Tensor& ta = value(a);
  const Tensor& tb = value(b);
  require_same_shape(ta, tb, "add");
  Node n;
  n.op = OpKind::kAdd;
  n.inputs = {a.index, b.index};
  n.value = Tensor(ta.shape());
  for (std::size_t i = 0; i < ta.numel(); ++i) n.value[i] = ta[i] + tb[i];
  return push(std::move(n));
}

NodeId Graph::sub(NodeId a, NodeId b) {
  const Tensor& ta = value(a);
  const Tensor& tb = value(b);
  require_same_shape(ta, tb, "sub");
  Node n;
  n.op = OpKind::kSub;
  n.inputs = {a.index, b.index};
  n.value = Tensor(ta.shape());
  for (std::size_t i = 0; i < ta.numel(); ++i) n.value[i] = ta[i] - tb[i];
  return push(std::move(n));
}

NodeId Graph::mul(NodeId a, NodeId b) {
  const Tensor& ta = value(a);
  const Tensor& tb = value(b);
  require_same_shape(ta, tb, "mul");
  Node n;
  n.op = OpKind::kMul;
  n.inputs = {a.index, b.index};
  n.value = Tensor(ta.shape());
  for (std::size_t i = 0; i < ta.numel(); ++i) n.value[i] = ta[i] * tb[i];
  return push(std::move(n));
}

NodeId Graph::add_row(NodeId a, NodeId row) {
  const Tensor& ta = value(a);
  const Tensor& tr = value(row);
  require_rank(ta, 2, "add_row");
  if (tr.numel() != ta.dim(1))
    throw DimensionError("add_row: row of " + shape_to_string(tr.shape()) + " for " +
                         shape_to_string(ta.shape()));
  Node n;
  n.op = OpKind::kAddRow;
  n.inputs = {a.index, row.index};
  n.value = Tensor(ta.shape());
  const std::size_t cols = ta.dim(1);
  for (std::size_t i = 0; i < ta.numel(); ++i) n.value[i] = ta[i] + tr[i % cols];
  return push(std::move(n));
}

NodeId Graph::scale(NodeId a, double factor) {
  const Tensor& ta = value(a);
  Node n;
  n.op = OpKind::kScale;
  n.inputs = {a.index};
  n.lo = factor;
  n.value = Tensor(ta.shape());
  for (std::size_t i = 0; i < ta.numel(); ++i) n.value[i] = factor * ta[i];
  return push(std::move(n));
}

NodeId Graph::tanh(NodeId a) {
  const Tensor& ta = value(a);
  Node n;
  n.op = OpKind::kTanh;
  n.inputs = {a.index};
  n.value = Tensor(ta.shape());
  for (std::size_t i = 0; i < ta.numel(); ++i) n.value[i] = std::tanh(ta[i]);
  return push(std::move(n));
}

NodeId Graph::relu(NodeId a) {
  const Tensor& ta = value(a);
  Node n;
  n.op = OpKind::kRelu;
  n.inputs = {a.index};
  n.value = Tensor(ta.shape());
  for (std::size_t i = 0; i < ta.numel(); ++i) n.value[i] = ta[i] > 0.0 ? ta[i] : 0.0;
  return push(std::move(n));
}

NodeId Graph::clamp(NodeId a, double lo, double hi) {
  const Tensor& ta = value(a);
  Node n;
  n.op = OpKind::kClamp;
  n.inputs = {a.index};
  n.lo = lo;
  n.hi = hi;
  n.value = Tensor(ta.shape());
  for (std::size_t i = 0; i < ta.numel(); ++i) n.value[i] = std::clamp(ta[i], lo, hi);
  return push(std::move(n));
}

NodeId Graph::conv2d(NodeId x, NodeId kernel, std::size_t stride) {
  const Tensor& tx = value(x);
  const Tensor& tk = value(kernel);
  if (tx.rank() != 3 && tx.rank() != 4)
    throw DimensionError("conv2d: input must be C x H x W or N x C x H x W, got " +
                         shape_to_string(tx.shape()));
  require_rank(tk, 4, "conv2d");
  if (stride != 1 && stride != 2) throw DimensionError("conv2d: stride must be 1 or 2");
  const kernels::ConvShape s = conv_shape(tx, tk, stride);
  if (tk.dim(1) != s.channels || tk.dim(2) != 3 || tk.dim(3) != 3)
    throw DimensionError("conv2d: kernel " + shape_to_string(tk.shape()) +
                         " does not match input " + shape_to_string(tx.shape()));
  if (s.height < 3 || s.width < 3)
    throw DimensionError("conv2d: 3x3 kernel larger than padded input " +
                         shape_to_string(tx.shape()));
  Node n;
  n.op = OpKind::kConv2d;
  n.inputs = {x.index, kernel.index};
  n.stride = stride;
  n.value = tx.rank() == 4 ? Tensor({s.batch, s.filters, s.out_height(), s.out_width()})
                           : Tensor({s.filters, s.out_height(), s.out_width()});
  n.saved.resize(s.batch * s.patch() * s.out_pixels());
  kernels::omp::conv3x3(tx.data(), tk.data(), n.value.data(), n.saved, s);
  return push(std::move(n));
}

NodeId Graph::add_channel_bias(NodeId x, NodeId bias) {
  const Tensor& tx = value(x);
  const Tensor& tb = value(bias);
  require_rank(tx, 4, "add_channel_bias");
  if (tb.numel() != tx.dim(1))
    throw DimensionError("add_channel_bias: bias " + shape_to_string(tb.shape()) + " for " +
                         shape_to_string(tx.shape()));
  Node n;
  n.op = OpKind::kAddChannelBias;
  n.inputs = {x.index, bias.index};
  n.value = Tensor(tx.shape());
  const std::size_t plane = tx.dim(2) * tx.dim(3), channels = tx.dim(1);
  for (std::size_t i = 0; i < tx.numel(); ++i) n.value[i] = tx[i] + tb[(i / plane) % channels];
  return push(std::move(n));
}

NodeId Graph::reshape(NodeId a, Shape shape) {
  Node n;
  n.op = OpKind::kReshape;
  n.inputs = {a.index};
  n.value = value(a).reshaped(std::move(shape));
  n.value.set_requires_grad(false);
  n.value.drop_grad();
  return push(std::move(n));
}

NodeId Graph::concat_cols(std::span<const NodeId> parts) {
  if (parts.empty()) throw DimensionError("concat_cols: no inputs");
  const std::size_t rows = value(parts[0]).rank() == 2 ? value(parts[0]).dim(0) : 0;
  std::size_t cols = 0;
  Node n;
  n.op = OpKind::kConcatCols;
  for (NodeId p : parts) {
    const Tensor& t = value(p);
    require_rank(t, 2, "concat_cols");
    if (t.dim(0) != rows) throw DimensionError("concat_cols: row counts differ");
    cols += t.dim(1);
    n.inputs.push_back(p.index);
  }
  n.value = Tensor({rows, cols});
  std::size_t offset = 0;
  for (NodeId p : parts) {
    const Tensor& t = value(p);
    const std::size_t w = t.dim(1);
    for (std::size_t r = 0; r < rows; ++r)
      for (std::size_t c = 0; c < w; ++c) n.value[r * cols + offset + c] = t[r * w + c];
    offset += w;
  }
  return push(std::move(n));
}

NodeId Graph::embedding_mean(NodeId table, std::span<const int> tokens, std::size_t length) {
  const Tensor& tt = value(table);
  require_rank(tt, 2, "embedding_mean");
  if (length == 0 || tokens.size() % length != 0)
    throw DimensionError("embedding_mean: token buffer is not a whole number of sequences");
  const std::size_t vocab = tt.dim(0), dim = tt.dim(1), batch = tokens.size() / length;
  for (int t : tokens)
    if (t < 0 || static_cast<std::size_t>(t) >= vocab)
      throw LookupError("token id " + std::to_string(t) + " outside vocabulary of " +
                        std::to_string(vocab));
  Node n;
  n.op = OpKind::kEmbeddingMean;
  n.inputs = {table.index};
  n.ints.assign(tokens.begin(), tokens.end());
  n.stride = length;
  n.value = Tensor({batch, dim});
  const double inv = 1.0 / static_cast<double>(length);
  for (std::size_t b = 0; b < batch; ++b) {
    for (std::size_t l = 0; l < length; ++l) {
      const auto row = static_cast<std::size_t>(tokens[b * length + l]);
      for (std::size_t d = 0; d < dim; ++d) n.value[b * dim + d] += tt[row * dim + d];
    }
    for (std::size_t d = 0; d < dim; ++d) n.value[b * dim + d] *= inv;
  }
  return push(std::move(n));
}

NodeId Graph::sum(NodeId a) {
  const Tensor& ta = value(a);
  double acc = 0.0;
  for (double v : ta.data()) acc += v;
  Node n;
  n.op = OpKind::kSum;
  n.inputs = {a.index};
  n.value = Tensor::scalar(acc);
  return push(std::move(n));
}

NodeId Graph::mean(NodeId a) {
  const Tensor& ta = value(a);
  double acc = 0.0;
  for (double v : ta.data()) acc += v;
  Node n;
  n.op = OpKind::kMean;
  n.inputs = {a.index};
  n.value = Tensor::scalar(acc / static_cast<double>(ta.numel()));
  return push(std::move(n));
}

NodeId Graph::mse(NodeId a, NodeId b) {
  const Tensor& ta = value(a);
  const Tensor& tb = value(b);
  require_same_shape(ta, tb, "mse");
  double acc = 0.0;
  for (std::size_t i = 0; i < ta.numel(); ++i) {
    const double d = ta[i] - tb[i];
    acc += d * d;
  }
  Node n;
  n.op = OpKind::kMse;
  n.inputs = {a.index, b.index};
  n.value = Tensor::scalar(acc / static_cast<double>(ta.numel()));
  return push(std::move(n));
}

NodeId Graph::softmax_rows(NodeId a) {
  const Tensor& ta = value(a);
  require_rank(ta, 2, "softmax_rows");
  const std::size_t rows = ta.dim(0), cols = ta.dim(1);
  Node n;
  n.op = OpKind::kSoftmaxRows;
  n.inputs = {a.index};
  n.value = Tensor(ta.shape());
  for (std::size_t r = 0; r < rows; ++r) {
    const double* in = ta.data().data() + r * cols;
    double* out = n.value.data().data() + r * cols;
    const double peak = *std::max_element(in, in + cols);
    double z = 0.0;
    for (std::size_t c = 0; c < cols; ++c) z += out[c] = std::exp(in[c] - peak);
    for (std::size_t c = 0; c < cols; ++c) out[c] /= z;
  }
  return push(std::move(n));
}

NodeId Graph::softmax_cross_entropy(NodeId logits, std::span<const int> targets) {
  const Tensor& tl = value(logits);
  require_rank(tl, 2, "softmax_cross_entropy");
  const std::size_t rows = tl.dim(0), classes = tl.dim(1);
  if (targets.size() != rows)
    throw DimensionError("softmax_cross_entropy: " + std::to_string(targets.size()) +
                         " targets for " + std::to_string(rows) + " rows");
  Node n;
  n.op = OpKind::kSoftmaxCrossEntropy;
  n.inputs = {logits.index};
  n.ints.assign(targets.begin(), targets.end());
  n.saved.resize(rows * classes);
  double loss = 0.0;
  for (std::size_t r = 0; r < rows; ++r) {
    const int t = targets[r];
    if (t < 0 || static_cast<std::size_t>(t) >= classes)
      throw LookupError("softmax_cross_entropy: target " + std::to_string(t) + " out of range");
    const double* row = tl.data().data() + r * classes;
    const double peak = *std::max_element(row, row + classes);
    double z = 0.0;
    for (std::size_t c = 0; c < classes; ++c) z += std::exp(row[c] - peak);
    for (std::size_t c = 0; c < classes; ++c) n.saved[r * classes + c] = std::exp(row[c] - peak) / z;
    loss += -(row[t] - peak - std::log(z));
  }
  n.value = Tensor::scalar(loss / static_cast<double>(rows));
  return push(std::move(n));
}

std::vector<std::vector<double>> Graph::propagate(NodeId loss,
                                                  const std::vector<char>& mask) const {
  std::vector<std::vector<double>> adj(nodes_.size());
  adj[loss.index].assign(1, 1.0);
  auto grad_of = [&](std::uint32_t i) -> std::vector<double>& {
    if (adj[i].empty()) adj[i].assign(value(NodeId{i}).numel(), 0.0);
    return adj[i];
  };

  for (std::uint32_t k = loss.index + 1; k-- > 0;) {
    if (adj[k].empty() || !mask[k]) continue;
    const Node& n = nodes_[k];
    const std::vector<double>& g = adj[k];
    const auto& in = n.inputs;
    switch (n.op) {
      case OpKind::kConstant:
      case OpKind::kInput:
      case OpKind::kParameter:
        break;
      case OpKind::kMatMul: {
        const Tensor& a = value(NodeId{in[0]});
        const Tensor& b = value(NodeId{in[1]});
        const std::size_t m = a.dim(0), kk = a.dim(1), nn = b.dim(1);
        if (mask[in[0]]) kernels::omp::matmul_grad_a(g, b.data(), grad_of(in[0]), m, kk, nn);
        if (mask[in[1]]) kernels::omp::matmul_grad_b(a.data(), g, grad_of(in[1]), m, kk, nn);
        break;
      }
      case OpKind::kAdd: {
        for (int s = 0; s < 2; ++s) {
          if (!mask[in[s]]) continue;
          auto& ga = grad_of(in[s]);
          for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i];
        }
        break;
      }
      case OpKind::kSub: {
        if (mask[in[0]]) {
          auto& ga = grad_of(in[0]);
          for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i];
        }
        if (mask[in[1]]) {
          auto& gb = grad_of(in[1]);
          for (std::size_t i = 0; i < g.size(); ++i) gb[i] -= g[i];
        }
        break;
      }
      case OpKind::kMul: {
        const Tensor& a = value(NodeId{in[0]});
        const Tensor& b = value(NodeId{in[1]});
        if (mask[in[0]]) {
          auto& ga = grad_of(in[0]);
          for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * b[i];
        }
        if (mask[in[1]]) {
          auto& gb = grad_of(in[1]);
          for (std::size_t i = 0; i < g.size(); ++i) gb[i] += g[i] * a[i];
        }
        break;
      }
      case OpKind::kAddRow: {
        if (mask[in[0]]) {
          auto& ga = grad_of(in[0]);
          for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i];
        }
        if (mask[in[1]]) {
          auto& gr = grad_of(in[1]);
          const std::size_t cols = gr.size();
          for (std::size_t i = 0; i < g.size(); ++i) gr[i % cols] += g[i];
        }
        break;
      }
      case OpKind::kScale: {
        if (!mask[in[0]]) break;
        auto& ga = grad_of(in[0]);
        for (std::size_t i = 0; i < g.size(); ++i) ga[i] += n.lo * g[i];
        break;
      }
      case OpKind::kTanh: {
        if (!mask[in[0]]) break;
        auto& ga = grad_of(in[0]);
        for (std::size_t i = 0; i < g.size(); ++i) {
          const double y = n.value[i];
          ga[i] += g[i] * (1.0 - y * y);
        }
        break;
      }
      case OpKind::kRelu: {
        if (!mask[in[0]]) break;
        const Tensor& a = value(NodeId{in[0]});
        auto& ga = grad_of(in[0]);
        for (std::size_t i = 0; i < g.size(); ++i)
          if (a[i] > 0.0) ga[i] += g[i];
        break;
      }
      case OpKind::kClamp: {
        if (!mask[in[0]]) break;
        const Tensor& a = value(NodeId{in[0]});
        auto& ga = grad_of(in[0]);
        for (std::size_t i = 0; i < g.size(); ++i)
          if (a[i] >= n.lo && a[i] <= n.hi) ga[i] += g[i];
        break;
      }
      case OpKind::kConv2d: {
        const Tensor& x = value(NodeId{in[0]});
        const Tensor& w = value(NodeId{in[1]});
        const kernels::ConvShape s = conv_shape(x, w, n.stride);
        if (mask[in[0]]) kernels::omp::conv3x3_grad_input(g, w.data(), grad_of(in[0]), s);
        if (mask[in[1]]) kernels::omp::conv3x3_grad_weight(n.saved, g, grad_of(in[1]), s);
        break;
      }
      case OpKind::kAddChannelBias: {
        const Tensor& x = value(NodeId{in[0]});
        if (mask[in[0]]) {
          auto& ga = grad_of(in[0]);
          for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i];
        }
        if (mask[in[1]]) {
          auto& gb = grad_of(in[1]);
          const std::size_t plane = x.dim(2) * x.dim(3), channels = x.dim(1);
          for (std::size_t i = 0; i < g.size(); ++i) gb[(i / plane) % channels] += g[i];
        }
        break;
      }
      case OpKind::kReshape: {
        if (!mask[in[0]]) break;
        auto& ga = grad_of(in[0]);
        for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i];
        break;
      }
      case OpKind::kConcatCols: {
        const std::size_t rows = n.value.dim(0), cols = n.value.dim(1);
        std::size_t offset = 0;
        for (std::uint32_t part : in) {
          const std::size_t w = value(NodeId{part}).dim(1);
          if (mask[part]) {
            auto& gp = grad_of(part);
            for (std::size_t r = 0; r < rows; ++r)
              for (std::size_t c = 0; c < w; ++c) gp[r * w + c] += g[r * cols + offset + c];
          }
          offset += w;
        }
        break;
      }
      case OpKind::kEmbeddingMean: {
        if (!mask[in[0]]) break;
        auto& gt = grad_of(in[0]);
        const std::size_t dim = n.value.dim(1), length = n.stride;
        const std::size_t batch = n.value.dim(0);
        const double inv = 1.0 / static_cast<double>(length);
        for (std::size_t b = 0; b < batch; ++b)
          for (std::size_t l = 0; l < length; ++l) {
            const auto row = static_cast<std::size_t>(n.ints[b * length + l]);
            for (std::size_t d = 0; d < dim; ++d) gt[row * dim + d] += inv * g[b * dim + d];
          }
        break;
      }
      case OpKind::kSum: {
        if (!mask[in[0]]) break;
        auto& ga = grad_of(in[0]);
        for (double& v : ga) v += g[0];
        break;
      }
      case OpKind::kMean: {
        if (!mask[in[0]]) break;
        auto& ga = grad_of(in[0]);
        const double share = g[0] / static_cast<double>(ga.size());
        for (double& v : ga) v += share;
        break;
      }
      case OpKind::kMse: {
        const Tensor& a = value(NodeId{in[0]});
        const Tensor& b = value(NodeId{in[1]});
        const double c = 2.0 * g[0] / static_cast<double>(a.numel());
        if (mask[in[0]]) {
          auto& ga = grad_of(in[0]);
          for (std::size_t i = 0; i < a.numel(); ++i) ga[i] += c * (a[i] - b[i]);
        }
        if (mask[in[1]]) {
          auto& gb = grad_of(in[1]);
          for (std::size_t i = 0; i < a.numel(); ++i) gb[i] -= c * (a[i] - b[i]);
        }
        break;
      }
      case OpKind::kSoftmaxRows: {
        if (!mask[in[0]]) break;
        auto& ga = grad_of(in[0]);
        const std::size_t cols = n.value.dim(1), rows = n.value.dim(0);
        for (std::size_t r = 0; r < rows; ++r) {
          const double* y = n.value.data().data() + r * cols;
          const double* gr = g.data() + r * cols;
          double dot = 0.0;
          for (std::size_t c = 0; c < cols; ++c) dot += gr[c] * y[c];
          for (std::size_t c = 0; c < cols; ++c) ga[r * cols + c] += y[c] * (gr[c] - dot);
        }
        break;
      }
      case OpKind::kSoftmaxCrossEntropy: {
        if (!mask[in[0]]) break;
        auto& ga = grad_of(in[0]);
        const std::size_t rows = n.ints.size(), classes = ga.size() / rows;
        const double c = g[0] / static_cast<double>(rows);
        for (std::size_t r = 0; r < rows; ++r)
          for (std::size_t k2 = 0; k2 < classes; ++k2) {
            const double target = static_cast<int>(k2) == n.ints[r] ? 1.0 : 0.0;
            ga[r * classes + k2] += c * (n.saved[r * classes + k2] - target);
          }
        break;
      }
    }
  }
  return adj;
}

void Graph::backward(NodeId loss) {
  const Node& ln = node(loss);
  if (ln.value.numel() != 1)
    throw ContractError("backward: loss must be a scalar, got shape " +
                        shape_to_string(value(loss).shape()));
  std::vector<char> mask(nodes_.size());
  for (std::size_t i = 0; i < nodes_.size(); ++i) mask[i] = nodes_[i].tracked ? 1 : 0;
  auto adj = propagate(loss, mask);
  for (std::size_t i = 0; i <= loss.index; ++i) {
    Node& n = nodes_[i];
    if (adj[i].empty() || !n.tracked) continue;
    Tensor* target = nullptr;
    if (n.op == OpKind::kParameter) target = n.param;
    if (n.op == OpKind::kInput) target = &n.value;
    if (target == nullptr) continue;
    auto g = target->grad();
    for (std::size_t j = 0; j < g.size(); ++j) g[j] += adj[i][j];
  }
}

Tensor Graph::grad_wrt_input(NodeId loss, NodeId input) const {
  const Node& ln = node(loss);
  if (ln.value.numel() != 1) throw ContractError("grad_wrt_input: loss must be a scalar");
  if (input.index >= nodes_.size())
    throw LookupError("grad_wrt_input: input is not in the graph");
  const Node& leaf = nodes_[input.index];
  const bool differentiable = leaf.op == OpKind::kInput ||
                              (leaf.op == OpKind::kParameter && leaf.param->requires_grad());
  if (!differentiable)
    throw LookupError("grad_wrt_input: node " + std::to_string(input.index) +
                      " is not a differentiable leaf");
  std::vector<char> mask(nodes_.size(), 0);
  mask[input.index] = 1;
  for (std::size_t i = input.index + 1; i < nodes_.size(); ++i)
    for (std::uint32_t in : nodes_[i].inputs)
      if (mask[in]) {
        mask[i] = 1;
        break;
      }
  Tensor out(value(input).shape());
  if (!mask[loss.index]) return out;
  auto adj = propagate(loss, mask);
  if (!adj[input.index].empty())
    std::copy(adj[input.index].begin(), adj[input.index].end(), out.data().begin());
  return out;
}

std::span<const double> Graph::grad(NodeId leaf) const {
  const Node& n = node(leaf);
  if (n.op == OpKind::kParameter) return n.param->grad();
  if (n.op == OpKind::kInput) return n.value.grad();
  throw LookupError("grad: node is not a differentiable leaf");
}

}  // namespace rvla
