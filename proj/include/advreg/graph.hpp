#pragma once

#include <cmath>
#include <cstddef>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "advreg/errors.hpp"
#include "advreg/kernels.hpp"
#include "advreg/rng.hpp"
#include "advreg/tensor.hpp"

namespace advreg {

using NodeId = std::size_t;

/// Reverse-mode gradients keyed by node id. Every stored gradient has the
/// same shape as the node's forward value.
class GradMap {
 public:
  explicit GradMap(std::size_t nodes) : grads_(nodes) {}

  bool has(NodeId id) const { return grads_[id].has_value(); }

  const Tensor& at(NodeId id) const {
    if (!grads_[id]) throw ContractError("GradMap: no gradient for node " + std::to_string(id));
    return *grads_[id];
  }

  void seed(NodeId id, Tensor g) { grads_[id] = std::move(g); }

  void accumulate(NodeId id, const Tensor& shape_like, const Tensor& g) {
    if (!grads_[id]) {
      grads_[id] = Tensor(shape_like.shape());
    }
    add_in_place(*grads_[id], g);
  }

  Tensor& slot(NodeId id, const Tensor& shape_like) {
    if (!grads_[id]) grads_[id] = Tensor(shape_like.shape());
    return *grads_[id];
  }

 private:
  std::vector<std::optional<Tensor>> grads_;
};

enum class BnMode { kTrain, kEval };

/// Tape-style computation graph. Builder calls evaluate eagerly and append a
/// node record; node ids are topologically ordered by construction (every
/// input id precedes its consumer). backward() walks the tape once in
/// reverse, accumulating gradients in a fixed order, so results are
/// deterministic. recompute() re-runs the forward ops against updated leaf
/// values while keeping recorded randomness (dropout masks) fixed.
class Graph {
 public:
  NodeId leaf(Tensor value) {
    return push(Node{Op::kLeaf, {}, std::move(value)});
  }

  NodeId conv2d(NodeId x, NodeId w, NodeId b, int stride) {
    Node n{Op::kConv2d, {x, w, b}, {}};
    n.stride = stride;
    n.value = kernels::conv2d_forward(value(x), value(w), value(b), stride);
    return push(std::move(n));
  }

  NodeId dense(NodeId x, NodeId w, NodeId b) {
    Node n{Op::kDense, {x, w, b}, {}};
    n.value = kernels::dense_forward(value(x), value(w), value(b));
    return push(std::move(n));
  }

  NodeId relu(NodeId x) {
    Node n{Op::kRelu, {x}, Tensor(value(x).shape())};
    eval_relu(n);
    return push(std::move(n));
  }

  NodeId add(NodeId a, NodeId b) {
    if (!value(a).same_shape(value(b)))
      throw ShapeError("add: shape mismatch " + value(a).shape_str() + " vs " +
                       value(b).shape_str());
    Node n{Op::kAdd, {a, b}, Tensor(value(a).shape())};
    eval_add(n);
    return push(std::move(n));
  }

  NodeId sub(NodeId a, NodeId b) {
    if (!value(a).same_shape(value(b))) throw ShapeError("sub: shape mismatch");
    Node n{Op::kSub, {a, b}, Tensor(value(a).shape())};
    eval_sub(n);
    return push(std::move(n));
  }

  NodeId mul(NodeId a, NodeId b) {
    if (!value(a).same_shape(value(b))) throw ShapeError("mul: shape mismatch");
    Node n{Op::kMul, {a, b}, Tensor(value(a).shape())};
    eval_mul(n);
    return push(std::move(n));
  }

  NodeId scale(NodeId x, double c) {
    Node n{Op::kScale, {x}, Tensor(value(x).shape())};
    n.scalar = c;
    eval_scale(n);
    return push(std::move(n));
  }

  NodeId add_const(NodeId x, double c) {
    Node n{Op::kAddConst, {x}, Tensor(value(x).shape())};
    n.scalar = c;
    eval_add_const(n);
    return push(std::move(n));
  }

  NodeId square(NodeId x) {
    Node n{Op::kSquare, {x}, Tensor(value(x).shape())};
    eval_square(n);
    return push(std::move(n));
  }

  NodeId sum(NodeId x) {
    Node n{Op::kSum, {x}, Tensor({1})};
    eval_sum(n);
    return push(std::move(n));
  }

  /// Identity forward; backward multiplies the upstream gradient by -lambda.
  NodeId grad_reverse(NodeId x, double lambda) {
    if (lambda < 0.0)
      throw ConfigError("grad_reverse: lambda must be non-negative, got " +
                        std::to_string(lambda));
    Node n{Op::kGradReverse, {x}, value(x)};
    n.scalar = lambda;
    return push(std::move(n));
  }

  NodeId identity(NodeId x) {
    return push(Node{Op::kIdentity, {x}, value(x)});
  }

  NodeId global_avg_pool(NodeId x) {
    const Tensor& v = value(x);
    if (v.ndim() != 4) throw ShapeError("global_avg_pool: input must be [N,C,H,W]");
    Node n{Op::kGlobalAvgPool, {x}, Tensor({v.dim(0), v.dim(1)})};
    eval_gap(n);
    return push(std::move(n));
  }

  /// Batch normalization over [N,C,H,W] per channel. Train mode normalizes
  /// with batch statistics (saved on the node so the caller can update
  /// running stats); eval mode normalizes with the supplied running stats.
  NodeId batch_norm(NodeId x, NodeId scale, NodeId shift, BnMode mode,
                    double epsilon, Tensor running_mean = {}, Tensor running_var = {}) {
    const Tensor& v = value(x);
    if (v.ndim() != 4) throw ShapeError("batch_norm: input must be [N,C,H,W]");
    const int channels = v.dim(1);
    if (value(scale).ndim() != 1 || value(scale).dim(0) != channels ||
        value(shift).ndim() != 1 || value(shift).dim(0) != channels)
      throw ShapeError("batch_norm: scale/shift must be per-channel [C]");
    Node n{Op::kBatchNorm, {x, scale, shift}, Tensor(v.shape())};
    n.bn_mode = mode;
    n.scalar = epsilon;
    if (mode == BnMode::kEval) {
      if (running_mean.size() != static_cast<std::size_t>(channels) ||
          running_var.size() != static_cast<std::size_t>(channels))
        throw ShapeError("batch_norm: eval mode needs per-channel running stats");
      n.bn_mean = std::move(running_mean);
      n.bn_var = std::move(running_var);
    }
    eval_batch_norm(n);
    return push(std::move(n));
  }

  /// Inverted dropout; the mask (scaled by 1/keep_p) is drawn once at build
  /// time from the supplied stream and stays fixed across recompute().
  NodeId dropout(NodeId x, double keep_p, Rng& rng) {
    if (!(keep_p > 0.0 && keep_p <= 1.0))
      throw ConfigError("dropout: keep probability must be in (0,1], got " +
                        std::to_string(keep_p));
    Node n{Op::kDropout, {x}, Tensor(value(x).shape())};
    n.mask = Tensor(value(x).shape());
    const double inv = 1.0 / keep_p;
    for (std::size_t i = 0; i < n.mask.size(); ++i)
      n.mask[i] = (keep_p >= 1.0 || rng.uniform() < keep_p) ? inv : 0.0;
    eval_dropout(n);
    return push(std::move(n));
  }

  /// Mean over the batch of -log softmax(logits)[label]; scalar output.
  NodeId softmax_cross_entropy(NodeId logits, std::vector<int> labels) {
    const Tensor& v = value(logits);
    if (v.ndim() != 2) throw ShapeError("softmax_cross_entropy: logits must be [N,K]");
    if (static_cast<int>(labels.size()) != v.dim(0))
      throw InputError("softmax_cross_entropy: need one label per row");
    for (int y : labels)
      if (y < 0 || y >= v.dim(1))
        throw InputError("softmax_cross_entropy: label " + std::to_string(y) +
                         " outside [0," + std::to_string(v.dim(1)) + ")");
    Node n{Op::kSoftmaxCrossEntropy, {logits}, Tensor({1})};
    n.labels = std::move(labels);
    eval_softmax_ce(n);
    return push(std::move(n));
  }

  const Tensor& value(NodeId id) const { return nodes_[id].value; }

  /// Leaf values may be nudged (finite differences); recompute() then
  /// refreshes every downstream node.
  Tensor& leaf_value(NodeId id) {
    if (nodes_[id].op != Op::kLeaf)
      throw ContractError("leaf_value: node " + std::to_string(id) + " is not a leaf");
    return nodes_[id].value;
  }

  std::size_t node_count() const { return nodes_.size(); }

  bool is_leaf(NodeId id) const { return nodes_[id].op == Op::kLeaf; }

  /// Batch statistics recorded by a train-mode batch_norm node.
  struct BnBatchStats {
    const Tensor& mean;
    const Tensor& var;  // biased (divided by element count)
  };
  BnBatchStats bn_batch_stats(NodeId id) const {
    const Node& n = nodes_[id];
    if (n.op != Op::kBatchNorm || n.bn_mode != BnMode::kTrain)
      throw ContractError("bn_batch_stats: node is not a train-mode batch_norm");
    return {n.bn_mean, n.bn_var};
  }

  void recompute() {
    for (auto& n : nodes_) {
      switch (n.op) {
        case Op::kLeaf: break;
        case Op::kConv2d:
          n.value = kernels::conv2d_forward(value(n.inputs[0]), value(n.inputs[1]),
                                            value(n.inputs[2]), n.stride);
          break;
        case Op::kDense:
          n.value = kernels::dense_forward(value(n.inputs[0]), value(n.inputs[1]),
                                           value(n.inputs[2]));
          break;
        case Op::kRelu: eval_relu(n); break;
        case Op::kAdd: eval_add(n); break;
        case Op::kSub: eval_sub(n); break;
        case Op::kMul: eval_mul(n); break;
        case Op::kScale: eval_scale(n); break;
        case Op::kAddConst: eval_add_const(n); break;
        case Op::kSquare: eval_square(n); break;
        case Op::kSum: eval_sum(n); break;
        case Op::kGradReverse:
        case Op::kIdentity: n.value = value(n.inputs[0]); break;
        case Op::kGlobalAvgPool: eval_gap(n); break;
        case Op::kBatchNorm: eval_batch_norm(n); break;
        case Op::kDropout: eval_dropout(n); break;
        case Op::kSoftmaxCrossEntropy: eval_softmax_ce(n); break;
      }
    }
  }

  /// Exact reverse-mode gradients of a scalar loss node. Gradients sum when a
  /// node feeds multiple consumers; one pass visits each node at most once.
  GradMap backward(NodeId loss) const {
    if (loss >= nodes_.size()) throw ContractError("backward: unknown node id");
    if (nodes_[loss].value.size() != 1)
      throw ContractError("backward: loss node must be scalar, has shape " +
                          nodes_[loss].value.shape_str());
    GradMap grads(nodes_.size());
    grads.seed(loss, Tensor::scalar(1.0));
    for (NodeId id = loss + 1; id-- > 0;) {
      if (!grads.has(id)) continue;
      backprop(nodes_[id], grads.at(id), grads);
    }
    return grads;
  }

 private:
  enum class Op {
    kLeaf, kConv2d, kDense, kRelu, kAdd, kSub, kMul, kScale, kAddConst,
    kSquare, kSum, kGradReverse, kIdentity, kGlobalAvgPool, kBatchNorm,
    kDropout, kSoftmaxCrossEntropy,
  };

  struct Node {
    Op op;
    std::vector<NodeId> inputs;
    Tensor value;
    int stride = 1;
    double scalar = 0.0;  // GRL lambda / scale factor / added constant / BN epsilon
    Tensor mask;          // dropout
    std::vector<int> labels;
    BnMode bn_mode = BnMode::kTrain;
    Tensor bn_mean, bn_var;    // batch stats (train) or running stats (eval)
    Tensor bn_inv_std;         // saved for backward
    Tensor softmax_probs;      // saved for backward
  };

  NodeId push(Node n) {
    for (NodeId in : n.inputs)
      if (in >= nodes_.size())
        throw ContractError("graph: input id out of order");
    nodes_.push_back(std::move(n));
    return nodes_.size() - 1;
  }

  // ---- forward evaluation ----

  void eval_relu(Node& n) {
    const Tensor& x = value(n.inputs[0]);
    for (std::size_t i = 0; i < x.size(); ++i) n.value[i] = x[i] > 0.0 ? x[i] : 0.0;
  }
  void eval_add(Node& n) {
    const Tensor& a = value(n.inputs[0]);
    const Tensor& b = value(n.inputs[1]);
    for (std::size_t i = 0; i < a.size(); ++i) n.value[i] = a[i] + b[i];
  }
  void eval_sub(Node& n) {
    const Tensor& a = value(n.inputs[0]);
    const Tensor& b = value(n.inputs[1]);
    for (std::size_t i = 0; i < a.size(); ++i) n.value[i] = a[i] - b[i];
  }
  void eval_mul(Node& n) {
    const Tensor& a = value(n.inputs[0]);
    const Tensor& b = value(n.inputs[1]);
    for (std::size_t i = 0; i < a.size(); ++i) n.value[i] = a[i] * b[i];
  }
  void eval_scale(Node& n) {
    const Tensor& x = value(n.inputs[0]);
    for (std::size_t i = 0; i < x.size(); ++i) n.value[i] = n.scalar * x[i];
  }
  void eval_add_const(Node& n) {
    const Tensor& x = value(n.inputs[0]);
    for (std::size_t i = 0; i < x.size(); ++i) n.value[i] = x[i] + n.scalar;
  }
  void eval_square(Node& n) {
    const Tensor& x = value(n.inputs[0]);
    for (std::size_t i = 0; i < x.size(); ++i) n.value[i] = x[i] * x[i];
  }
  void eval_sum(Node& n) { n.value[0] = value(n.inputs[0]).sum(); }
  void eval_gap(Node& n) {
    const Tensor& x = value(n.inputs[0]);
    const int batch = x.dim(0), ch = x.dim(1);
    const int hw = x.dim(2) * x.dim(3);
    const double inv = 1.0 / hw;
    for (int b = 0; b < batch; ++b)
      for (int c = 0; c < ch; ++c) {
        const double* p = x.data() + (static_cast<std::size_t>(b) * ch + c) * hw;
        double s = 0.0;
        for (int i = 0; i < hw; ++i) s += p[i];
        n.value[static_cast<std::size_t>(b) * ch + c] = s * inv;
      }
  }
  void eval_dropout(Node& n) {
    const Tensor& x = value(n.inputs[0]);
    for (std::size_t i = 0; i < x.size(); ++i) n.value[i] = x[i] * n.mask[i];
  }

  void eval_batch_norm(Node& n) {
    const Tensor& x = value(n.inputs[0]);
    const Tensor& gamma = value(n.inputs[1]);
    const Tensor& beta = value(n.inputs[2]);
    const int batch = x.dim(0), ch = x.dim(1), hw = x.dim(2) * x.dim(3);
    const std::size_t item = static_cast<std::size_t>(ch) * hw;
    if (n.bn_mode == BnMode::kTrain) {
      const double inv_m = 1.0 / (static_cast<double>(batch) * hw);
      Tensor mean({ch}), var({ch});
      for (int c = 0; c < ch; ++c) {
        double s = 0.0;
        for (int b = 0; b < batch; ++b) {
          const double* p = x.data() + b * item + static_cast<std::size_t>(c) * hw;
          for (int i = 0; i < hw; ++i) s += p[i];
        }
        mean[static_cast<std::size_t>(c)] = s * inv_m;
      }
      for (int c = 0; c < ch; ++c) {
        const double mu = mean[static_cast<std::size_t>(c)];
        double s = 0.0;
        for (int b = 0; b < batch; ++b) {
          const double* p = x.data() + b * item + static_cast<std::size_t>(c) * hw;
          for (int i = 0; i < hw; ++i) {
            const double d = p[i] - mu;
            s += d * d;
          }
        }
        var[static_cast<std::size_t>(c)] = s * inv_m;
      }
      n.bn_mean = std::move(mean);
      n.bn_var = std::move(var);
    }
    n.bn_inv_std = Tensor({ch});
    for (int c = 0; c < ch; ++c)
      n.bn_inv_std[static_cast<std::size_t>(c)] =
          1.0 / std::sqrt(n.bn_var[static_cast<std::size_t>(c)] + n.scalar);
    for (int b = 0; b < batch; ++b)
      for (int c = 0; c < ch; ++c) {
        const double mu = n.bn_mean[static_cast<std::size_t>(c)];
        const double inv = n.bn_inv_std[static_cast<std::size_t>(c)];
        const double g = gamma[static_cast<std::size_t>(c)];
        const double sh = beta[static_cast<std::size_t>(c)];
        const double* p = x.data() + b * item + static_cast<std::size_t>(c) * hw;
        double* o = n.value.data() + b * item + static_cast<std::size_t>(c) * hw;
        for (int i = 0; i < hw; ++i) o[i] = g * (p[i] - mu) * inv + sh;
      }
  }

  void eval_softmax_ce(Node& n) {
    const Tensor& logits = value(n.inputs[0]);
    const int batch = logits.dim(0), classes = logits.dim(1);
    n.softmax_probs = Tensor({batch, classes});
    double total = 0.0;
    for (int b = 0; b < batch; ++b) {
      const double* row = logits.data() + static_cast<std::size_t>(b) * classes;
      double* prow = n.softmax_probs.data() + static_cast<std::size_t>(b) * classes;
      double mx = row[0];
      for (int k = 1; k < classes; ++k) mx = std::max(mx, row[k]);
      double z = 0.0;
      for (int k = 0; k < classes; ++k) {
        prow[k] = std::exp(row[k] - mx);
        z += prow[k];
      }
      const double inv_z = 1.0 / z;
      for (int k = 0; k < classes; ++k) prow[k] *= inv_z;
      total += (mx + std::log(z)) - row[n.labels[static_cast<std::size_t>(b)]];
    }
    n.value[0] = total / batch;
  }

  // ---- backward ----

  void backprop(const Node& n, const Tensor& g, GradMap& grads) const {
    switch (n.op) {
      case Op::kLeaf:
        break;
      case Op::kConv2d: {
        const auto cg = kernels::conv2d_backward(value(n.inputs[0]), value(n.inputs[1]),
                                                 value(n.inputs[2]), n.stride, g);
        grads.accumulate(n.inputs[0], cg.dx, cg.dx);
        grads.accumulate(n.inputs[1], cg.dw, cg.dw);
        grads.accumulate(n.inputs[2], cg.db, cg.db);
        break;
      }
      case Op::kDense: {
        const auto dg = kernels::dense_backward(value(n.inputs[0]), value(n.inputs[1]), g);
        grads.accumulate(n.inputs[0], dg.dx, dg.dx);
        grads.accumulate(n.inputs[1], dg.dw, dg.dw);
        grads.accumulate(n.inputs[2], dg.db, dg.db);
        break;
      }
      case Op::kRelu: {
        const Tensor& x = value(n.inputs[0]);
        Tensor& dst = grads.slot(n.inputs[0], x);
        for (std::size_t i = 0; i < x.size(); ++i)
          if (x[i] > 0.0) dst[i] += g[i];  // subgradient at 0 is 0
        break;
      }
      case Op::kAdd:
        grads.accumulate(n.inputs[0], g, g);
        grads.accumulate(n.inputs[1], g, g);
        break;
      case Op::kSub: {
        grads.accumulate(n.inputs[0], g, g);
        Tensor& dst = grads.slot(n.inputs[1], g);
        for (std::size_t i = 0; i < g.size(); ++i) dst[i] -= g[i];
        break;
      }
      case Op::kMul: {
        const Tensor& a = value(n.inputs[0]);
        const Tensor& b = value(n.inputs[1]);
        Tensor& da = grads.slot(n.inputs[0], a);
        for (std::size_t i = 0; i < a.size(); ++i) da[i] += g[i] * b[i];
        Tensor& db = grads.slot(n.inputs[1], b);
        for (std::size_t i = 0; i < b.size(); ++i) db[i] += g[i] * a[i];
        break;
      }
      case Op::kScale: {
        Tensor& dst = grads.slot(n.inputs[0], g);
        for (std::size_t i = 0; i < g.size(); ++i) dst[i] += n.scalar * g[i];
        break;
      }
      case Op::kAddConst:
        grads.accumulate(n.inputs[0], g, g);
        break;
      case Op::kSquare: {
        const Tensor& x = value(n.inputs[0]);
        Tensor& dst = grads.slot(n.inputs[0], x);
        for (std::size_t i = 0; i < x.size(); ++i) dst[i] += 2.0 * x[i] * g[i];
        break;
      }
      case Op::kSum: {
        const Tensor& x = value(n.inputs[0]);
        Tensor& dst = grads.slot(n.inputs[0], x);
        const double gv = g[0];
        for (std::size_t i = 0; i < x.size(); ++i) dst[i] += gv;
        break;
      }
      case Op::kGradReverse: {
        Tensor& dst = grads.slot(n.inputs[0], g);
        const double factor = -n.scalar;
        for (std::size_t i = 0; i < g.size(); ++i) dst[i] += factor * g[i];
        break;
      }
      case Op::kIdentity:
        grads.accumulate(n.inputs[0], g, g);
        break;
      case Op::kGlobalAvgPool: {
        const Tensor& x = value(n.inputs[0]);
        const int batch = x.dim(0), ch = x.dim(1), hw = x.dim(2) * x.dim(3);
        const double inv = 1.0 / hw;
        Tensor& dst = grads.slot(n.inputs[0], x);
        for (int b = 0; b < batch; ++b)
          for (int c = 0; c < ch; ++c) {
            const double gv = g[static_cast<std::size_t>(b) * ch + c] * inv;
            double* p = dst.data() + (static_cast<std::size_t>(b) * ch + c) * hw;
            for (int i = 0; i < hw; ++i) p[i] += gv;
          }
        break;
      }
      case Op::kBatchNorm:
        backprop_batch_norm(n, g, grads);
        break;
      case Op::kDropout: {
        Tensor& dst = grads.slot(n.inputs[0], g);
        for (std::size_t i = 0; i < g.size(); ++i) dst[i] += g[i] * n.mask[i];
        break;
      }
      case Op::kSoftmaxCrossEntropy: {
        const Tensor& logits = value(n.inputs[0]);
        const int batch = logits.dim(0), classes = logits.dim(1);
        const double gv = g[0] / batch;
        Tensor& dst = grads.slot(n.inputs[0], logits);
        for (int b = 0; b < batch; ++b) {
          const double* prow = n.softmax_probs.data() + static_cast<std::size_t>(b) * classes;
          double* drow = dst.data() + static_cast<std::size_t>(b) * classes;
          for (int k = 0; k < classes; ++k) drow[k] += gv * prow[k];
          drow[n.labels[static_cast<std::size_t>(b)]] -= gv;
        }
        break;
      }
    }
  }

  void backprop_batch_norm(const Node& n, const Tensor& g, GradMap& grads) const {
    const Tensor& x = value(n.inputs[0]);
    const Tensor& gamma = value(n.inputs[1]);
    const int batch = x.dim(0), ch = x.dim(1), hw = x.dim(2) * x.dim(3);
    const std::size_t item = static_cast<std::size_t>(ch) * hw;
    Tensor& dx = grads.slot(n.inputs[0], x);
    Tensor& dgamma = grads.slot(n.inputs[1], gamma);
    Tensor& dbeta = grads.slot(n.inputs[2], gamma);
    const double m = static_cast<double>(batch) * hw;

    for (int c = 0; c < ch; ++c) {
      const double mu = n.bn_mean[static_cast<std::size_t>(c)];
      const double inv = n.bn_inv_std[static_cast<std::size_t>(c)];
      const double gm = gamma[static_cast<std::size_t>(c)];
      double sum_g = 0.0, sum_gx = 0.0;
      for (int b = 0; b < batch; ++b) {
        const double* xp = x.data() + b * item + static_cast<std::size_t>(c) * hw;
        const double* gp = g.data() + b * item + static_cast<std::size_t>(c) * hw;
        for (int i = 0; i < hw; ++i) {
          sum_g += gp[i];
          sum_gx += gp[i] * (xp[i] - mu) * inv;
        }
      }
      dgamma[static_cast<std::size_t>(c)] += sum_gx;
      dbeta[static_cast<std::size_t>(c)] += sum_g;
      if (n.bn_mode == BnMode::kEval) {
        // Running stats are constants; only the affine map is differentiated.
        const double k = gm * inv;
        for (int b = 0; b < batch; ++b) {
          const double* gp = g.data() + b * item + static_cast<std::size_t>(c) * hw;
          double* dp = dx.data() + b * item + static_cast<std::size_t>(c) * hw;
          for (int i = 0; i < hw; ++i) dp[i] += k * gp[i];
        }
      } else {
        const double k = gm * inv / m;
        for (int b = 0; b < batch; ++b) {
          const double* xp = x.data() + b * item + static_cast<std::size_t>(c) * hw;
          const double* gp = g.data() + b * item + static_cast<std::size_t>(c) * hw;
          double* dp = dx.data() + b * item + static_cast<std::size_t>(c) * hw;
          for (int i = 0; i < hw; ++i) {
            const double xhat = (xp[i] - mu) * inv;
            dp[i] += k * (m * gp[i] - sum_g - xhat * sum_gx);
          }
        }
      }
    }
  }

  std::vector<Node> nodes_;
};

}  // namespace advreg
