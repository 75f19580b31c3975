#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "phn/tensor.hpp"

namespace phn {

enum class OpKind : uint8_t {
  leaf,
  matmul,
  add,
  relu,
  mse,
  softmax_cross_entropy,
  scale,
  sum,
  l2_norm_sq,
  exp,
  neg,
  reshape,
  embed,
  concat_cols,
};

const char* op_name(OpKind op);

/// Handle to a node on a Tape.
struct NodeId {
  uint32_t index = 0;
  friend bool operator==(NodeId a, NodeId b) { return a.index == b.index; }
};

/// Reverse-mode differentiation record for one forward pass. Nodes are stored
/// in topological order (an op's inputs always precede it); backward walks the
/// record once, back to front. A Tape is rebuilt per forward pass and must not
/// be shared across threads during a pass.
class Tape {
 public:
  Tape() = default;

  NodeId leaf(Tensor value);

  NodeId matmul(NodeId a, NodeId b);
  /// Elementwise add; also accepts [B, n] + [n] (bias broadcast over rows).
  NodeId add(NodeId a, NodeId b);
  NodeId relu(NodeId x);
  /// Mean squared error over all entries; scalar output.
  NodeId mse(NodeId prediction, NodeId target);
  /// Fused log-sum-exp stabilized softmax cross entropy. logits and targets
  /// are [B, C]; targets are one-hot (or any row distribution). Scalar mean
  /// over the batch.
  NodeId softmax_cross_entropy(NodeId logits, NodeId targets);
  NodeId scale(NodeId x, double factor);
  NodeId sum(NodeId x);
  NodeId l2_norm_sq(NodeId x);
  NodeId exp(NodeId x);
  NodeId neg(NodeId x);
  /// Same data, new shape (numel preserved). Gradient passes through.
  NodeId reshape(NodeId x, std::vector<int64_t> shape);
  /// Row gather: table is [K, D], output is [indices.size(), D].
  NodeId embed(NodeId table, std::vector<int64_t> indices);
  /// Concatenate rank-2 tensors with equal row counts along columns.
  NodeId concat_cols(std::span<const NodeId> parts);

  /// Backpropagate from a scalar root. Fills the adjoint of every node that
  /// feeds the root; the root's adjoint is 1. May be called repeatedly with
  /// different roots; adjoints are reset each call.
  void backward(NodeId root);

  const Tensor& value(NodeId id) const { return nodes_[id.index].value; }
  const Tensor& grad(NodeId id) const;
  size_t size() const { return nodes_.size(); }

 private:
  static constexpr uint32_t kNone = UINT32_MAX;

  struct Node {
    OpKind op = OpKind::leaf;
    Tensor value;
    uint32_t a = kNone;
    uint32_t b = kNone;
    std::vector<uint32_t> inputs;   // concat_cols only
    std::vector<int64_t> indices;   // embed only
    double factor = 0.0;            // scale only
  };

  NodeId push(Node node);
  const Tensor& val(uint32_t i) const { return nodes_[i].value; }

  std::vector<Node> nodes_;
  std::vector<Tensor> grads_;
  bool grads_valid_ = false;
};

}  // namespace phn
