#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "phn/moo.hpp"
#include "phn/rng.hpp"
#include "phn/tape.hpp"

namespace phn {

enum class InitKind : uint8_t { glorot, zero };

/// One tensor inside a flat parameter vector.
struct TensorLayoutEntry {
  std::string name;
  std::vector<int64_t> shape;
  size_t offset = 0;
  InitKind init = InitKind::glorot;
  double init_scale = 1.0;

  size_t size() const { return static_cast<size_t>(shape_numel(shape)); }
};

/// Ordered, contiguous, non-overlapping tensor layout of a parameter vector.
class ParamLayout {
 public:
  ParamLayout() = default;

  /// Appends a tensor at the current end of the layout.
  void add(std::string name, std::vector<int64_t> shape, InitKind init = InitKind::glorot,
           double init_scale = 1.0);

  const std::vector<TensorLayoutEntry>& entries() const { return entries_; }
  size_t total_size() const { return total_; }
  bool operator==(const ParamLayout& other) const;

 private:
  std::vector<TensorLayoutEntry> entries_;
  size_t total_ = 0;
};

/// Flat float64 parameter vector plus its layout.
struct ParamVector {
  ParamLayout layout;
  std::vector<double> data;

  static ParamVector zeros(ParamLayout layout);
  std::span<double> tensor_span(size_t entry);
  std::span<const double> tensor_span(size_t entry) const;
};

/// Feed-forward target network: relu hidden layers, one linear head per task.
struct TargetSpec {
  int64_t input_dim = 0;
  std::vector<int64_t> hidden;
  std::vector<int64_t> head_dims;

  size_t heads() const { return head_dims.size(); }
};

ParamLayout target_layout(const TargetSpec& spec);

/// Preference-conditioned hypernetwork: an MLP trunk on the raw preference
/// vector plus one linear head per target tensor.
struct HyperNetSpec {
  int64_t preference_dim = 0;
  std::vector<int64_t> trunk_hidden;
};

/// Head layout follows the target layout tensor-for-tensor; head output sizes
/// sum to the target parameter count by construction.
ParamLayout hypernet_layout(const HyperNetSpec& spec, const ParamLayout& target);

/// Deterministic glorot-uniform initialization (zero biases); entries carry
/// their own scale so hypernetwork heads start small.
ParamVector init_params(const ParamLayout& layout, uint64_t seed);

/// Inserts each layout tensor as a leaf; returns one node per entry.
std::vector<NodeId> insert_leaves(Tape& tape, const ParamVector& params);

/// Gradients of the current backward root w.r.t. the given leaves, flattened
/// in layout order.
std::vector<double> flatten_grads(const Tape& tape, std::span<const NodeId> leaves);

/// Runs the target network on tape-resident parameters phi (one node per
/// target_layout entry, e.g. hypernetwork outputs or leaves). Returns one
/// prediction node per head.
std::vector<NodeId> target_forward(const TargetSpec& spec, Tape& tape,
                                   std::span<const NodeId> phi, NodeId x);

/// Emits the target parameters for preference r: trunk MLP then one linear
/// head per target tensor, reshaped to the tensor's shape. Differentiable
/// w.r.t. the theta leaves.
std::vector<NodeId> hypernet_forward(const HyperNetSpec& spec, Tape& tape,
                                     std::span<const NodeId> theta,
                                     const PreferenceVector& r,
                                     const ParamLayout& target);

/// Convenience: materialize phi(theta, r) as a flat ParamVector (no
/// gradients retained).
ParamVector eval_phi(const HyperNetSpec& spec, const ParamVector& theta,
                     const PreferenceVector& r, const ParamLayout& target);

}  // namespace phn
