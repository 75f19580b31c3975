#include "phn/networks.hpp"

#include <cmath>

#include "phn/errors.hpp"

namespace phn {

void ParamLayout::add(std::string name, std::vector<int64_t> shape, InitKind init,
                      double init_scale) {
  TensorLayoutEntry e;
  e.name = std::move(name);
  e.shape = std::move(shape);
  e.offset = total_;
  e.init = init;
  e.init_scale = init_scale;
  total_ += e.size();
  entries_.push_back(std::move(e));
}

bool ParamLayout::operator==(const ParamLayout& other) const {
  if (total_ != other.total_ || entries_.size() != other.entries_.size()) return false;
  for (size_t i = 0; i < entries_.size(); ++i) {
    const auto& a = entries_[i];
    const auto& b = other.entries_[i];
    if (a.name != b.name || a.shape != b.shape || a.offset != b.offset) return false;
  }
  return true;
}

ParamVector ParamVector::zeros(ParamLayout layout) {
  ParamVector p;
  const size_t n = layout.total_size();
  p.layout = std::move(layout);
  p.data.assign(n, 0.0);
  return p;
}

std::span<double> ParamVector::tensor_span(size_t entry) {
  const auto& e = layout.entries()[entry];
  return {data.data() + e.offset, e.size()};
}

std::span<const double> ParamVector::tensor_span(size_t entry) const {
  const auto& e = layout.entries()[entry];
  return {data.data() + e.offset, e.size()};
}

ParamLayout target_layout(const TargetSpec& spec) {
  if (spec.input_dim <= 0) throw ShapeError("target_layout: input_dim must be positive");
  if (spec.head_dims.empty()) throw ShapeError("target_layout: needs at least one head");
  ParamLayout layout;
  int64_t prev = spec.input_dim;
  for (size_t i = 0; i < spec.hidden.size(); ++i) {
    const int64_t width = spec.hidden[i];
    layout.add("layer" + std::to_string(i) + ".w", {prev, width});
    layout.add("layer" + std::to_string(i) + ".b", {width}, InitKind::zero);
    prev = width;
  }
  for (size_t h = 0; h < spec.head_dims.size(); ++h) {
    layout.add("head" + std::to_string(h) + ".w", {prev, spec.head_dims[h]});
    layout.add("head" + std::to_string(h) + ".b", {spec.head_dims[h]}, InitKind::zero);
  }
  return layout;
}

ParamLayout hypernet_layout(const HyperNetSpec& spec, const ParamLayout& target) {
  if (spec.preference_dim <= 0) {
    throw ShapeError("hypernet_layout: preference_dim must be positive");
  }
  if (spec.trunk_hidden.empty()) {
    throw ShapeError("hypernet_layout: needs at least one trunk layer");
  }
  ParamLayout layout;
  int64_t prev = spec.preference_dim;
  for (size_t i = 0; i < spec.trunk_hidden.size(); ++i) {
    const int64_t width = spec.trunk_hidden[i];
    layout.add("trunk" + std::to_string(i) + ".w", {prev, width});
    layout.add("trunk" + std::to_string(i) + ".b", {width}, InitKind::zero);
    prev = width;
  }
  for (const auto& e : target.entries()) {
    const auto out = static_cast<int64_t>(e.size());
    layout.add("head(" + e.name + ").w", {prev, out}, InitKind::glorot, 0.1);
    layout.add("head(" + e.name + ").b", {out}, InitKind::zero);
  }
  return layout;
}

ParamVector init_params(const ParamLayout& layout, uint64_t seed) {
  ParamVector params = ParamVector::zeros(layout);
  Rng rng(seed);
  for (size_t i = 0; i < layout.entries().size(); ++i) {
    const auto& e = layout.entries()[i];
    if (e.init == InitKind::zero) continue;
    const double fan_in = static_cast<double>(e.shape[0]);
    const double fan_out = e.shape.size() > 1 ? static_cast<double>(e.shape[1]) : 1.0;
    const double limit = e.init_scale * std::sqrt(6.0 / (fan_in + fan_out));
    for (double& v : params.tensor_span(i)) v = rng.uniform(-limit, limit);
  }
  return params;
}

std::vector<NodeId> insert_leaves(Tape& tape, const ParamVector& params) {
  std::vector<NodeId> nodes;
  const auto& entries = params.layout.entries();
  nodes.reserve(entries.size());
  for (size_t i = 0; i < entries.size(); ++i) {
    auto span = params.tensor_span(i);
    nodes.push_back(tape.leaf(Tensor(entries[i].shape, {span.begin(), span.end()})));
  }
  return nodes;
}

std::vector<double> flatten_grads(const Tape& tape, std::span<const NodeId> leaves) {
  std::vector<double> flat;
  for (NodeId id : leaves) {
    const Tensor& g = tape.grad(id);
    flat.insert(flat.end(), g.data.begin(), g.data.end());
  }
  return flat;
}

std::vector<NodeId> target_forward(const TargetSpec& spec, Tape& tape,
                                   std::span<const NodeId> phi, NodeId x) {
  const ParamLayout expected = target_layout(spec);
  const auto& entries = expected.entries();
  if (phi.size() != entries.size()) {
    throw ShapeError("target_forward: expected " + std::to_string(entries.size()) +
                     " parameter tensors, got " + std::to_string(phi.size()));
  }
  for (size_t i = 0; i < entries.size(); ++i) {
    if (tape.value(phi[i]).shape != entries[i].shape) {
      throw ShapeError("target_forward: tensor '" + entries[i].name + "' expected shape " +
                       shape_str(entries[i].shape) + ", got " +
                       shape_str(tape.value(phi[i]).shape));
    }
  }
  size_t p = 0;
  NodeId h = x;
  for (size_t i = 0; i < spec.hidden.size(); ++i) {
    h = tape.relu(tape.add(tape.matmul(h, phi[p]), phi[p + 1]));
    p += 2;
  }
  std::vector<NodeId> heads;
  heads.reserve(spec.head_dims.size());
  for (size_t j = 0; j < spec.head_dims.size(); ++j) {
    heads.push_back(tape.add(tape.matmul(h, phi[p]), phi[p + 1]));
    p += 2;
  }
  return heads;
}

std::vector<NodeId> hypernet_forward(const HyperNetSpec& spec, Tape& tape,
                                     std::span<const NodeId> theta,
                                     const PreferenceVector& r,
                                     const ParamLayout& target) {
  if (static_cast<int64_t>(r.size()) != spec.preference_dim) {
    throw ShapeError("hypernet_forward: preference has " + std::to_string(r.size()) +
                     " entries, spec expects " + std::to_string(spec.preference_dim));
  }
  const size_t expected = 2 * spec.trunk_hidden.size() + 2 * target.entries().size();
  if (theta.size() != expected) {
    throw ShapeError("hypernet_forward: expected " + std::to_string(expected) +
                     " parameter tensors, got " + std::to_string(theta.size()));
  }
  NodeId h = tape.leaf(Tensor::row_vector(r.vec()));
  size_t p = 0;
  for (size_t i = 0; i < spec.trunk_hidden.size(); ++i) {
    h = tape.relu(tape.add(tape.matmul(h, theta[p]), theta[p + 1]));
    p += 2;
  }
  std::vector<NodeId> phi;
  phi.reserve(target.entries().size());
  for (const auto& e : target.entries()) {
    NodeId flat = tape.add(tape.matmul(h, theta[p]), theta[p + 1]);
    p += 2;
    phi.push_back(tape.reshape(flat, e.shape));
  }
  return phi;
}

ParamVector eval_phi(const HyperNetSpec& spec, const ParamVector& theta,
                     const PreferenceVector& r, const ParamLayout& target) {
  Tape tape;
  const std::vector<NodeId> leaves = insert_leaves(tape, theta);
  const std::vector<NodeId> phi = hypernet_forward(spec, tape, leaves, r, target);
  ParamVector out = ParamVector::zeros(target);
  for (size_t i = 0; i < phi.size(); ++i) {
    const Tensor& t = tape.value(phi[i]);
    std::copy(t.data.begin(), t.data.end(), out.tensor_span(i).begin());
  }
  return out;
}

}  // namespace phn
