#include "phn/tape.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace phn {

namespace {

std::string binary_shape_msg(OpKind op, const Tensor& a, const Tensor& b) {
  return std::string(op_name(op)) + ": incompatible shapes " + shape_str(a.shape) + " and " +
         shape_str(b.shape);
}

}  // namespace

const char* op_name(OpKind op) {
  switch (op) {
    case OpKind::leaf: return "leaf";
    case OpKind::matmul: return "matmul";
    case OpKind::add: return "add";
    case OpKind::relu: return "relu";
    case OpKind::mse: return "mse";
    case OpKind::softmax_cross_entropy: return "softmax_cross_entropy";
    case OpKind::scale: return "scale";
    case OpKind::sum: return "sum";
    case OpKind::l2_norm_sq: return "l2_norm_sq";
    case OpKind::exp: return "exp";
    case OpKind::neg: return "neg";
    case OpKind::reshape: return "reshape";
    case OpKind::embed: return "embed";
    case OpKind::concat_cols: return "concat_cols";
  }
  return "?";
}

NodeId Tape::push(Node node) {
  grads_valid_ = false;
  nodes_.push_back(std::move(node));
  return NodeId{static_cast<uint32_t>(nodes_.size() - 1)};
}

NodeId Tape::leaf(Tensor value) {
  Node n;
  n.op = OpKind::leaf;
  n.value = std::move(value);
  return push(std::move(n));
}

NodeId Tape::matmul(NodeId a, NodeId b) {
  const Tensor& ta = val(a.index);
  const Tensor& tb = val(b.index);
  if (ta.rank() != 2 || tb.rank() != 2 || ta.cols() != tb.rows()) {
    throw ShapeError(binary_shape_msg(OpKind::matmul, ta, tb));
  }
  const int64_t p = ta.rows(), q = ta.cols(), r = tb.cols();
  Tensor out = Tensor::zeros({p, r});
  for (int64_t i = 0; i < p; ++i) {
    for (int64_t k = 0; k < q; ++k) {
      const double aik = ta.data[static_cast<size_t>(i * q + k)];
      if (aik == 0.0) continue;
      const double* brow = &tb.data[static_cast<size_t>(k * r)];
      double* orow = &out.data[static_cast<size_t>(i * r)];
      for (int64_t j = 0; j < r; ++j) orow[j] += aik * brow[j];
    }
  }
  Node n;
  n.op = OpKind::matmul;
  n.value = std::move(out);
  n.a = a.index;
  n.b = b.index;
  return push(std::move(n));
}

NodeId Tape::add(NodeId a, NodeId b) {
  const Tensor& ta = val(a.index);
  const Tensor& tb = val(b.index);
  Tensor out;
  if (ta.same_shape(tb)) {
    out = ta;
    for (size_t i = 0; i < out.data.size(); ++i) out.data[i] += tb.data[i];
  } else if (ta.rank() == 2 && tb.rank() == 1 && ta.cols() == tb.shape[0]) {
    // bias broadcast over rows
    out = ta;
    const int64_t rows = ta.rows(), cols = ta.cols();
    for (int64_t i = 0; i < rows; ++i) {
      for (int64_t j = 0; j < cols; ++j) out.at(i, j) += tb.data[static_cast<size_t>(j)];
    }
  } else {
    throw ShapeError(binary_shape_msg(OpKind::add, ta, tb));
  }
  Node n;
  n.op = OpKind::add;
  n.value = std::move(out);
  n.a = a.index;
  n.b = b.index;
  return push(std::move(n));
}

NodeId Tape::relu(NodeId x) {
  Tensor out = val(x.index);
  for (double& v : out.data) v = v > 0.0 ? v : 0.0;
  Node n;
  n.op = OpKind::relu;
  n.value = std::move(out);
  n.a = x.index;
  return push(std::move(n));
}

NodeId Tape::mse(NodeId prediction, NodeId target) {
  const Tensor& tp = val(prediction.index);
  const Tensor& tt = val(target.index);
  if (!tp.same_shape(tt)) {
    throw ShapeError(binary_shape_msg(OpKind::mse, tp, tt));
  }
  double acc = 0.0;
  for (size_t i = 0; i < tp.data.size(); ++i) {
    const double d = tp.data[i] - tt.data[i];
    acc += d * d;
  }
  Node n;
  n.op = OpKind::mse;
  n.value = Tensor::scalar(acc / static_cast<double>(tp.data.size()));
  n.a = prediction.index;
  n.b = target.index;
  return push(std::move(n));
}

NodeId Tape::softmax_cross_entropy(NodeId logits, NodeId targets) {
  const Tensor& tz = val(logits.index);
  const Tensor& ty = val(targets.index);
  if (tz.rank() != 2 || !tz.same_shape(ty)) {
    throw ShapeError(binary_shape_msg(OpKind::softmax_cross_entropy, tz, ty));
  }
  const int64_t batch = tz.rows(), classes = tz.cols();
  double acc = 0.0;
  for (int64_t i = 0; i < batch; ++i) {
    double zmax = tz.at(i, 0);
    for (int64_t c = 1; c < classes; ++c) zmax = std::max(zmax, tz.at(i, c));
    double sum_exp = 0.0;
    for (int64_t c = 0; c < classes; ++c) sum_exp += std::exp(tz.at(i, c) - zmax);
    const double lse = zmax + std::log(sum_exp);
    double dot = 0.0;
    for (int64_t c = 0; c < classes; ++c) dot += ty.at(i, c) * tz.at(i, c);
    acc += lse - dot;
  }
  Node n;
  n.op = OpKind::softmax_cross_entropy;
  n.value = Tensor::scalar(acc / static_cast<double>(batch));
  n.a = logits.index;
  n.b = targets.index;
  return push(std::move(n));
}

NodeId Tape::scale(NodeId x, double factor) {
  Tensor out = val(x.index);
  for (double& v : out.data) v *= factor;
  Node n;
  n.op = OpKind::scale;
  n.value = std::move(out);
  n.a = x.index;
  n.factor = factor;
  return push(std::move(n));
}

NodeId Tape::sum(NodeId x) {
  double acc = 0.0;
  for (double v : val(x.index).data) acc += v;
  Node n;
  n.op = OpKind::sum;
  n.value = Tensor::scalar(acc);
  n.a = x.index;
  return push(std::move(n));
}

NodeId Tape::l2_norm_sq(NodeId x) {
  double acc = 0.0;
  for (double v : val(x.index).data) acc += v * v;
  Node n;
  n.op = OpKind::l2_norm_sq;
  n.value = Tensor::scalar(acc);
  n.a = x.index;
  return push(std::move(n));
}

NodeId Tape::exp(NodeId x) {
  Tensor out = val(x.index);
  for (double& v : out.data) v = std::exp(v);
  Node n;
  n.op = OpKind::exp;
  n.value = std::move(out);
  n.a = x.index;
  return push(std::move(n));
}

NodeId Tape::neg(NodeId x) {
  Tensor out = val(x.index);
  for (double& v : out.data) v = -v;
  Node n;
  n.op = OpKind::neg;
  n.value = std::move(out);
  n.a = x.index;
  return push(std::move(n));
}

NodeId Tape::reshape(NodeId x, std::vector<int64_t> shape) {
  const Tensor& tx = val(x.index);
  if (shape_numel(shape) != tx.numel()) {
    throw ShapeError(std::string("reshape: cannot view ") + shape_str(tx.shape) + " as " +
                     shape_str(shape));
  }
  Node n;
  n.op = OpKind::reshape;
  n.value = Tensor(std::move(shape), tx.data);
  n.a = x.index;
  return push(std::move(n));
}

NodeId Tape::embed(NodeId table, std::vector<int64_t> indices) {
  const Tensor& tt = val(table.index);
  if (tt.rank() != 2) {
    throw ShapeError(std::string("embed: table must be rank 2, got ") + shape_str(tt.shape));
  }
  const int64_t rows = tt.rows(), dim = tt.cols();
  Tensor out = Tensor::zeros({static_cast<int64_t>(indices.size()), dim});
  for (size_t i = 0; i < indices.size(); ++i) {
    const int64_t idx = indices[i];
    if (idx < 0 || idx >= rows) {
      throw ValueError("embed: index " + std::to_string(idx) + " out of range [0, " +
                       std::to_string(rows) + ")");
    }
    std::copy_n(&tt.data[static_cast<size_t>(idx * dim)], dim,
                &out.data[i * static_cast<size_t>(dim)]);
  }
  Node n;
  n.op = OpKind::embed;
  n.value = std::move(out);
  n.a = table.index;
  n.indices = std::move(indices);
  return push(std::move(n));
}

NodeId Tape::concat_cols(std::span<const NodeId> parts) {
  if (parts.empty()) throw ShapeError("concat_cols: no inputs");
  const int64_t rows = val(parts[0].index).rows();
  int64_t total_cols = 0;
  for (NodeId p : parts) {
    const Tensor& t = val(p.index);
    if (t.rank() != 2 || t.rows() != rows) {
      throw ShapeError(std::string("concat_cols: expected [") + std::to_string(rows) +
                       ", *], got " + shape_str(t.shape));
    }
    total_cols += t.cols();
  }
  Tensor out = Tensor::zeros({rows, total_cols});
  int64_t col_off = 0;
  for (NodeId p : parts) {
    const Tensor& t = val(p.index);
    const int64_t c = t.cols();
    for (int64_t i = 0; i < rows; ++i) {
      std::copy_n(&t.data[static_cast<size_t>(i * c)], c,
                  &out.data[static_cast<size_t>(i * total_cols + col_off)]);
    }
    col_off += c;
  }
  Node n;
  n.op = OpKind::concat_cols;
  n.value = std::move(out);
  n.inputs.reserve(parts.size());
  for (NodeId p : parts) n.inputs.push_back(p.index);
  return push(std::move(n));
}

const Tensor& Tape::grad(NodeId id) const {
  if (!grads_valid_) throw ValueError("tape: grad() before backward()");
  return grads_[id.index];
}

void Tape::backward(NodeId root) {
  const Tensor& root_val = val(root.index);
  if (!root_val.is_scalar()) {
    throw ShapeError(std::string("backward: root must be scalar, got ") +
                     shape_str(root_val.shape));
  }
  grads_.assign(nodes_.size(), Tensor{});
  for (size_t i = 0; i < nodes_.size(); ++i) {
    grads_[i] = Tensor::zeros(nodes_[i].value.shape);
  }
  grads_[root.index].data[0] = 1.0;

  for (uint32_t i = root.index + 1; i-- > 0;) {
    const Node& node = nodes_[i];
    const Tensor& g = grads_[i];
    switch (node.op) {
      case OpKind::leaf:
        break;
      case OpKind::matmul: {
        const Tensor& ta = val(node.a);
        const Tensor& tb = val(node.b);
        Tensor& da = grads_[node.a];
        Tensor& db = grads_[node.b];
        const int64_t p = ta.rows(), q = ta.cols(), r = tb.cols();
        // dA += g * B^T ; dB += A^T * g
        for (int64_t ii = 0; ii < p; ++ii) {
          for (int64_t k = 0; k < q; ++k) {
            double acc = 0.0;
            const double* grow = &g.data[static_cast<size_t>(ii * r)];
            const double* brow = &tb.data[static_cast<size_t>(k * r)];
            for (int64_t j = 0; j < r; ++j) acc += grow[j] * brow[j];
            da.data[static_cast<size_t>(ii * q + k)] += acc;
          }
        }
        for (int64_t k = 0; k < q; ++k) {
          for (int64_t ii = 0; ii < p; ++ii) {
            const double aik = ta.data[static_cast<size_t>(ii * q + k)];
            if (aik == 0.0) continue;
            const double* grow = &g.data[static_cast<size_t>(ii * r)];
            double* drow = &db.data[static_cast<size_t>(k * r)];
            for (int64_t j = 0; j < r; ++j) drow[j] += aik * grow[j];
          }
        }
        break;
      }
      case OpKind::add: {
        Tensor& da = grads_[node.a];
        Tensor& db = grads_[node.b];
        for (size_t k = 0; k < g.data.size(); ++k) da.data[k] += g.data[k];
        if (da.same_shape(db)) {
          for (size_t k = 0; k < g.data.size(); ++k) db.data[k] += g.data[k];
        } else {
          // bias broadcast: column sums
          const int64_t rows = node.value.rows(), cols = node.value.cols();
          for (int64_t ii = 0; ii < rows; ++ii) {
            for (int64_t j = 0; j < cols; ++j) {
              db.data[static_cast<size_t>(j)] += g.data[static_cast<size_t>(ii * cols + j)];
            }
          }
        }
        break;
      }
      case OpKind::relu: {
        const Tensor& tx = val(node.a);
        Tensor& dx = grads_[node.a];
        // subgradient 0 at the kink
        for (size_t k = 0; k < g.data.size(); ++k) {
          if (tx.data[k] > 0.0) dx.data[k] += g.data[k];
        }
        break;
      }
      case OpKind::mse: {
        const Tensor& tp = val(node.a);
        const Tensor& tt = val(node.b);
        Tensor& dp = grads_[node.a];
        Tensor& dt = grads_[node.b];
        const double c = 2.0 * g.data[0] / static_cast<double>(tp.data.size());
        for (size_t k = 0; k < tp.data.size(); ++k) {
          const double d = c * (tp.data[k] - tt.data[k]);
          dp.data[k] += d;
          dt.data[k] -= d;
        }
        break;
      }
      case OpKind::softmax_cross_entropy: {
        const Tensor& tz = val(node.a);
        const Tensor& ty = val(node.b);
        Tensor& dz = grads_[node.a];
        Tensor& dy = grads_[node.b];
        const int64_t batch = tz.rows(), classes = tz.cols();
        const double c = g.data[0] / static_cast<double>(batch);
        for (int64_t ii = 0; ii < batch; ++ii) {
          double zmax = tz.at(ii, 0);
          for (int64_t cc = 1; cc < classes; ++cc) zmax = std::max(zmax, tz.at(ii, cc));
          double sum_exp = 0.0;
          for (int64_t cc = 0; cc < classes; ++cc) sum_exp += std::exp(tz.at(ii, cc) - zmax);
          for (int64_t cc = 0; cc < classes; ++cc) {
            const double softmax = std::exp(tz.at(ii, cc) - zmax) / sum_exp;
            dz.at(ii, cc) += c * (softmax - ty.at(ii, cc));
            dy.at(ii, cc) -= c * tz.at(ii, cc);
          }
        }
        break;
      }
      case OpKind::scale: {
        Tensor& dx = grads_[node.a];
        for (size_t k = 0; k < g.data.size(); ++k) dx.data[k] += node.factor * g.data[k];
        break;
      }
      case OpKind::sum: {
        Tensor& dx = grads_[node.a];
        const double go = g.data[0];
        for (double& v : dx.data) v += go;
        break;
      }
      case OpKind::l2_norm_sq: {
        const Tensor& tx = val(node.a);
        Tensor& dx = grads_[node.a];
        const double c = 2.0 * g.data[0];
        for (size_t k = 0; k < tx.data.size(); ++k) dx.data[k] += c * tx.data[k];
        break;
      }
      case OpKind::exp: {
        Tensor& dx = grads_[node.a];
        for (size_t k = 0; k < g.data.size(); ++k) dx.data[k] += node.value.data[k] * g.data[k];
        break;
      }
      case OpKind::neg: {
        Tensor& dx = grads_[node.a];
        for (size_t k = 0; k < g.data.size(); ++k) dx.data[k] -= g.data[k];
        break;
      }
      case OpKind::reshape: {
        Tensor& dx = grads_[node.a];
        for (size_t k = 0; k < g.data.size(); ++k) dx.data[k] += g.data[k];
        break;
      }
      case OpKind::embed: {
        Tensor& dt = grads_[node.a];
        const int64_t dim = val(node.a).cols();
        for (size_t ii = 0; ii < node.indices.size(); ++ii) {
          const int64_t idx = node.indices[ii];
          for (int64_t j = 0; j < dim; ++j) {
            dt.data[static_cast<size_t>(idx * dim + j)] +=
                g.data[ii * static_cast<size_t>(dim) + static_cast<size_t>(j)];
          }
        }
        break;
      }
      case OpKind::concat_cols: {
        const int64_t rows = node.value.rows(), total_cols = node.value.cols();
        int64_t col_off = 0;
        for (uint32_t input : node.inputs) {
          Tensor& dp = grads_[input];
          const int64_t c = val(input).cols();
          for (int64_t ii = 0; ii < rows; ++ii) {
            for (int64_t j = 0; j < c; ++j) {
              dp.data[static_cast<size_t>(ii * c + j)] +=
                  g.data[static_cast<size_t>(ii * total_cols + col_off + j)];
            }
          }
          col_off += c;
        }
        break;
      }
    }
  }
  grads_valid_ = true;
}

}  // namespace phn
