#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "phn/networks.hpp"

namespace phn {

enum class Split { train, val, test };

/// One mini-batch (or a full split) of training data. Problems without data
/// (the analytic toy objective) leave everything empty.
struct Batch {
  Tensor x;                                    // [B, d] numeric features
  std::vector<std::vector<int64_t>> cat;       // per categorical feature, B indices
  std::vector<Tensor> y;                       // per head targets
  int64_t size = 0;
};

/// A differentiable multi-objective problem: m losses evaluated on tape over
/// a flat parameter vector described by param_layout().
class Problem {
 public:
  virtual ~Problem() = default;

  virtual std::string name() const = 0;
  virtual size_t num_objectives() const = 0;
  virtual const ParamLayout& param_layout() const = 0;
  virtual const TargetSpec* target_spec() const { return nullptr; }

  virtual Batch sample_batch(size_t batch_size, Rng& rng) const = 0;
  virtual Batch full_batch(Split split) const = 0;

  /// m scalar loss nodes; phi holds one node per param_layout entry.
  virtual std::vector<NodeId> losses(Tape& tape, std::span<const NodeId> phi,
                                     const Batch& batch) const = 0;

  /// Loss values at a concrete parameter vector (no gradients).
  LossVector loss_values(const ParamVector& phi, const Batch& batch) const;
};

/// Two exponential objectives over theta in R^d whose Pareto set is the
/// segment between the minimizers +-1/sqrt(d); the front is non-convex in
/// loss space.
class ToyProblem final : public Problem {
 public:
  explicit ToyProblem(int64_t dim = 100);

  std::string name() const override { return "toy"; }
  size_t num_objectives() const override { return 2; }
  const ParamLayout& param_layout() const override { return layout_; }
  Batch sample_batch(size_t, Rng&) const override { return {}; }
  Batch full_batch(Split) const override { return {}; }
  std::vector<NodeId> losses(Tape& tape, std::span<const NodeId> phi,
                             const Batch& batch) const override;

  int64_t dim() const { return dim_; }

 private:
  int64_t dim_;
  ParamLayout layout_;
};

/// Loss pair of the toy objectives at theta.
LossVector toy_losses(std::span<const double> theta);

/// Densely sampled true front: theta(s) = s 1/sqrt(d) for s in [-1, 1] gives
/// losses (1 - e^{-(s-1)^2}, 1 - e^{-(s+1)^2}).
std::vector<LossVector> toy_front_oracle(size_t n_points);

/// In-memory dataset with deterministic 70/10/20 splits.
struct Dataset {
  Tensor features;                              // [n, d] numeric
  std::vector<std::vector<int64_t>> cat_columns;  // per categorical feature, n indices
  std::vector<int64_t> cat_cardinalities;
  std::vector<Tensor> targets;                  // per head, [n, head_dim]
  std::vector<size_t> train_idx, val_idx, test_idx;

  size_t rows() const { return static_cast<size_t>(features.rows()); }
  const std::vector<size_t>& split_indices(Split split) const;
};

/// Deterministic shuffled 70/10/20 split of n rows.
void assign_splits(Dataset& data, uint64_t seed);

enum class ObjectiveKind : uint8_t { mse, binary_cross_entropy };

/// Multi-output regression targets drawn from a hidden network of the same
/// architecture, one MSE objective per task.
class SynthRegressionProblem final : public Problem {
 public:
  SynthRegressionProblem(size_t n, int64_t input_dim, size_t tasks, double noise,
                         uint64_t seed, std::vector<int64_t> hidden = {16});

  std::string name() const override { return "synth-regression"; }
  size_t num_objectives() const override { return spec_.head_dims.size(); }
  const ParamLayout& param_layout() const override { return layout_; }
  const TargetSpec* target_spec() const override { return &spec_; }
  Batch sample_batch(size_t batch_size, Rng& rng) const override;
  Batch full_batch(Split split) const override;
  std::vector<NodeId> losses(Tape& tape, std::span<const NodeId> phi,
                             const Batch& batch) const override;

  const Dataset& dataset() const { return data_; }

 private:
  TargetSpec spec_;
  ParamLayout layout_;
  Dataset data_;
};

/// Tabular problem loaded from CSV; objectives per declared target column.
/// Categorical feature columns become learnable index embeddings of dimension
/// min(8, ceil(K / 2)).
class CsvProblem final : public Problem {
 public:
  std::string name() const override { return "csv"; }
  size_t num_objectives() const override { return objectives_.size(); }
  const ParamLayout& param_layout() const override { return layout_; }
  const TargetSpec* target_spec() const override { return &spec_; }
  Batch sample_batch(size_t batch_size, Rng& rng) const override;
  Batch full_batch(Split split) const override;
  std::vector<NodeId> losses(Tape& tape, std::span<const NodeId> phi,
                             const Batch& batch) const override;

  const Dataset& dataset() const { return data_; }
  const std::vector<ObjectiveKind>& objectives() const { return objectives_; }

 private:
  friend std::unique_ptr<CsvProblem> load_csv_problem(const std::string&,
                                                      const std::vector<std::string>&,
                                                      const std::vector<ObjectiveKind>&,
                                                      std::vector<int64_t>, uint64_t);
  TargetSpec spec_;
  ParamLayout layout_;
  Dataset data_;
  std::vector<ObjectiveKind> objectives_;
  size_t embed_entries_ = 0;  // leading layout entries that are embedding tables
};

/// Parses an RFC-4180-style CSV (header row required, '.' decimal separator)
/// into a tabular problem. target_columns name the objective columns;
/// objective_spec gives one objective kind per target column. Structured
/// errors carry the offending row/column.
std::unique_ptr<CsvProblem> load_csv_problem(const std::string& path,
                                             const std::vector<std::string>& target_columns,
                                             const std::vector<ObjectiveKind>& objective_spec,
                                             std::vector<int64_t> hidden = {40, 20},
                                             uint64_t seed = 0);

/// Raw CSV table: header + string cells (quotes resolved).
struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
};
CsvTable parse_csv(const std::string& path);

Batch gather_batch(const Dataset& data, std::span<const size_t> indices);

}  // namespace phn
