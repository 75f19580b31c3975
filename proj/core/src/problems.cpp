#include "phn/problems.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <map>
#include <numeric>
#include <sstream>

#include "phn/errors.hpp"

namespace phn {

LossVector Problem::loss_values(const ParamVector& phi, const Batch& batch) const {
  Tape tape;
  const std::vector<NodeId> leaves = insert_leaves(tape, phi);
  const std::vector<NodeId> nodes = losses(tape, leaves, batch);
  LossVector out(nodes.size());
  for (size_t i = 0; i < nodes.size(); ++i) out[i] = tape.value(nodes[i]).data[0];
  return out;
}

// --- toy objective ---------------------------------------------------------

ToyProblem::ToyProblem(int64_t dim) : dim_(dim) {
  if (dim_ < 1) throw ShapeError("toy: dim must be >= 1");
  layout_.add("theta", {dim_}, InitKind::glorot);
}

std::vector<NodeId> ToyProblem::losses(Tape& tape, std::span<const NodeId> phi,
                                       const Batch&) const {
  const double c = 1.0 / std::sqrt(static_cast<double>(dim_));
  const NodeId theta = phi[0];
  const NodeId one = tape.leaf(Tensor::scalar(1.0));
  auto objective = [&](double center) {
    const NodeId shifted = tape.add(theta, tape.leaf(Tensor::full({dim_}, -center)));
    const NodeId dist_sq = tape.l2_norm_sq(shifted);
    const NodeId gauss = tape.exp(tape.neg(dist_sq));
    return tape.add(one, tape.neg(gauss));
  };
  return {objective(c), objective(-c)};
}

LossVector toy_losses(std::span<const double> theta) {
  const double c = 1.0 / std::sqrt(static_cast<double>(theta.size()));
  double d1 = 0.0, d2 = 0.0;
  for (double v : theta) {
    d1 += (v - c) * (v - c);
    d2 += (v + c) * (v + c);
  }
  return {1.0 - std::exp(-d1), 1.0 - std::exp(-d2)};
}

std::vector<LossVector> toy_front_oracle(size_t n_points) {
  if (n_points < 2) throw ValueError("toy_front_oracle: need at least 2 points");
  std::vector<LossVector> front;
  front.reserve(n_points);
  for (size_t k = 0; k < n_points; ++k) {
    const double s = -1.0 + 2.0 * static_cast<double>(k) / static_cast<double>(n_points - 1);
    front.push_back({1.0 - std::exp(-(s - 1.0) * (s - 1.0)),
                     1.0 - std::exp(-(s + 1.0) * (s + 1.0))});
  }
  return front;
}

// --- datasets ---------------------------------------------------------------

const std::vector<size_t>& Dataset::split_indices(Split split) const {
  switch (split) {
    case Split::train: return train_idx;
    case Split::val: return val_idx;
    case Split::test: return test_idx;
  }
  return train_idx;
}

void assign_splits(Dataset& data, uint64_t seed) {
  const size_t n = data.rows();
  std::vector<size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  Rng rng(seed);
  for (size_t i = n; i > 1; --i) {
    const size_t j = static_cast<size_t>(rng.next_u64() % i);
    std::swap(order[i - 1], order[j]);
  }
  const auto n_train = static_cast<size_t>(std::lround(0.7 * static_cast<double>(n)));
  const auto n_val = static_cast<size_t>(std::lround(0.1 * static_cast<double>(n)));
  data.train_idx.assign(order.begin(), order.begin() + static_cast<ptrdiff_t>(n_train));
  data.val_idx.assign(order.begin() + static_cast<ptrdiff_t>(n_train),
                      order.begin() + static_cast<ptrdiff_t>(n_train + n_val));
  data.test_idx.assign(order.begin() + static_cast<ptrdiff_t>(n_train + n_val), order.end());
}

Batch gather_batch(const Dataset& data, std::span<const size_t> indices) {
  Batch batch;
  batch.size = static_cast<int64_t>(indices.size());
  const int64_t d = data.features.cols();
  batch.x = Tensor::zeros({batch.size, d});
  for (size_t i = 0; i < indices.size(); ++i) {
    for (int64_t j = 0; j < d; ++j) {
      batch.x.at(static_cast<int64_t>(i), j) = data.features.at(static_cast<int64_t>(indices[i]), j);
    }
  }
  batch.cat.resize(data.cat_columns.size());
  for (size_t c = 0; c < data.cat_columns.size(); ++c) {
    batch.cat[c].reserve(indices.size());
    for (size_t idx : indices) batch.cat[c].push_back(data.cat_columns[c][idx]);
  }
  batch.y.reserve(data.targets.size());
  for (const Tensor& target : data.targets) {
    const int64_t td = target.cols();
    Tensor t = Tensor::zeros({batch.size, td});
    for (size_t i = 0; i < indices.size(); ++i) {
      for (int64_t j = 0; j < td; ++j) {
        t.at(static_cast<int64_t>(i), j) = target.at(static_cast<int64_t>(indices[i]), j);
      }
    }
    batch.y.push_back(std::move(t));
  }
  return batch;
}

namespace {

Batch sample_from(const Dataset& data, size_t batch_size, Rng& rng) {
  const auto& pool = data.train_idx;
  if (batch_size >= pool.size()) return gather_batch(data, pool);  // full batch
  std::vector<size_t> indices;
  indices.reserve(batch_size);
  for (size_t i = 0; i < batch_size; ++i) {
    indices.push_back(pool[static_cast<size_t>(rng.next_u64() % pool.size())]);
  }
  return gather_batch(data, indices);
}

}  // namespace

// --- synthetic multitask regression -----------------------------------------

SynthRegressionProblem::SynthRegressionProblem(size_t n, int64_t input_dim, size_t tasks,
                                               double noise, uint64_t seed,
                                               std::vector<int64_t> hidden) {
  if (tasks < 2) throw ShapeError("synth-regression: needs tasks >= 2");
  spec_.input_dim = input_dim;
  spec_.hidden = std::move(hidden);
  spec_.head_dims.assign(tasks, 1);
  layout_ = target_layout(spec_);

  Rng rng(seed);
  Tensor x = Tensor::zeros({static_cast<int64_t>(n), input_dim});
  for (double& v : x.data) v = rng.normal();

  // hidden ground-truth network of the same architecture
  const ParamVector truth = init_params(layout_, seed ^ 0x9e3779b97f4a7c15ULL);
  Tape tape;
  const std::vector<NodeId> leaves = insert_leaves(tape, truth);
  const std::vector<NodeId> heads = target_forward(spec_, tape, leaves, tape.leaf(x));

  data_.features = std::move(x);
  for (size_t t = 0; t < tasks; ++t) {
    Tensor y = tape.value(heads[t]);
    for (double& v : y.data) v += noise * rng.normal();
    data_.targets.push_back(std::move(y));
  }
  assign_splits(data_, seed);
}

Batch SynthRegressionProblem::sample_batch(size_t batch_size, Rng& rng) const {
  return sample_from(data_, batch_size, rng);
}

Batch SynthRegressionProblem::full_batch(Split split) const {
  return gather_batch(data_, data_.split_indices(split));
}

std::vector<NodeId> SynthRegressionProblem::losses(Tape& tape, std::span<const NodeId> phi,
                                                   const Batch& batch) const {
  const std::vector<NodeId> heads = target_forward(spec_, tape, phi, tape.leaf(batch.x));
  std::vector<NodeId> out;
  out.reserve(heads.size());
  for (size_t t = 0; t < heads.size(); ++t) {
    out.push_back(tape.mse(heads[t], tape.leaf(batch.y[t])));
  }
  return out;
}

// --- CSV problems ------------------------------------------------------------

namespace {

struct CsvLocation {
  size_t row;  // 1-based, header is row 1
  size_t col;  // 1-based
};

[[noreturn]] void csv_fail(const std::string& path, const std::string& what, CsvLocation loc) {
  throw IoError(path + ": " + what + " (row " + std::to_string(loc.row) + ", column " +
                std::to_string(loc.col) + ")");
}

bool parse_double(const std::string& cell, double& out) {
  if (cell.empty()) return false;
  const char* begin = cell.c_str();
  char* end = nullptr;
  out = std::strtod(begin, &end);
  return end == begin + cell.size();
}

}  // namespace

CsvTable parse_csv(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError(path + ": cannot open file");
  std::ostringstream buffer;
  buffer << in.rdbuf();
  const std::string text = buffer.str();

  CsvTable table;
  std::vector<std::string> record;
  std::string field;
  bool quoted = false;
  bool any_field = false;
  size_t line = 1;

  auto end_field = [&]() {
    record.push_back(field);
    field.clear();
    any_field = false;
  };
  auto end_record = [&]() {
    end_field();
    if (table.header.empty()) {
      table.header = std::move(record);
    } else {
      if (record.size() != table.header.size()) {
        csv_fail(path,
                 "expected " + std::to_string(table.header.size()) + " fields, got " +
                     std::to_string(record.size()),
                 {line, record.size()});
      }
      table.rows.push_back(std::move(record));
    }
    record = {};
  };

  for (size_t i = 0; i < text.size(); ++i) {
    const char c = text[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < text.size() && text[i + 1] == '"') {
          field.push_back('"');
          ++i;
        } else {
          quoted = false;
        }
      } else {
        field.push_back(c);
      }
      continue;
    }
    switch (c) {
      case '"':
        if (field.empty() && !any_field) {
          quoted = true;
          any_field = true;
        } else {
          field.push_back(c);
        }
        break;
      case ',':
        end_field();
        break;
      case '\r':
        break;
      case '\n':
        end_record();
        ++line;
        break;
      default:
        field.push_back(c);
        any_field = true;
        break;
    }
  }
  if (!field.empty() || any_field || !record.empty()) end_record();
  if (quoted) throw IoError(path + ": unterminated quoted field");
  if (table.header.empty()) throw IoError(path + ": empty file (header row required)");
  return table;
}

std::unique_ptr<CsvProblem> load_csv_problem(const std::string& path,
                                             const std::vector<std::string>& target_columns,
                                             const std::vector<ObjectiveKind>& objective_spec,
                                             std::vector<int64_t> hidden, uint64_t seed) {
  if (target_columns.size() != objective_spec.size() || target_columns.empty()) {
    throw ConfigError("load_csv_problem: one objective kind per target column required");
  }
  const CsvTable table = parse_csv(path);
  if (table.rows.empty()) throw IoError(path + ": no data rows");

  auto column_index = [&](const std::string& name) -> size_t {
    for (size_t i = 0; i < table.header.size(); ++i) {
      if (table.header[i] == name) return i;
    }
    throw IoError(path + ": missing column '" + name + "'");
  };

  std::vector<size_t> target_idx;
  for (const auto& name : target_columns) target_idx.push_back(column_index(name));

  const size_t n = table.rows.size();
  const size_t n_cols = table.header.size();
  std::vector<bool> is_target(n_cols, false);
  for (size_t idx : target_idx) is_target[idx] = true;

  // column typing: numeric iff every cell parses as a double
  std::vector<bool> numeric(n_cols, true);
  for (size_t j = 0; j < n_cols; ++j) {
    double tmp;
    for (size_t i = 0; i < n; ++i) {
      if (!parse_double(table.rows[i][j], tmp)) {
        numeric[j] = false;
        break;
      }
    }
  }

  auto problem = std::make_unique<CsvProblem>();
  Dataset& data = problem->data_;

  std::vector<size_t> numeric_features;
  std::vector<size_t> categorical_features;
  for (size_t j = 0; j < n_cols; ++j) {
    if (is_target[j]) continue;
    (numeric[j] ? numeric_features : categorical_features).push_back(j);
  }

  data.features = Tensor::zeros({static_cast<int64_t>(n),
                                 static_cast<int64_t>(numeric_features.size())});
  for (size_t i = 0; i < n; ++i) {
    for (size_t k = 0; k < numeric_features.size(); ++k) {
      double v;
      if (!parse_double(table.rows[i][numeric_features[k]], v)) {
        csv_fail(path, "non-parsable numeric cell '" + table.rows[i][numeric_features[k]] + "'",
                 {i + 2, numeric_features[k] + 1});
      }
      data.features.at(static_cast<int64_t>(i), static_cast<int64_t>(k)) = v;
    }
  }

  for (size_t j : categorical_features) {
    std::map<std::string, int64_t> levels;  // sorted for determinism
    for (size_t i = 0; i < n; ++i) levels.emplace(table.rows[i][j], 0);
    int64_t next = 0;
    for (auto& [key, value] : levels) value = next++;
    std::vector<int64_t> column(n);
    for (size_t i = 0; i < n; ++i) column[i] = levels[table.rows[i][j]];
    data.cat_columns.push_back(std::move(column));
    data.cat_cardinalities.push_back(next);
  }

  // targets + objectives
  std::vector<int64_t> head_dims;
  for (size_t t = 0; t < target_idx.size(); ++t) {
    const size_t j = target_idx[t];
    if (objective_spec[t] == ObjectiveKind::mse) {
      Tensor y = Tensor::zeros({static_cast<int64_t>(n), 1});
      for (size_t i = 0; i < n; ++i) {
        double v;
        if (!parse_double(table.rows[i][j], v)) {
          csv_fail(path, "non-parsable numeric cell '" + table.rows[i][j] + "'",
                   {i + 2, j + 1});
        }
        y.data[i] = v;
      }
      data.targets.push_back(std::move(y));
      head_dims.push_back(1);
    } else {
      // binary target via two-class one-hot; levels sorted for determinism
      std::map<std::string, int64_t> levels;
      for (size_t i = 0; i < n; ++i) levels.emplace(table.rows[i][j], 0);
      if (levels.size() != 2) {
        throw IoError(path + ": binary objective column '" + table.header[j] + "' has " +
                      std::to_string(levels.size()) + " distinct values, expected 2");
      }
      int64_t next = 0;
      for (auto& [key, value] : levels) value = next++;
      Tensor y = Tensor::zeros({static_cast<int64_t>(n), 2});
      for (size_t i = 0; i < n; ++i) {
        y.at(static_cast<int64_t>(i), levels[table.rows[i][j]]) = 1.0;
      }
      data.targets.push_back(std::move(y));
      head_dims.push_back(2);
    }
  }
  assign_splits(data, seed);

  // embedding tables first, then the MLP
  ParamLayout layout;
  int64_t embedded_dim = data.features.cols();
  for (size_t c = 0; c < data.cat_cardinalities.size(); ++c) {
    const int64_t cardinality = data.cat_cardinalities[c];
    const int64_t dim = std::min<int64_t>(8, (cardinality + 1) / 2);
    layout.add("embed" + std::to_string(c), {cardinality, dim});
    embedded_dim += dim;
  }
  problem->embed_entries_ = data.cat_cardinalities.size();

  problem->spec_.input_dim = embedded_dim;
  problem->spec_.hidden = std::move(hidden);
  problem->spec_.head_dims = std::move(head_dims);
  const ParamLayout net = target_layout(problem->spec_);
  for (const auto& e : net.entries()) layout.add(e.name, e.shape, e.init, e.init_scale);
  problem->layout_ = std::move(layout);
  problem->objectives_ = objective_spec;
  return problem;
}

Batch CsvProblem::sample_batch(size_t batch_size, Rng& rng) const {
  return sample_from(data_, batch_size, rng);
}

Batch CsvProblem::full_batch(Split split) const {
  return gather_batch(data_, data_.split_indices(split));
}

std::vector<NodeId> CsvProblem::losses(Tape& tape, std::span<const NodeId> phi,
                                       const Batch& batch) const {
  std::vector<NodeId> input_parts;
  input_parts.push_back(tape.leaf(batch.x));
  for (size_t c = 0; c < embed_entries_; ++c) {
    input_parts.push_back(tape.embed(phi[c], batch.cat[c]));
  }
  const NodeId x = input_parts.size() == 1 ? input_parts[0] : tape.concat_cols(input_parts);
  const std::span<const NodeId> net_phi = phi.subspan(embed_entries_);
  const std::vector<NodeId> heads = target_forward(spec_, tape, net_phi, x);
  std::vector<NodeId> out;
  out.reserve(heads.size());
  for (size_t t = 0; t < heads.size(); ++t) {
    if (objectives_[t] == ObjectiveKind::mse) {
      out.push_back(tape.mse(heads[t], tape.leaf(batch.y[t])));
    } else {
      out.push_back(tape.softmax_cross_entropy(heads[t], tape.leaf(batch.y[t])));
    }
  }
  return out;
}

}  // namespace phn
