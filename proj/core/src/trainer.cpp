#include "phn/trainer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>

#include "phn/errors.hpp"

namespace phn {

const char* variant_name(Variant v) {
  switch (v) {
    case Variant::phn_ls: return "phn-ls";
    case Variant::phn_epo: return "phn-epo";
    case Variant::baseline_ls: return "baseline-ls";
    case Variant::baseline_mgda: return "baseline-mgda";
  }
  return "?";
}

std::optional<Variant> variant_from_name(const std::string& name) {
  if (name == "phn-ls") return Variant::phn_ls;
  if (name == "phn-epo") return Variant::phn_epo;
  if (name == "baseline-ls") return Variant::baseline_ls;
  if (name == "baseline-mgda") return Variant::baseline_mgda;
  return std::nullopt;
}

void TrainConfig::validate() const {
  if (!(lr > 0.0)) throw ConfigError("train.lr must be > 0", "lr");
  if (batch_size < 1) throw ConfigError("train.batch_size must be >= 1", "batch_size");
  if (!(alpha > 0.0)) throw ConfigError("train.alpha must be > 0", "alpha");
  if (!(eps_bal >= 0.0)) throw ConfigError("train.eps_bal must be >= 0", "eps_bal");
  // eval rays are validated at construction; nothing further to check here
}

void adam_step(AdamState& state, std::span<double> params, std::span<const double> grads,
               double lr) {
  if (params.size() != grads.size() || params.size() != state.m.size()) {
    throw ShapeError("adam_step: size mismatch (params " + std::to_string(params.size()) +
                     ", grads " + std::to_string(grads.size()) + ", state " +
                     std::to_string(state.m.size()) + ")");
  }
  for (double g : grads) {
    if (!std::isfinite(g)) throw ValueError("adam_step: non-finite gradient");
  }
  state.t += 1;
  const double bc1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.t));
  const double bc2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.t));
  for (size_t i = 0; i < params.size(); ++i) {
    state.m[i] = state.beta1 * state.m[i] + (1.0 - state.beta1) * grads[i];
    state.v[i] = state.beta2 * state.v[i] + (1.0 - state.beta2) * grads[i] * grads[i];
    const double m_hat = state.m[i] / bc1;
    const double v_hat = state.v[i] / bc2;
    params[i] -= lr * m_hat / (std::sqrt(v_hat) + state.eps);
  }
}

std::vector<PreferenceVector> evenly_spaced_rays(size_t k, size_t m) {
  if (k == 0 || m < 2) throw ValueError("evenly_spaced_rays: need k >= 1 and m >= 2");
  std::vector<PreferenceVector> rays;
  rays.reserve(k);
  if (m == 2) {
    for (size_t i = 1; i <= k; ++i) {
      const double t = static_cast<double>(i) / static_cast<double>(k + 1);
      rays.emplace_back(std::vector<double>{t, 1.0 - t});
    }
    return rays;
  }
  // simplex lattice {c / h : c composition of h into m parts}, densified until
  // it holds k points, then subsampled with an even stride
  size_t h = 1;
  auto lattice_size = [m](size_t steps) {
    // C(steps + m - 1, m - 1)
    double size = 1.0;
    for (size_t i = 1; i < m; ++i) {
      size *= static_cast<double>(steps + i) / static_cast<double>(i);
    }
    return static_cast<size_t>(std::llround(size));
  };
  while (lattice_size(h) < k) ++h;

  std::vector<std::vector<double>> points;
  std::vector<size_t> composition(m, 0);
  // lexicographic enumeration of compositions of h into m parts
  auto emit = [&](auto&& self, size_t pos, size_t remaining) -> void {
    if (pos == m - 1) {
      composition[pos] = remaining;
      std::vector<double> r(m);
      for (size_t j = 0; j < m; ++j) {
        r[j] = static_cast<double>(composition[j]) / static_cast<double>(h);
      }
      points.push_back(std::move(r));
      return;
    }
    for (size_t c = 0; c <= remaining; ++c) {
      composition[pos] = c;
      self(self, pos + 1, remaining - c);
    }
  };
  emit(emit, 0, h);

  const size_t n = points.size();
  for (size_t i = 0; i < k; ++i) {
    const size_t idx = k == 1 ? 0 : (i * (n - 1)) / (k - 1);
    rays.emplace_back(points[idx]);
  }
  return rays;
}

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

bool losses_ok(const LossVector& losses, double threshold) {
  for (double v : losses) {
    if (!std::isfinite(v) || v > threshold) return false;
  }
  return true;
}

// Weighted sum of loss nodes on the tape; scalar root for one backward pass.
NodeId scalarized_root(Tape& tape, std::span<const NodeId> loss_nodes,
                       std::span<const double> weights) {
  NodeId root = tape.scale(loss_nodes[0], weights[0]);
  for (size_t i = 1; i < loss_nodes.size(); ++i) {
    root = tape.add(root, tape.scale(loss_nodes[i], weights[i]));
  }
  return root;
}

GradientSet per_objective_gradients(Tape& tape, std::span<const NodeId> loss_nodes,
                                    std::span<const NodeId> leaves, size_t param_count) {
  GradientSet g(loss_nodes.size(), param_count);
  for (size_t i = 0; i < loss_nodes.size(); ++i) {
    tape.backward(loss_nodes[i]);
    const std::vector<double> flat = flatten_grads(tape, leaves);
    std::copy(flat.begin(), flat.end(), g.row(i).begin());
  }
  return g;
}

}  // namespace

FrontReport evaluate_front(const ParamVector& theta, const HyperNetSpec& hyper_spec,
                           const Problem& problem, std::span<const PreferenceVector> rays,
                           const ReferencePoint& ref, Split split) {
  FrontReport report;
  const Batch batch = problem.full_batch(split);
  const ParamLayout& target = problem.param_layout();
  std::vector<LossVector> points;
  points.reserve(rays.size());
  for (const PreferenceVector& r : rays) {
    Tape tape;
    const std::vector<NodeId> leaves = insert_leaves(tape, theta);
    const std::vector<NodeId> phi = hypernet_forward(hyper_spec, tape, leaves, r, target);
    const std::vector<NodeId> loss_nodes = problem.losses(tape, phi, batch);
    LossVector losses(loss_nodes.size());
    for (size_t i = 0; i < loss_nodes.size(); ++i) losses[i] = tape.value(loss_nodes[i]).data[0];
    report.rows.push_back({r, losses, uniformity(r, losses)});
    points.push_back(std::move(losses));
  }
  report.hv = ref.empty() ? 0.0 : hypervolume(points, ref);
  return report;
}

LossVector evaluate_params(const Problem& problem, const ParamVector& phi, Split split) {
  return problem.loss_values(phi, problem.full_batch(split));
}

TrainResult phn_train(const Problem& problem, const HyperNetSpec& hyper_spec,
                      const TrainConfig& config) {
  config.validate();
  if (config.variant != Variant::phn_ls && config.variant != Variant::phn_epo) {
    throw ConfigError("phn_train: variant must be phn-ls or phn-epo", "variant");
  }
  const size_t m = problem.num_objectives();
  const ParamLayout& target = problem.param_layout();
  const ParamLayout hyper = hypernet_layout(hyper_spec, target);

  TrainResult result;
  result.params = init_params(hyper, config.seed);
  AdamState adam(result.params.data.size());
  Rng rng(config.seed);
  const auto start = Clock::now();

  auto emit_report = [&](size_t step) {
    if (config.eval_rays.empty()) return;
    FrontReport report = evaluate_front(result.params, hyper_spec, problem, config.eval_rays,
                                        config.ref_point, Split::val);
    report.step = step;
    report.wall_clock_s = seconds_since(start);
    result.history.push_back(std::move(report));
  };

  emit_report(0);
  for (size_t step = 0; step < config.steps; ++step) {
    const PreferenceVector r = sample_preference(m, config.alpha, rng);
    const Batch batch = problem.sample_batch(config.batch_size, rng);

    Tape tape;
    const std::vector<NodeId> leaves = insert_leaves(tape, result.params);
    const std::vector<NodeId> phi = hypernet_forward(hyper_spec, tape, leaves, r, target);
    const std::vector<NodeId> loss_nodes = problem.losses(tape, phi, batch);

    LossVector losses(m);
    for (size_t i = 0; i < m; ++i) losses[i] = tape.value(loss_nodes[i]).data[0];
    if (!losses_ok(losses, config.divergence_threshold)) {
      result.status = TrainStatus::diverged;
      result.steps_done = step;
      result.message = "diverged at step " + std::to_string(step);
      result.train_seconds = seconds_since(start);
      return result;
    }

    std::vector<double> grad;
    if (config.variant == Variant::phn_ls) {
      tape.backward(scalarized_root(tape, loss_nodes, r.values()));
      grad = flatten_grads(tape, leaves);
    } else {
      const GradientSet g =
          per_objective_gradients(tape, loss_nodes, leaves, result.params.data.size());
      const std::vector<double> beta = epo_weights(g, losses, r, config.eps_bal);
      grad = combine_gradients(g, beta);
    }
    adam_step(adam, result.params.data, grad, config.lr);

    if (config.eval_interval > 0 && (step + 1) % config.eval_interval == 0 &&
        step + 1 < config.steps) {
      emit_report(step + 1);
    }
  }
  result.steps_done = config.steps;
  result.train_seconds = seconds_since(start);
  if (config.steps > 0) emit_report(config.steps);
  return result;
}

TrainResult baseline_train(const Problem& problem, const std::optional<PreferenceVector>& ray,
                           const TrainConfig& config) {
  config.validate();
  if (config.variant != Variant::baseline_ls && config.variant != Variant::baseline_mgda) {
    throw ConfigError("baseline_train: variant must be baseline-ls or baseline-mgda",
                      "variant");
  }
  if (config.variant == Variant::baseline_ls && !ray.has_value()) {
    throw ConfigError("baseline_train: baseline-ls requires a preference ray", "variant");
  }
  const size_t m = problem.num_objectives();
  if (ray.has_value() && ray->size() != m) {
    throw ShapeError("baseline_train: ray has " + std::to_string(ray->size()) +
                     " entries, problem has " + std::to_string(m));
  }

  TrainResult result;
  result.params = init_params(problem.param_layout(), config.seed);
  AdamState adam(result.params.data.size());
  Rng rng(config.seed);
  const auto start = Clock::now();

  // uniformity for mgda reports is measured against the balanced ray
  const PreferenceVector report_ray =
      ray.value_or(PreferenceVector(std::vector<double>(m, 1.0 / static_cast<double>(m))));

  auto emit_report = [&](size_t step) {
    const LossVector losses = evaluate_params(problem, result.params, Split::val);
    FrontReport report;
    report.step = step;
    report.wall_clock_s = seconds_since(start);
    report.rows.push_back({report_ray, losses, uniformity(report_ray, losses)});
    if (!config.ref_point.empty()) {
      report.hv = hypervolume(std::vector<LossVector>{losses}, config.ref_point);
    }
    result.history.push_back(std::move(report));
  };

  emit_report(0);
  for (size_t step = 0; step < config.steps; ++step) {
    const Batch batch = problem.sample_batch(config.batch_size, rng);
    Tape tape;
    const std::vector<NodeId> leaves = insert_leaves(tape, result.params);
    const std::vector<NodeId> loss_nodes = problem.losses(tape, leaves, batch);

    LossVector losses(m);
    for (size_t i = 0; i < m; ++i) losses[i] = tape.value(loss_nodes[i]).data[0];
    if (!losses_ok(losses, config.divergence_threshold)) {
      result.status = TrainStatus::diverged;
      result.steps_done = step;
      result.message = "diverged at step " + std::to_string(step);
      result.train_seconds = seconds_since(start);
      return result;
    }

    std::vector<double> grad;
    if (config.variant == Variant::baseline_ls) {
      tape.backward(scalarized_root(tape, loss_nodes, ray->values()));
      grad = flatten_grads(tape, leaves);
    } else {
      const GradientSet g =
          per_objective_gradients(tape, loss_nodes, leaves, result.params.data.size());
      const std::vector<double> beta = min_norm_weights(g);
      grad = combine_gradients(g, beta);
    }
    adam_step(adam, result.params.data, grad, config.lr);

    if (config.eval_interval > 0 && (step + 1) % config.eval_interval == 0 &&
        step + 1 < config.steps) {
      emit_report(step + 1);
    }
  }
  result.steps_done = config.steps;
  result.train_seconds = seconds_since(start);
  if (config.steps > 0) emit_report(config.steps);
  return result;
}

}  // namespace phn
