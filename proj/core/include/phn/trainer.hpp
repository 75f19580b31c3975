#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "phn/metrics.hpp"
#include "phn/moo.hpp"
#include "phn/networks.hpp"
#include "phn/problems.hpp"

namespace phn {

enum class Variant : uint8_t { phn_ls, phn_epo, baseline_ls, baseline_mgda };

const char* variant_name(Variant v);
std::optional<Variant> variant_from_name(const std::string& name);

struct TrainConfig {
  Variant variant = Variant::phn_ls;
  double alpha = 0.2;          // Dirichlet concentration for preference sampling
  double lr = 1e-3;
  size_t batch_size = 32;
  size_t steps = 1000;
  uint64_t seed = 0;
  std::vector<PreferenceVector> eval_rays;
  double eps_bal = 1e-3;       // balance tolerance for the EPO branch
  size_t eval_interval = 0;    // 0: only initial and final reports
  ReferencePoint ref_point;
  double divergence_threshold = 1e6;

  void validate() const;  // throws ConfigError
};

/// Bias-corrected Adam with beta1 = 0.9, beta2 = 0.999, eps = 1e-8.
struct AdamState {
  std::vector<double> m;
  std::vector<double> v;
  size_t t = 0;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;

  explicit AdamState(size_t n) : m(n, 0.0), v(n, 0.0) {}
};

/// One in-place update. Throws ValueError on non-finite gradients.
void adam_step(AdamState& state, std::span<double> params, std::span<const double> grads,
               double lr);

struct FrontRow {
  PreferenceVector r;
  LossVector losses;
  double uniformity = 0.0;
};

struct FrontReport {
  size_t step = 0;
  double wall_clock_s = 0.0;
  std::vector<FrontRow> rows;
  double hv = 0.0;
};

enum class TrainStatus : uint8_t { ok, diverged };

struct TrainResult {
  ParamVector params;  // hypernetwork theta for PHN variants, target phi for baselines
  std::vector<FrontReport> history;
  TrainStatus status = TrainStatus::ok;
  size_t steps_done = 0;
  std::string message;
  double train_seconds = 0.0;
};

/// One preference-conditioned training run: sample r ~ Dir(alpha), generate
/// phi = h(theta, r), weight the per-objective losses by r (LS) or by the
/// balanced-descent combination (EPO), and step theta with Adam. Emits a
/// validation FrontReport over eval_rays every eval_interval steps.
TrainResult phn_train(const Problem& problem, const HyperNetSpec& hyper_spec,
                      const TrainConfig& config);

/// Trains the target network directly, one model per preference. baseline_ls
/// requires a ray; baseline_mgda ignores it and follows the min-norm descent
/// direction.
TrainResult baseline_train(const Problem& problem, const std::optional<PreferenceVector>& ray,
                           const TrainConfig& config);

/// Evaluates the hypernetwork front on a split: one (losses, uniformity) row
/// per ray plus the hypervolume against ref. Deterministic; repeated calls
/// are bit-identical.
FrontReport evaluate_front(const ParamVector& theta, const HyperNetSpec& hyper_spec,
                           const Problem& problem, std::span<const PreferenceVector> rays,
                           const ReferencePoint& ref, Split split = Split::test);

/// Loss vector of a concrete target parameter vector on a split.
LossVector evaluate_params(const Problem& problem, const ParamVector& phi, Split split);

/// k rays spread over the m-simplex: (t, 1-t) with t = i/(k+1) for m == 2, a
/// simplex-lattice design subsampled to k points for m > 2.
std::vector<PreferenceVector> evenly_spaced_rays(size_t k, size_t m);

}  // namespace phn
