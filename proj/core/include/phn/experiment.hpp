#pragma once

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "phn/config.hpp"
#include "phn/problems.hpp"
#include "phn/trainer.hpp"

namespace phn {

inline constexpr int kExitOk = 0;
inline constexpr int kExitRuntime = 1;
inline constexpr int kExitConfig = 2;

/// Concrete objects behind an ExperimentConfig.
struct BuiltExperiment {
  std::unique_ptr<Problem> problem;
  HyperNetSpec hyper_spec;
  TrainConfig train;
  std::vector<PreferenceVector> eval_rays;
  ReferencePoint ref_point;
};

BuiltExperiment build_experiment(const ExperimentConfig& config);

/// Either "evaluate k evenly spaced rays" or explicit rays from a file
/// (one comma-separated ray per line).
struct RaysSpec {
  std::optional<size_t> count;
  std::optional<std::string> file;
};

std::vector<PreferenceVector> resolve_rays(const RaysSpec& spec, size_t m);

/// Trains per config; writes checkpoint.phn, metrics.csv and manifest.json
/// into out_dir. Returns a process exit code.
int cmd_train(const ExperimentConfig& config, const std::string& out_dir);

/// Evaluates a checkpoint over rays; writes front.csv and summary.json.
int cmd_eval_front(const std::string& checkpoint_path, const RaysSpec& rays,
                   const std::optional<ReferencePoint>& ref_override,
                   const std::string& out_dir, Split split = Split::test);

/// Grid over [sweep] alpha / hidden / lr; one training run per cell with the
/// shared base seed; writes leaderboard.csv ranked by validation
/// hypervolume. Cell failures are recorded and the sweep continues.
int cmd_sweep(const ExperimentConfig& config, const std::string& out_dir, unsigned jobs = 1);

/// Quality-runtime tradeoff: trains each PHN method once and the per-ray
/// baselines once per ray, then reports hypervolume and wall clock for each
/// evaluated ray-subset size. Writes compare.csv.
int cmd_compare(const ExperimentConfig& config, const std::vector<size_t>& n_rays_override,
                const std::string& out_dir, unsigned jobs = 1);

/// Metric log schema shared by train runs:
/// step,wall_clock_s,ray_index,r_0..,loss_0..,uniformity,hv
std::string metric_log_header(size_t m);
void append_metric_rows(std::string& csv, const FrontReport& report, bool measured_time);

/// Deterministic float formatting used by every CSV/JSON writer (shortest
/// round-trip via %.17g).
std::string format_double(double v);

void write_text_file(const std::string& path, const std::string& content);
std::string read_text_file(const std::string& path);

}  // namespace phn
