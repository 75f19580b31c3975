#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "phn/problems.hpp"
#include "phn/trainer.hpp"

#include <nlohmann/json_fwd.hpp>

namespace phn {

/// Flat-sectioned key-value config text:
///
///   [section]
///   key = value          # number, bool, bare or quoted string
///   list = [a, b, c]     # homogeneous scalar array
///
/// Unknown sections or keys are rejected with their line number.
class ConfigFile {
 public:
  static ConfigFile parse_file(const std::string& path);
  static ConfigFile parse_text(const std::string& text, const std::string& source_name);

  bool has(const std::string& section, const std::string& key) const;

  std::string get_string(const std::string& section, const std::string& key,
                         std::string fallback) const;
  double get_double(const std::string& section, const std::string& key, double fallback) const;
  int64_t get_int(const std::string& section, const std::string& key, int64_t fallback) const;
  bool get_bool(const std::string& section, const std::string& key, bool fallback) const;
  std::vector<double> get_double_array(const std::string& section, const std::string& key,
                                       std::vector<double> fallback) const;
  std::vector<int64_t> get_int_array(const std::string& section, const std::string& key,
                                     std::vector<int64_t> fallback) const;
  std::vector<std::string> get_string_array(const std::string& section, const std::string& key,
                                            std::vector<std::string> fallback) const;

  /// Throws ConfigError on the first key never read by any getter.
  void reject_unknown_keys() const;

  const std::string& source_name() const { return source_; }
  const std::string& raw_text() const { return raw_; }

 private:
  struct Item {
    std::string raw;                       // scalar value text
    std::vector<std::string> array_items;  // array value items
    bool is_array = false;
    int line = 0;
    mutable bool consumed = false;
  };

  const Item* find(const std::string& section, const std::string& key) const;
  const Item& require(const std::string& section, const std::string& key) const;

  std::string source_;
  std::string raw_;
  std::map<std::string, std::map<std::string, Item>> sections_;
};

struct ProblemConfig {
  std::string name = "toy";  // toy | synth-regression | csv
  int64_t dim = 100;         // toy
  size_t n = 512;            // synth-regression
  int64_t input_dim = 8;
  size_t tasks = 2;
  double noise = 0.05;
  std::string csv_path;  // csv
  std::vector<std::string> csv_targets;
  std::vector<ObjectiveKind> csv_objectives;
};

struct ModelConfig {
  std::vector<int64_t> trunk_hidden;  // empty: problem-dependent default
  std::vector<int64_t> target_hidden;
};

struct EvalConfig {
  size_t rays = 25;
  ReferencePoint ref_point;  // empty: problem-dependent default
  size_t interval = 0;
};

struct OutputConfig {
  std::string dir;
  /// When false (the default) the metric log's wall_clock_s column is written
  /// as 0 so reruns are byte-identical; set true to record measured time.
  bool measured_time = false;
};

struct SweepConfig {
  std::vector<double> alpha;
  std::vector<int64_t> hidden;
  std::vector<double> lr;
};

struct CompareConfig {
  std::vector<Variant> methods = {Variant::phn_epo, Variant::baseline_ls};
  std::vector<size_t> n_rays = {1, 5, 10, 25};
  size_t subsets = 30;
};

struct ExperimentConfig {
  ProblemConfig problem;
  ModelConfig model;
  TrainConfig train;
  EvalConfig eval;
  OutputConfig output;
  SweepConfig sweep;
  CompareConfig compare;

  std::string source_path;  // file the config came from, if any
  std::string raw_text;     // exact bytes, for content hashing

  /// Deterministic JSON echo of every semantic field (no paths/raw text).
  nlohmann::json echo() const;
};

ExperimentConfig experiment_from_config(const ConfigFile& file);
ExperimentConfig load_experiment_config(const std::string& path);

/// Rebuilds a config from the JSON echo stored in checkpoints/manifests.
ExperimentConfig experiment_from_json(const nlohmann::json& echo);

/// Problem-dependent defaults (trunk widths, reference point) filled in and
/// basic invariants checked. Called by experiment_from_config; exposed for
/// configs built in code.
void finalize_experiment_config(ExperimentConfig& config);

}  // namespace phn
