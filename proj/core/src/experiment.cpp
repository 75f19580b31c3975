#include "phn/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <limits>
#include <sstream>
#include <thread>

#include <nlohmann/json.hpp>

#include "phn/checkpoint.hpp"
#include "phn/errors.hpp"
#include "phn/sha1.hpp"

namespace phn {

namespace fs = std::filesystem;
using nlohmann::json;

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError(path + ": cannot open for writing");
  out.write(content.data(), static_cast<std::streamsize>(content.size()));
  if (!out) throw IoError(path + ": write failed");
}

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError(path + ": cannot open file");
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

BuiltExperiment build_experiment(const ExperimentConfig& config) {
  BuiltExperiment built;
  const auto& p = config.problem;
  if (p.name == "toy") {
    built.problem = std::make_unique<ToyProblem>(p.dim);
  } else if (p.name == "synth-regression") {
    built.problem = std::make_unique<SynthRegressionProblem>(
        p.n, p.input_dim, p.tasks, p.noise, config.train.seed, config.model.target_hidden);
  } else if (p.name == "csv") {
    built.problem = load_csv_problem(p.csv_path, p.csv_targets, p.csv_objectives,
                                     config.model.target_hidden, config.train.seed);
  } else {
    throw ConfigError("unknown problem.name '" + p.name + "'", "name");
  }
  const size_t m = built.problem->num_objectives();
  built.hyper_spec.preference_dim = static_cast<int64_t>(m);
  built.hyper_spec.trunk_hidden = config.model.trunk_hidden;
  built.train = config.train;
  built.eval_rays = evenly_spaced_rays(config.eval.rays, m);
  built.train.eval_rays = built.eval_rays;
  built.ref_point = config.eval.ref_point;
  return built;
}

std::vector<PreferenceVector> resolve_rays(const RaysSpec& spec, size_t m) {
  if (spec.file.has_value()) {
    std::vector<PreferenceVector> rays;
    std::istringstream in(read_text_file(*spec.file));
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
      ++line_no;
      if (line.empty() || line[0] == '#') continue;
      std::vector<double> values;
      std::istringstream cells(line);
      std::string cell;
      while (std::getline(cells, cell, ',')) {
        try {
          values.push_back(std::stod(cell));
        } catch (const std::exception&) {
          throw ConfigError(*spec.file + ":" + std::to_string(line_no) +
                                ": non-numeric ray entry '" + cell + "'",
                            "rays", line_no);
        }
      }
      try {
        rays.emplace_back(std::move(values));
      } catch (const std::exception& e) {
        throw ConfigError(*spec.file + ":" + std::to_string(line_no) + ": " + e.what(),
                          "rays", line_no);
      }
      if (rays.back().size() != m) {
        throw ConfigError(*spec.file + ":" + std::to_string(line_no) + ": ray has " +
                              std::to_string(rays.back().size()) + " entries, expected " +
                              std::to_string(m),
                          "rays", line_no);
      }
    }
    if (rays.empty()) throw ConfigError(*spec.file + ": no rays found", "rays");
    return rays;
  }
  const size_t count = spec.count.value_or(25);
  return evenly_spaced_rays(count, m);
}

std::string metric_log_header(size_t m) {
  std::string header = "step,wall_clock_s,ray_index";
  for (size_t i = 0; i < m; ++i) header += ",r_" + std::to_string(i);
  for (size_t i = 0; i < m; ++i) header += ",loss_" + std::to_string(i);
  header += ",uniformity,hv\n";
  return header;
}

void append_metric_rows(std::string& csv, const FrontReport& report, bool measured_time) {
  for (size_t ray = 0; ray < report.rows.size(); ++ray) {
    const FrontRow& row = report.rows[ray];
    csv += std::to_string(report.step);
    csv += ',';
    csv += format_double(measured_time ? report.wall_clock_s : 0.0);
    csv += ',';
    csv += std::to_string(ray);
    for (size_t i = 0; i < row.r.size(); ++i) {
      csv += ',';
      csv += format_double(row.r[i]);
    }
    for (double loss : row.losses) {
      csv += ',';
      csv += format_double(loss);
    }
    csv += ',';
    csv += format_double(row.uniformity);
    csv += ',';
    csv += format_double(report.hv);
    csv += '\n';
  }
}

namespace {

json manifest_inputs(const ExperimentConfig& config) {
  json inputs = json::object();
  if (!config.raw_text.empty()) {
    inputs["config"] = {{"path", fs::path(config.source_path).filename().string()},
                        {"hash", git_blob_hash(config.raw_text)}};
  }
  if (config.problem.name == "csv" && !config.problem.csv_path.empty()) {
    inputs["data"] = {{"path", fs::path(config.problem.csv_path).filename().string()},
                      {"hash", git_blob_hash(read_text_file(config.problem.csv_path))}};
  }
  return inputs;
}

double median(std::vector<double> values) {
  if (values.empty()) return 0.0;
  std::sort(values.begin(), values.end());
  const size_t n = values.size();
  return n % 2 == 1 ? values[n / 2] : 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

json front_report_json(const FrontReport& report) {
  json rows = json::array();
  for (const FrontRow& row : report.rows) {
    rows.push_back({{"r", row.r.vec()}, {"losses", row.losses}, {"uniformity", row.uniformity}});
  }
  return rows;
}

std::string front_csv(const FrontReport& report) {
  const size_t m = report.rows.empty() ? 0 : report.rows[0].r.size();
  std::string csv = "ray_index";
  for (size_t i = 0; i < m; ++i) csv += ",r_" + std::to_string(i);
  for (size_t i = 0; i < m; ++i) csv += ",loss_" + std::to_string(i);
  csv += ",uniformity\n";
  for (size_t ray = 0; ray < report.rows.size(); ++ray) {
    const FrontRow& row = report.rows[ray];
    csv += std::to_string(ray);
    for (size_t i = 0; i < m; ++i) {
      csv += ',';
      csv += format_double(row.r[i]);
    }
    for (double loss : row.losses) {
      csv += ',';
      csv += format_double(loss);
    }
    csv += ',';
    csv += format_double(row.uniformity);
    csv += '\n';
  }
  return csv;
}

// run several independent cells on a small thread pool, in index order
void run_parallel(size_t cells, unsigned jobs, const std::function<void(size_t)>& work) {
  if (jobs <= 1 || cells <= 1) {
    for (size_t i = 0; i < cells; ++i) work(i);
    return;
  }
  std::atomic<size_t> next{0};
  const unsigned workers = std::min<unsigned>(jobs, static_cast<unsigned>(cells));
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (unsigned w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (;;) {
        const size_t i = next.fetch_add(1);
        if (i >= cells) return;
        work(i);
      }
    });
  }
  for (std::thread& t : pool) t.join();
}

}  // namespace

int cmd_train(const ExperimentConfig& config, const std::string& out_dir) {
  BuiltExperiment built = build_experiment(config);
  fs::create_directories(out_dir);

  const bool is_phn =
      built.train.variant == Variant::phn_ls || built.train.variant == Variant::phn_epo;
  TrainResult result;
  if (is_phn) {
    result = phn_train(*built.problem, built.hyper_spec, built.train);
  } else {
    std::optional<PreferenceVector> ray;
    if (built.train.variant == Variant::baseline_ls) {
      // train the middle evaluation ray
      ray = built.eval_rays[built.eval_rays.size() / 2];
    }
    result = baseline_train(*built.problem, ray, built.train);
  }

  std::string metrics = metric_log_header(built.problem->num_objectives());
  for (const FrontReport& report : result.history) {
    append_metric_rows(metrics, report, config.output.measured_time);
  }
  write_text_file((fs::path(out_dir) / "metrics.csv").string(), metrics);

  CheckpointHeader header;
  header.kind = is_phn ? "phn" : "baseline";
  header.seed = built.train.seed;
  header.steps = result.steps_done;
  header.spec_json = config.echo().dump();
  const std::string ckpt_path = (fs::path(out_dir) / "checkpoint.phn").string();
  save_checkpoint(ckpt_path, header, result.params);

  json manifest;
  manifest["format_version"] = 1;
  manifest["config"] = config.echo();
  manifest["seed"] = built.train.seed;
  manifest["inputs"] = manifest_inputs(config);
  manifest["outputs"] = {"checkpoint.phn", "metrics.csv"};
  manifest["status"] = result.status == TrainStatus::ok ? "ok" : "diverged";
  manifest["steps_done"] = result.steps_done;
  write_text_file((fs::path(out_dir) / "manifest.json").string(), manifest.dump(2) + "\n");

  if (result.status != TrainStatus::ok) {
    std::cerr << "train: " << result.message << " (checkpoint of last state written)\n";
    return kExitRuntime;
  }
  std::cerr << "train: " << variant_name(built.train.variant) << " finished "
            << result.steps_done << " steps in " << format_double(result.train_seconds)
            << "s\n";
  return kExitOk;
}

int cmd_eval_front(const std::string& checkpoint_path, const RaysSpec& rays_spec,
                   const std::optional<ReferencePoint>& ref_override,
                   const std::string& out_dir, Split split) {
  const Checkpoint ckpt = load_checkpoint(checkpoint_path);
  const ExperimentConfig config = experiment_from_json(json::parse(ckpt.header.spec_json));
  BuiltExperiment built = build_experiment(config);
  const size_t m = built.problem->num_objectives();
  const std::vector<PreferenceVector> rays = resolve_rays(rays_spec, m);
  const ReferencePoint ref = ref_override.value_or(built.ref_point);
  if (ref.size() != m) {
    throw ConfigError("ref point needs " + std::to_string(m) + " entries", "ref-point");
  }

  FrontReport report;
  if (ckpt.header.kind == "phn") {
    if (!(ckpt.params.layout == hypernet_layout(built.hyper_spec,
                                                built.problem->param_layout()))) {
      throw IoError(checkpoint_path + ": checkpoint layout does not match its spec echo");
    }
    report = evaluate_front(ckpt.params, built.hyper_spec, *built.problem, rays, ref, split);
  } else {
    if (!(ckpt.params.layout == built.problem->param_layout())) {
      throw IoError(checkpoint_path + ": checkpoint layout does not match its spec echo");
    }
    const LossVector losses = evaluate_params(*built.problem, ckpt.params, split);
    for (const PreferenceVector& r : rays) {
      report.rows.push_back({r, losses, uniformity(r, losses)});
    }
    report.hv = hypervolume(std::vector<LossVector>{losses}, ref);
  }

  fs::create_directories(out_dir);
  write_text_file((fs::path(out_dir) / "front.csv").string(), front_csv(report));

  std::vector<double> uniformities;
  for (const FrontRow& row : report.rows) uniformities.push_back(row.uniformity);
  json summary;
  summary["format_version"] = 1;
  summary["hv"] = report.hv;
  summary["median_uniformity"] = median(uniformities);
  summary["n_rays"] = report.rows.size();
  summary["ref_point"] = ref;
  summary["rows"] = front_report_json(report);
  write_text_file((fs::path(out_dir) / "summary.json").string(), summary.dump(2) + "\n");
  return kExitOk;
}

int cmd_sweep(const ExperimentConfig& config, const std::string& out_dir, unsigned jobs) {
  const std::vector<double> alphas =
      config.sweep.alpha.empty() ? std::vector<double>{config.train.alpha} : config.sweep.alpha;
  const std::vector<int64_t> hiddens = config.sweep.hidden.empty()
                                           ? std::vector<int64_t>{config.model.trunk_hidden[0]}
                                           : config.sweep.hidden;
  const std::vector<double> lrs =
      config.sweep.lr.empty() ? std::vector<double>{config.train.lr} : config.sweep.lr;

  struct Cell {
    double alpha = 0.0;
    int64_t hidden = 0;
    double lr = 0.0;
    std::string status = "ok";
    double val_hv = std::numeric_limits<double>::quiet_NaN();
    double median_uniformity = std::numeric_limits<double>::quiet_NaN();
    LossVector val_losses;  // baseline selection protocol
  };
  std::vector<Cell> cells;
  for (double alpha : alphas) {
    for (int64_t hidden : hiddens) {
      for (double lr : lrs) {
        Cell cell;
        cell.alpha = alpha;
        cell.hidden = hidden;
        cell.lr = lr;
        cells.push_back(std::move(cell));
      }
    }
  }

  const bool is_phn =
      config.train.variant == Variant::phn_ls || config.train.variant == Variant::phn_epo;

  run_parallel(cells.size(), jobs, [&](size_t i) {
    Cell& cell = cells[i];
    try {
      ExperimentConfig cell_config = config;
      cell_config.train.alpha = cell.alpha;
      cell_config.train.lr = cell.lr;
      cell_config.model.trunk_hidden = {cell.hidden, cell.hidden};
      cell_config.train.eval_interval = 0;
      BuiltExperiment built = build_experiment(cell_config);
      if (is_phn) {
        const TrainResult result = phn_train(*built.problem, built.hyper_spec, built.train);
        if (result.status != TrainStatus::ok) {
          cell.status = "diverged";
          return;
        }
        const FrontReport report =
            evaluate_front(result.params, built.hyper_spec, *built.problem, built.eval_rays,
                           built.ref_point, Split::val);
        cell.val_hv = report.hv;
        std::vector<double> uniformities;
        for (const FrontRow& row : report.rows) uniformities.push_back(row.uniformity);
        cell.median_uniformity = median(uniformities);
      } else {
        std::optional<PreferenceVector> ray;
        if (built.train.variant == Variant::baseline_ls) {
          ray = built.eval_rays[built.eval_rays.size() / 2];
        }
        const TrainResult result = baseline_train(*built.problem, ray, built.train);
        if (result.status != TrainStatus::ok) {
          cell.status = "diverged";
          return;
        }
        cell.val_losses = evaluate_params(*built.problem, result.params, Split::val);
        const PreferenceVector report_ray = ray.value_or(PreferenceVector(
            std::vector<double>(built.problem->num_objectives(),
                                1.0 / static_cast<double>(built.problem->num_objectives()))));
        cell.val_hv = hypervolume(std::vector<LossVector>{cell.val_losses}, built.ref_point);
        cell.median_uniformity = uniformity(report_ray, cell.val_losses);
      }
    } catch (const std::exception& e) {
      cell.status = std::string("error: ") + e.what();
    }
  });

  // rank by validation hypervolume; failed cells sink to the bottom
  std::vector<size_t> order(cells.size());
  for (size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(), [&](size_t a, size_t b) {
    const bool ok_a = cells[a].status == "ok", ok_b = cells[b].status == "ok";
    if (ok_a != ok_b) return ok_a;
    if (cells[a].val_hv != cells[b].val_hv) return cells[a].val_hv > cells[b].val_hv;
    return a < b;
  });

  // selection: PHN takes the top validation HV; baselines filter dominated
  // configurations and take the highest uniformity among survivors
  std::vector<bool> selected(cells.size(), false);
  if (is_phn) {
    if (!cells.empty() && cells[order[0]].status == "ok") selected[order[0]] = true;
  } else {
    std::vector<size_t> ok_cells;
    std::vector<LossVector> losses;
    for (size_t i = 0; i < cells.size(); ++i) {
      if (cells[i].status == "ok") {
        ok_cells.push_back(i);
        losses.push_back(cells[i].val_losses);
      }
    }
    const std::vector<size_t> survivors = non_dominated_filter(losses);
    size_t best = cells.size();
    for (size_t s : survivors) {
      const size_t i = ok_cells[s];
      if (best == cells.size() ||
          cells[i].median_uniformity > cells[best].median_uniformity) {
        best = i;
      }
    }
    if (best < cells.size()) selected[best] = true;
  }

  std::string csv = "rank,alpha,hidden,lr,status,val_hv,median_uniformity,selected\n";
  for (size_t rank = 0; rank < order.size(); ++rank) {
    const Cell& cell = cells[order[rank]];
    csv += std::to_string(rank + 1);
    csv += ',';
    csv += format_double(cell.alpha);
    csv += ',';
    csv += std::to_string(cell.hidden);
    csv += ',';
    csv += format_double(cell.lr);
    csv += ',';
    csv += cell.status == "ok" ? "ok" : "failed";
    csv += ',';
    csv += std::isnan(cell.val_hv) ? "" : format_double(cell.val_hv);
    csv += ',';
    csv += std::isnan(cell.median_uniformity) ? "" : format_double(cell.median_uniformity);
    csv += ',';
    csv += selected[order[rank]] ? "1" : "0";
    csv += '\n';
  }
  fs::create_directories(out_dir);
  write_text_file((fs::path(out_dir) / "leaderboard.csv").string(), csv);
  return kExitOk;
}

int cmd_compare(const ExperimentConfig& config, const std::vector<size_t>& n_rays_override,
                const std::string& out_dir, unsigned jobs) {
  const std::vector<size_t> n_rays =
      n_rays_override.empty() ? config.compare.n_rays : n_rays_override;
  if (n_rays.empty()) throw ConfigError("compare.n_rays must not be empty", "n_rays");
  const size_t max_rays = *std::max_element(n_rays.begin(), n_rays.end());

  struct Row {
    std::string method;
    size_t k;
    double wall_clock_s;
    double hv_mean;
    double hv_var;
  };
  std::vector<Row> rows;

  for (Variant method : config.compare.methods) {
    ExperimentConfig method_config = config;
    method_config.train.variant = method;
    method_config.train.eval_interval = 0;

    if (method == Variant::phn_ls || method == Variant::phn_epo) {
      BuiltExperiment built = build_experiment(method_config);
      const TrainResult result = phn_train(*built.problem, built.hyper_spec, built.train);
      for (size_t k : n_rays) {
        const auto eval_start = std::chrono::steady_clock::now();
        const std::vector<PreferenceVector> rays =
            evenly_spaced_rays(k, built.problem->num_objectives());
        const FrontReport report = evaluate_front(result.params, built.hyper_spec,
                                                  *built.problem, rays, built.ref_point);
        const double eval_s =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - eval_start)
                .count();
        rows.push_back({variant_name(method), k, result.train_seconds + eval_s, report.hv, 0.0});
      }
    } else {
      BuiltExperiment base = build_experiment(method_config);
      const size_t m = base.problem->num_objectives();
      const std::vector<PreferenceVector> rays = evenly_spaced_rays(max_rays, m);
      std::vector<LossVector> losses(max_rays);
      std::vector<double> seconds(max_rays, 0.0);

      run_parallel(max_rays, jobs, [&](size_t i) {
        ExperimentConfig run_config = method_config;
        run_config.train.seed = method_config.train.seed + i;
        BuiltExperiment built = build_experiment(run_config);
        std::optional<PreferenceVector> ray;
        if (method == Variant::baseline_ls) ray = rays[i];
        const TrainResult result = baseline_train(*built.problem, ray, built.train);
        losses[i] = evaluate_params(*built.problem, result.params, Split::test);
        seconds[i] = result.train_seconds;
      });

      Rng subset_rng(config.train.seed ^ 0x5eedbeefULL);
      for (size_t k : n_rays) {
        const size_t draws = k >= max_rays ? 1 : config.compare.subsets;
        double hv_sum = 0.0, hv_sq_sum = 0.0, time_sum = 0.0;
        std::vector<size_t> indices(max_rays);
        for (size_t d = 0; d < draws; ++d) {
          for (size_t i = 0; i < max_rays; ++i) indices[i] = i;
          // partial Fisher-Yates: first k entries are the subset
          for (size_t i = 0; i < std::min(k, max_rays) && draws > 1; ++i) {
            const size_t j = i + static_cast<size_t>(subset_rng.next_u64() %
                                                     (max_rays - i));
            std::swap(indices[i], indices[j]);
          }
          std::vector<LossVector> subset;
          double subset_time = 0.0;
          for (size_t i = 0; i < std::min(k, max_rays); ++i) {
            subset.push_back(losses[indices[i]]);
            subset_time += seconds[indices[i]];
          }
          const double hv = hypervolume(subset, base.ref_point);
          hv_sum += hv;
          hv_sq_sum += hv * hv;
          time_sum += subset_time;
        }
        const double mean = hv_sum / static_cast<double>(draws);
        const double var =
            std::max(0.0, hv_sq_sum / static_cast<double>(draws) - mean * mean);
        rows.push_back({variant_name(method), k, time_sum / static_cast<double>(draws), mean,
                        var});
      }
    }
  }

  std::string csv = "method,n_rays,wall_clock_s,hv,hv_var\n";
  for (const Row& row : rows) {
    csv += row.method;
    csv += ',';
    csv += std::to_string(row.k);
    csv += ',';
    csv += format_double(row.wall_clock_s);
    csv += ',';
    csv += format_double(row.hv_mean);
    csv += ',';
    csv += format_double(row.hv_var);
    csv += '\n';
  }
  fs::create_directories(out_dir);
  write_text_file((fs::path(out_dir) / "compare.csv").string(), csv);
  return kExitOk;
}

}  // namespace phn
