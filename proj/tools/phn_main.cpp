// phn: preference-conditioned Pareto front learning from the command line.
//
//   phn train      --config exp.cfg [--out-dir DIR] [--seed N]
//   phn eval-front --checkpoint DIR/checkpoint.phn [--rays 25 | --rays FILE]
//                  [--ref-point 2,2] [--split test] [--out-dir DIR]
//   phn sweep      --config exp.cfg [--jobs N] [--out-dir DIR]
//   phn compare    --config exp.cfg [--n-rays 1,5,10,25] [--jobs N] [--out-dir DIR]
//
// Exit codes: 0 success, 1 runtime failure, 2 configuration error.

#include <cstdlib>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "phn/errors.hpp"
#include "phn/experiment.hpp"

namespace {

std::string effective_out_dir(const std::string& flag_value, const std::string& config_value) {
  if (!flag_value.empty()) return flag_value;
  if (!config_value.empty()) return config_value;
  if (const char* env = std::getenv("PHN_OUT_DIR"); env && *env) return env;
  return "phn-out";
}

std::vector<double> parse_double_list(const std::string& text, const std::string& flag) {
  std::vector<double> out;
  std::string current;
  auto flush = [&] {
    if (current.empty()) return;
    size_t pos = 0;
    out.push_back(std::stod(current, &pos));
    if (pos != current.size()) throw phn::ConfigError("bad value in --" + flag, flag);
    current.clear();
  };
  for (char c : text) {
    if (c == ',') {
      flush();
    } else {
      current.push_back(c);
    }
  }
  flush();
  if (out.empty()) throw phn::ConfigError("--" + flag + " is empty", flag);
  return out;
}

phn::Split parse_split(const std::string& name) {
  if (name == "train") return phn::Split::train;
  if (name == "val") return phn::Split::val;
  if (name == "test") return phn::Split::test;
  throw phn::ConfigError("unknown split '" + name + "'", "split");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Pareto front learning with preference-conditioned hypernetworks"};
  app.require_subcommand(1);

  std::string config_path, out_dir, checkpoint_path;
  std::string rays_arg, ref_point_arg, split_arg = "test", n_rays_arg;
  std::optional<uint64_t> seed_override;
  unsigned jobs = 1;

  auto* train = app.add_subcommand("train", "Train a model per the config");
  train->add_option("--config", config_path, "experiment config file")->required();
  train->add_option("--out-dir", out_dir, "output directory");
  train->add_option("--seed", seed_override, "override train.seed");

  auto* eval = app.add_subcommand("eval-front", "Evaluate a checkpoint across rays");
  eval->add_option("--checkpoint", checkpoint_path, "checkpoint file")->required();
  eval->add_option("--rays", rays_arg, "ray count or path to a rays file");
  eval->add_option("--ref-point", ref_point_arg, "comma-separated reference point");
  eval->add_option("--split", split_arg, "train|val|test (default test)");
  eval->add_option("--out-dir", out_dir, "output directory");

  auto* sweep = app.add_subcommand("sweep", "Grid sweep over alpha/hidden/lr");
  sweep->add_option("--config", config_path, "experiment config file")->required();
  sweep->add_option("--out-dir", out_dir, "output directory");
  sweep->add_option("--jobs", jobs, "parallel cells");
  sweep->add_option("--seed", seed_override, "override train.seed");

  auto* compare = app.add_subcommand("compare", "Quality vs runtime across methods");
  compare->add_option("--config", config_path, "experiment config file")->required();
  compare->add_option("--n-rays", n_rays_arg, "comma-separated ray counts");
  compare->add_option("--out-dir", out_dir, "output directory");
  compare->add_option("--jobs", jobs, "parallel baseline runs");
  compare->add_option("--seed", seed_override, "override train.seed");

  CLI11_PARSE(app, argc, argv);

  try {
    if (train->parsed() || sweep->parsed() || compare->parsed()) {
      phn::ExperimentConfig config = phn::load_experiment_config(config_path);
      if (seed_override) config.train.seed = *seed_override;
      const std::string dir = effective_out_dir(out_dir, config.output.dir);
      if (train->parsed()) return phn::cmd_train(config, dir);
      if (sweep->parsed()) return phn::cmd_sweep(config, dir, jobs);
      std::vector<size_t> n_rays;
      if (!n_rays_arg.empty()) {
        for (double v : parse_double_list(n_rays_arg, "n-rays")) {
          n_rays.push_back(static_cast<size_t>(v));
        }
      }
      return phn::cmd_compare(config, n_rays, dir, jobs);
    }

    // eval-front
    phn::RaysSpec rays;
    if (!rays_arg.empty()) {
      char* end = nullptr;
      const long count = std::strtol(rays_arg.c_str(), &end, 10);
      if (end == rays_arg.c_str() + rays_arg.size() && count > 0) {
        rays.count = static_cast<size_t>(count);
      } else {
        rays.file = rays_arg;
      }
    }
    std::optional<phn::ReferencePoint> ref;
    if (!ref_point_arg.empty()) ref = parse_double_list(ref_point_arg, "ref-point");
    return phn::cmd_eval_front(checkpoint_path, rays, ref,
                               effective_out_dir(out_dir, ""), parse_split(split_arg));
  } catch (const phn::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return phn::kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return phn::kExitRuntime;
  }
}
