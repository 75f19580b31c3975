#include "phn/config.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "phn/errors.hpp"

namespace phn {

namespace {

std::string trim(const std::string& s) {
  size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return s.substr(b, e - b);
}

std::string strip_comment(const std::string& line) {
  bool quoted = false;
  for (size_t i = 0; i < line.size(); ++i) {
    if (line[i] == '"') quoted = !quoted;
    if (line[i] == '#' && !quoted) return line.substr(0, i);
  }
  return line;
}

std::string unquote(const std::string& s) {
  if (s.size() >= 2 && s.front() == '"' && s.back() == '"') {
    return s.substr(1, s.size() - 2);
  }
  return s;
}

double parse_number(const std::string& raw, const std::string& key, int line) {
  const char* begin = raw.c_str();
  char* end = nullptr;
  const double v = std::strtod(begin, &end);
  if (end != begin + raw.size() || raw.empty()) {
    throw ConfigError("expected a number for '" + key + "', got '" + raw + "'", key, line);
  }
  return v;
}

}  // namespace

ConfigFile ConfigFile::parse_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return parse_text(buffer.str(), path);
}

ConfigFile ConfigFile::parse_text(const std::string& text, const std::string& source_name) {
  ConfigFile file;
  file.source_ = source_name;
  file.raw_ = text;

  std::string section;
  std::istringstream in(text);
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string content = trim(strip_comment(line));
    if (content.empty()) continue;
    if (content.front() == '[') {
      if (content.back() != ']' || content.size() < 3) {
        throw ConfigError(source_name + ":" + std::to_string(line_no) +
                              ": malformed section header '" + content + "'",
                          {}, line_no);
      }
      section = trim(content.substr(1, content.size() - 2));
      file.sections_[section];
      continue;
    }
    const size_t eq = content.find('=');
    if (eq == std::string::npos) {
      throw ConfigError(source_name + ":" + std::to_string(line_no) +
                            ": expected 'key = value', got '" + content + "'",
                        {}, line_no);
    }
    if (section.empty()) {
      throw ConfigError(source_name + ":" + std::to_string(line_no) +
                            ": key outside of any [section]",
                        {}, line_no);
    }
    const std::string key = trim(content.substr(0, eq));
    const std::string value = trim(content.substr(eq + 1));
    if (key.empty() || value.empty()) {
      throw ConfigError(source_name + ":" + std::to_string(line_no) +
                            ": empty key or value in '" + content + "'",
                        key, line_no);
    }
    Item item;
    item.line = line_no;
    if (value.front() == '[') {
      if (value.back() != ']') {
        throw ConfigError(source_name + ":" + std::to_string(line_no) +
                              ": unterminated array for '" + key + "'",
                          key, line_no);
      }
      item.is_array = true;
      std::string body = value.substr(1, value.size() - 2);
      std::string current;
      bool quoted = false;
      for (char c : body) {
        if (c == '"') quoted = !quoted;
        if (c == ',' && !quoted) {
          item.array_items.push_back(unquote(trim(current)));
          current.clear();
        } else {
          current.push_back(c);
        }
      }
      const std::string last = trim(current);
      if (!last.empty()) item.array_items.push_back(unquote(last));
    } else {
      item.raw = unquote(value);
    }
    auto [it, inserted] = file.sections_[section].emplace(key, std::move(item));
    if (!inserted) {
      throw ConfigError(source_name + ":" + std::to_string(line_no) + ": duplicate key '" +
                            section + "." + key + "'",
                        key, line_no);
    }
  }
  return file;
}

const ConfigFile::Item* ConfigFile::find(const std::string& section,
                                         const std::string& key) const {
  const auto sit = sections_.find(section);
  if (sit == sections_.end()) return nullptr;
  const auto kit = sit->second.find(key);
  if (kit == sit->second.end()) return nullptr;
  kit->second.consumed = true;
  return &kit->second;
}

const ConfigFile::Item& ConfigFile::require(const std::string& section,
                                            const std::string& key) const {
  const Item* item = find(section, key);
  if (!item) throw ConfigError("missing required key '" + section + "." + key + "'", key);
  return *item;
}

bool ConfigFile::has(const std::string& section, const std::string& key) const {
  return find(section, key) != nullptr;
}

std::string ConfigFile::get_string(const std::string& section, const std::string& key,
                                   std::string fallback) const {
  const Item* item = find(section, key);
  return item ? item->raw : fallback;
}

double ConfigFile::get_double(const std::string& section, const std::string& key,
                              double fallback) const {
  const Item* item = find(section, key);
  if (!item) return fallback;
  return parse_number(item->raw, section + "." + key, item->line);
}

int64_t ConfigFile::get_int(const std::string& section, const std::string& key,
                            int64_t fallback) const {
  const Item* item = find(section, key);
  if (!item) return fallback;
  const double v = parse_number(item->raw, section + "." + key, item->line);
  const auto rounded = static_cast<int64_t>(std::llround(v));
  if (static_cast<double>(rounded) != v) {
    throw ConfigError("expected an integer for '" + section + "." + key + "', got '" +
                          item->raw + "'",
                      key, item->line);
  }
  return rounded;
}

bool ConfigFile::get_bool(const std::string& section, const std::string& key,
                          bool fallback) const {
  const Item* item = find(section, key);
  if (!item) return fallback;
  if (item->raw == "true") return true;
  if (item->raw == "false") return false;
  throw ConfigError("expected true/false for '" + section + "." + key + "', got '" +
                        item->raw + "'",
                    key, item->line);
}

std::vector<double> ConfigFile::get_double_array(const std::string& section,
                                                 const std::string& key,
                                                 std::vector<double> fallback) const {
  const Item* item = find(section, key);
  if (!item) return fallback;
  if (!item->is_array) {
    throw ConfigError("expected an array for '" + section + "." + key + "'", key, item->line);
  }
  std::vector<double> out;
  for (const std::string& raw : item->array_items) {
    out.push_back(parse_number(raw, section + "." + key, item->line));
  }
  return out;
}

std::vector<int64_t> ConfigFile::get_int_array(const std::string& section,
                                               const std::string& key,
                                               std::vector<int64_t> fallback) const {
  std::vector<double> values = get_double_array(section, key, {});
  if (values.empty() && !has(section, key)) return fallback;
  std::vector<int64_t> out;
  for (double v : values) out.push_back(static_cast<int64_t>(std::llround(v)));
  return out;
}

std::vector<std::string> ConfigFile::get_string_array(const std::string& section,
                                                      const std::string& key,
                                                      std::vector<std::string> fallback) const {
  const Item* item = find(section, key);
  if (!item) return fallback;
  if (!item->is_array) {
    throw ConfigError("expected an array for '" + section + "." + key + "'", key, item->line);
  }
  return item->array_items;
}

void ConfigFile::reject_unknown_keys() const {
  for (const auto& [section, keys] : sections_) {
    for (const auto& [key, item] : keys) {
      if (!item.consumed) {
        throw ConfigError(source_ + ":" + std::to_string(item.line) + ": unknown key '" +
                              section + "." + key + "'",
                          key, item.line);
      }
    }
  }
}

namespace {

ObjectiveKind objective_from_name(const std::string& name) {
  if (name == "mse") return ObjectiveKind::mse;
  if (name == "bce" || name == "binary_cross_entropy") return ObjectiveKind::binary_cross_entropy;
  throw ConfigError("unknown objective '" + name + "' (expected mse or bce)", "objectives");
}

std::string objective_name(ObjectiveKind kind) {
  return kind == ObjectiveKind::mse ? "mse" : "bce";
}

}  // namespace

ExperimentConfig experiment_from_config(const ConfigFile& file) {
  ExperimentConfig config;
  config.source_path = file.source_name();
  config.raw_text = file.raw_text();

  config.problem.name = file.get_string("problem", "name", "toy");
  config.problem.dim = file.get_int("problem", "dim", 100);
  config.problem.n = static_cast<size_t>(file.get_int("problem", "n", 512));
  config.problem.input_dim = file.get_int("problem", "input_dim", 8);
  config.problem.tasks = static_cast<size_t>(file.get_int("problem", "tasks", 2));
  config.problem.noise = file.get_double("problem", "noise", 0.05);
  config.problem.csv_path = file.get_string("problem", "path", "");
  config.problem.csv_targets = file.get_string_array("problem", "targets", {});
  for (const std::string& name : file.get_string_array("problem", "objectives", {})) {
    config.problem.csv_objectives.push_back(objective_from_name(name));
  }

  config.model.trunk_hidden = file.get_int_array("model", "trunk_hidden", {});
  config.model.target_hidden = file.get_int_array("model", "target_hidden", {});

  const std::string variant = file.get_string("train", "variant", "phn-ls");
  const auto parsed = variant_from_name(variant);
  if (!parsed) throw ConfigError("unknown train.variant '" + variant + "'", "variant");
  config.train.variant = *parsed;
  config.train.alpha = file.get_double("train", "alpha", 0.2);
  config.train.lr = file.get_double("train", "lr", 1e-3);
  config.train.batch_size = static_cast<size_t>(file.get_int("train", "batch_size", 32));
  config.train.steps = static_cast<size_t>(file.get_int("train", "steps", 1000));
  config.train.seed = static_cast<uint64_t>(file.get_int("train", "seed", 0));
  config.train.eps_bal = file.get_double("train", "eps_bal", 1e-3);
  config.train.divergence_threshold =
      file.get_double("train", "divergence_threshold", 1e6);

  config.eval.rays = static_cast<size_t>(file.get_int("eval", "rays", 25));
  config.eval.ref_point = file.get_double_array("eval", "ref_point", {});
  config.eval.interval = static_cast<size_t>(file.get_int("eval", "interval", 0));

  config.output.dir = file.get_string("output", "dir", "");
  config.output.measured_time = file.get_bool("output", "measured_time", false);

  config.sweep.alpha = file.get_double_array("sweep", "alpha", {});
  config.sweep.hidden = file.get_int_array("sweep", "hidden", {});
  config.sweep.lr = file.get_double_array("sweep", "lr", {});

  if (file.has("compare", "methods")) {
    config.compare.methods.clear();
    for (const std::string& name : file.get_string_array("compare", "methods", {})) {
      const auto method = variant_from_name(name);
      if (!method) throw ConfigError("unknown compare method '" + name + "'", "methods");
      config.compare.methods.push_back(*method);
    }
  }
  if (file.has("compare", "n_rays")) {
    config.compare.n_rays.clear();
    for (int64_t k : file.get_int_array("compare", "n_rays", {})) {
      if (k < 1) throw ConfigError("compare.n_rays entries must be >= 1", "n_rays");
      config.compare.n_rays.push_back(static_cast<size_t>(k));
    }
  }
  config.compare.subsets = static_cast<size_t>(file.get_int("compare", "subsets", 30));

  file.reject_unknown_keys();
  finalize_experiment_config(config);
  return config;
}

void finalize_experiment_config(ExperimentConfig& config) {
  const std::string& name = config.problem.name;
  if (name != "toy" && name != "synth-regression" && name != "csv") {
    throw ConfigError("unknown problem.name '" + name + "'", "name");
  }
  size_t objectives = 2;
  if (name == "toy") {
    if (config.problem.dim < 1) throw ConfigError("problem.dim must be >= 1", "dim");
  } else if (name == "synth-regression") {
    if (config.problem.tasks < 2) throw ConfigError("problem.tasks must be >= 2", "tasks");
    objectives = config.problem.tasks;
  } else {
    if (config.problem.csv_path.empty()) {
      throw ConfigError("problem.path is required for csv problems", "path");
    }
    if (config.problem.csv_targets.empty() ||
        config.problem.csv_targets.size() != config.problem.csv_objectives.size()) {
      throw ConfigError("problem.targets and problem.objectives must list the same columns",
                        "targets");
    }
    objectives = config.problem.csv_targets.size();
  }

  if (config.model.trunk_hidden.empty()) {
    const int64_t width = name == "toy" ? 100 : 25;
    config.model.trunk_hidden = {width, width};
  }
  if (config.model.target_hidden.empty()) {
    config.model.target_hidden = name == "csv" ? std::vector<int64_t>{40, 20}
                                               : std::vector<int64_t>{16};
  }
  if (config.eval.ref_point.empty()) {
    config.eval.ref_point.assign(objectives, name == "toy" ? 2.0 : 1.0);
  }
  if (config.eval.ref_point.size() != objectives) {
    throw ConfigError("eval.ref_point needs one entry per objective", "ref_point");
  }
  if (config.eval.rays < 1) throw ConfigError("eval.rays must be >= 1", "rays");
  config.train.validate();
  config.train.ref_point = config.eval.ref_point;
  config.train.eval_interval = config.eval.interval;
}

nlohmann::json ExperimentConfig::echo() const {
  nlohmann::json j;
  j["problem"]["name"] = problem.name;
  if (problem.name == "toy") {
    j["problem"]["dim"] = problem.dim;
  } else if (problem.name == "synth-regression") {
    j["problem"]["n"] = problem.n;
    j["problem"]["input_dim"] = problem.input_dim;
    j["problem"]["tasks"] = problem.tasks;
    j["problem"]["noise"] = problem.noise;
  } else {
    j["problem"]["path"] = problem.csv_path;
    j["problem"]["targets"] = problem.csv_targets;
    std::vector<std::string> names;
    for (ObjectiveKind k : problem.csv_objectives) names.push_back(objective_name(k));
    j["problem"]["objectives"] = names;
  }
  j["model"]["trunk_hidden"] = model.trunk_hidden;
  j["model"]["target_hidden"] = model.target_hidden;
  j["train"]["variant"] = variant_name(train.variant);
  j["train"]["alpha"] = train.alpha;
  j["train"]["lr"] = train.lr;
  j["train"]["batch_size"] = train.batch_size;
  j["train"]["steps"] = train.steps;
  j["train"]["seed"] = train.seed;
  j["train"]["eps_bal"] = train.eps_bal;
  j["train"]["divergence_threshold"] = train.divergence_threshold;
  j["eval"]["rays"] = eval.rays;
  j["eval"]["ref_point"] = eval.ref_point;
  j["eval"]["interval"] = eval.interval;
  j["output"]["measured_time"] = output.measured_time;
  return j;
}

ExperimentConfig load_experiment_config(const std::string& path) {
  return experiment_from_config(ConfigFile::parse_file(path));
}

ExperimentConfig experiment_from_json(const nlohmann::json& echo) {
  ExperimentConfig config;
  const auto& p = echo.at("problem");
  config.problem.name = p.at("name").get<std::string>();
  if (config.problem.name == "toy") {
    config.problem.dim = p.at("dim").get<int64_t>();
  } else if (config.problem.name == "synth-regression") {
    config.problem.n = p.at("n").get<size_t>();
    config.problem.input_dim = p.at("input_dim").get<int64_t>();
    config.problem.tasks = p.at("tasks").get<size_t>();
    config.problem.noise = p.at("noise").get<double>();
  } else {
    config.problem.csv_path = p.at("path").get<std::string>();
    config.problem.csv_targets = p.at("targets").get<std::vector<std::string>>();
    for (const auto& name : p.at("objectives")) {
      config.problem.csv_objectives.push_back(objective_from_name(name.get<std::string>()));
    }
  }
  const auto& m = echo.at("model");
  config.model.trunk_hidden = m.at("trunk_hidden").get<std::vector<int64_t>>();
  config.model.target_hidden = m.at("target_hidden").get<std::vector<int64_t>>();
  const auto& t = echo.at("train");
  const auto variant = variant_from_name(t.at("variant").get<std::string>());
  if (!variant) throw ConfigError("unknown train.variant in echo", "variant");
  config.train.variant = *variant;
  config.train.alpha = t.at("alpha").get<double>();
  config.train.lr = t.at("lr").get<double>();
  config.train.batch_size = t.at("batch_size").get<size_t>();
  config.train.steps = t.at("steps").get<size_t>();
  config.train.seed = t.at("seed").get<uint64_t>();
  config.train.eps_bal = t.at("eps_bal").get<double>();
  config.train.divergence_threshold = t.at("divergence_threshold").get<double>();
  const auto& e = echo.at("eval");
  config.eval.rays = e.at("rays").get<size_t>();
  config.eval.ref_point = e.at("ref_point").get<std::vector<double>>();
  config.eval.interval = e.at("interval").get<size_t>();
  config.output.measured_time = echo.at("output").at("measured_time").get<bool>();
  finalize_experiment_config(config);
  return config;
}

}  // namespace phn
