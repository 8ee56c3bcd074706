#pragma once

#include <cstdint>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "beamlearn/data_collection.hpp"
#include "beamlearn/errors.hpp"
#include "beamlearn/learner.hpp"
#include "beamlearn/losses.hpp"
#include "beamlearn/optimizer.hpp"
#include "beamlearn/task.hpp"

namespace beamlearn {

struct RunConfig {
  std::string task = "hamming";  // hamming | garden
  std::string train_path;        // JSONL overrides for synthetic data
  std::string validation_path;
  int labels = 3;
  int length = 5;
  double noise = 0.1;
  long train_size = 200;
  long validation_size = 50;
  std::uint64_t data_seed = 1;

  int k = 4;
  std::string loss = "perceptron_first";
  std::string strategy = "continue";
  std::string preset;

  std::string optimizer = "ogd";  // ogd | adam
  double step_scale = 0.5;
  double adam_step = 0.001;
  long rounds = 0;
  std::size_t feature_dim = 4096;
  std::uint64_t feature_seed = 0x5eed;
  double clip = 1e6;
  std::uint64_t seed = 0;
  double delta = 0.1;
  long validation_interval = 0;
  long regret_interval = 0;
  bool timing = false;
};

namespace detail {

inline std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r\n");
  if (a == std::string::npos) return "";
  const auto b = s.find_last_not_of(" \t\r\n");
  return s.substr(a, b - a + 1);
}

inline long parse_long(const std::string& key, const std::string& v) {
  try {
    std::size_t used = 0;
    const long x = std::stol(v, &used);
    if (used != v.size()) throw ConfigError(key + ": not an integer: " + v);
    return x;
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception&) {
    throw ConfigError(key + ": not an integer: " + v);
  }
}

inline std::uint64_t parse_u64(const std::string& key, const std::string& v) {
  try {
    std::size_t used = 0;
    const unsigned long long x = std::stoull(v, &used);
    if (used != v.size()) throw ConfigError(key + ": not an unsigned integer: " + v);
    return static_cast<std::uint64_t>(x);
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception&) {
    throw ConfigError(key + ": not an unsigned integer: " + v);
  }
}

inline double parse_double(const std::string& key, const std::string& v) {
  try {
    std::size_t used = 0;
    const double x = std::stod(v, &used);
    if (used != v.size()) throw ConfigError(key + ": not a number: " + v);
    return x;
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception&) {
    throw ConfigError(key + ": not a number: " + v);
  }
}

inline bool parse_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  throw ConfigError(key + ": not a boolean: " + v);
}

}  // namespace detail

inline void apply_config_entry(RunConfig& cfg, const std::string& key,
                               const std::string& value) {
  using namespace detail;
  if (key == "task") cfg.task = value;
  else if (key == "train_path") cfg.train_path = value;
  else if (key == "validation_path") cfg.validation_path = value;
  else if (key == "labels") cfg.labels = static_cast<int>(parse_long(key, value));
  else if (key == "length") cfg.length = static_cast<int>(parse_long(key, value));
  else if (key == "noise") cfg.noise = parse_double(key, value);
  else if (key == "train_size") cfg.train_size = parse_long(key, value);
  else if (key == "validation_size") cfg.validation_size = parse_long(key, value);
  else if (key == "data_seed") cfg.data_seed = parse_u64(key, value);
  else if (key == "k") cfg.k = static_cast<int>(parse_long(key, value));
  else if (key == "loss") cfg.loss = value;
  else if (key == "strategy") cfg.strategy = value;
  else if (key == "preset") cfg.preset = value;
  else if (key == "optimizer") cfg.optimizer = value;
  else if (key == "step_scale") cfg.step_scale = parse_double(key, value);
  else if (key == "adam_step") cfg.adam_step = parse_double(key, value);
  else if (key == "rounds") cfg.rounds = parse_long(key, value);
  else if (key == "feature_dim")
    cfg.feature_dim = static_cast<std::size_t>(parse_long(key, value));
  else if (key == "feature_seed") cfg.feature_seed = parse_u64(key, value);
  else if (key == "clip") cfg.clip = parse_double(key, value);
  else if (key == "seed") cfg.seed = parse_u64(key, value);
  else if (key == "delta") cfg.delta = parse_double(key, value);
  else if (key == "validation_interval") cfg.validation_interval = parse_long(key, value);
  else if (key == "regret_interval") cfg.regret_interval = parse_long(key, value);
  else if (key == "timing") cfg.timing = detail::parse_bool(key, value);
  else throw ConfigError("unknown config key: " + key);
}

inline RunConfig parse_config(std::istream& in) {
  RunConfig cfg;
  std::string line;
  long line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    const std::string t = detail::trim(line);
    if (t.empty()) continue;
    const auto eq = t.find('=');
    if (eq == std::string::npos)
      throw ConfigError("line " + std::to_string(line_no) + ": expected key = value");
    const std::string key = detail::trim(t.substr(0, eq));
    const std::string value = detail::trim(t.substr(eq + 1));
    if (key.empty()) throw ConfigError("line " + std::to_string(line_no) + ": empty key");
    apply_config_entry(cfg, key, value);
  }
  return cfg;
}

inline RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config: " + path);
  return parse_config(in);
}

inline RunConfig config_from_string(const std::string& text) {
  std::istringstream in(text);
  return parse_config(in);
}

// Named combinations of collection strategy, surrogate, and width handling
// matching well-known training schemes.
struct Preset {
  std::string name;
  std::string strategy;
  std::string loss;        // empty: keep the configured loss
  std::optional<int> pin_k;
  bool requires_wide_beam = false;
};

inline const std::vector<Preset>& preset_catalog() {
  static const std::vector<Preset> presets = {
      {"early_update", "stop", "perceptron_first", std::nullopt, true},
      {"laso_perceptron", "reset", "perceptron_first", std::nullopt, false},
      {"laso_margin", "reset", "margin_last", std::nullopt, false},
      {"bso", "reset", "cs_margin_last", std::nullopt, false},
      {"globally_normalized", "stop", "log_beam", std::nullopt, false},
      {"log_likelihood", "oracle", "log_neighbors", 1, false},
      {"dagger", "continue", "log_neighbors", 1, false},
      {"ours", "continue", "", std::nullopt, false},
  };
  return presets;
}

inline const Preset& preset_by_name(const std::string& name) {
  for (const auto& p : preset_catalog())
    if (p.name == name) return p;
  throw ConfigError("unknown preset: " + name);
}

inline void apply_preset(RunConfig& cfg) {
  if (cfg.preset.empty()) return;
  const Preset& p = preset_by_name(cfg.preset);
  cfg.strategy = p.strategy;
  if (!p.loss.empty()) cfg.loss = p.loss;
  if (p.pin_k.has_value()) cfg.k = *p.pin_k;
  if (p.requires_wide_beam && cfg.k < 2)
    throw ConfigError("preset " + p.name + " requires beam width k >= 2");
}

inline LearnOptions make_learn_options(const RunConfig& cfg) {
  LearnOptions opts;
  opts.k = cfg.k;
  opts.strategy = Strategy::parse(cfg.strategy);
  opts.loss_name = cfg.loss;
  loss_by_name(cfg.loss);  // validate early
  if (cfg.optimizer == "ogd") opts.optimizer = OnlineOptimizer::ogd(cfg.step_scale);
  else if (cfg.optimizer == "adam") opts.optimizer = OnlineOptimizer::adam(cfg.adam_step);
  else throw ConfigError("unknown optimizer: " + cfg.optimizer);
  opts.rounds = cfg.rounds;
  opts.feature_dim = cfg.feature_dim;
  opts.feature_seed = cfg.feature_seed;
  opts.score_clip = cfg.clip;
  opts.run_seed = cfg.seed;
  opts.validation_interval = cfg.validation_interval;
  opts.regret_interval = cfg.regret_interval;
  opts.delta = cfg.delta;
  opts.timing = cfg.timing;
  return opts;
}

struct Datasets {
  std::vector<Example> train;
  std::vector<Example> validation;
  SpaceFactory factory;
  int num_labels = 0;
};

inline Datasets make_datasets(const RunConfig& cfg) {
  Datasets d;
  if (cfg.task == "hamming") {
    d.num_labels = cfg.labels;
    if (cfg.train_path.empty()) {
      const SequenceTask task = SequenceTask::identity(cfg.labels, cfg.length, cfg.noise);
      d.train = generate_dataset(task, cfg.train_size, cfg.data_seed);
      d.validation = generate_dataset(task, cfg.validation_size, mix64(cfg.data_seed, 1));
    } else {
      d.train = read_jsonl(cfg.train_path);
      if (!cfg.validation_path.empty()) d.validation = read_jsonl(cfg.validation_path);
    }
  } else if (cfg.task == "garden") {
    const GardenPathTask task{cfg.length};
    d.num_labels = GardenPathTask::num_labels;
    if (cfg.train_path.empty()) {
      d.train = task.generate(cfg.train_size, cfg.data_seed);
      d.validation = task.generate(cfg.validation_size, mix64(cfg.data_seed, 1));
    } else {
      d.train = read_jsonl(cfg.train_path);
      if (!cfg.validation_path.empty()) d.validation = read_jsonl(cfg.validation_path);
    }
  } else {
    throw ConfigError("unknown task: " + cfg.task);
  }
  if (d.train.empty()) throw ConfigError("training set is empty");
  for (const auto& ex : d.train)
    for (int y : ex.labels)
      if (y < 0 || y >= d.num_labels) throw ConfigError("label out of range in training set");
  d.factory = hamming_factory(d.num_labels);
  return d;
}

}  // namespace beamlearn
