#pragma once

#include <atomic>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "beamlearn/config.hpp"
#include "beamlearn/learner.hpp"
#include "beamlearn/oracles.hpp"

namespace beamlearn {

inline std::string fmt_g(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.15g", v);
  return buf;
}

inline int sweep_thread_cap() {
  const char* env = std::getenv("BEAMLEARN_THREADS");
  if (env == nullptr || *env == '\0')
    return static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
  const int n = static_cast<int>(detail::parse_long("BEAMLEARN_THREADS", env));
  if (n < 1) throw ConfigError("BEAMLEARN_THREADS must be >= 1");
  return n;
}

// Runs fn(i) for i in [0, n) on up to max_threads workers. Work items must
// not share mutable state; results are collected by index so output order is
// independent of scheduling.
template <typename Fn>
inline void parallel_for(long n, int max_threads, Fn&& fn) {
  if (n <= 0) return;
  const int threads = static_cast<int>(std::min<long>(max_threads, n));
  if (threads <= 1) {
    for (long i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<long> next{0};
  std::vector<std::thread> pool;
  pool.reserve(static_cast<std::size_t>(threads));
  for (int t = 0; t < threads; ++t) {
    pool.emplace_back([&]() {
      for (long i = next.fetch_add(1); i < n; i = next.fetch_add(1)) fn(i);
    });
  }
  for (auto& th : pool) th.join();
}

inline void write_metrics_csv(const std::vector<MetricsRow>& rows, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write metrics: " + path);
  out << "round,surrogate_loss,terminal_cost,cost_increases,pure_rollin,gamma_hat,"
         "alpha_hat,eta,wallclock_ms\n";
  for (const auto& r : rows) {
    out << r.round << ',' << fmt_g(r.surrogate_loss) << ',' << fmt_g(r.terminal_cost) << ','
        << r.cost_increases << ',' << r.pure_rollin << ','
        << (r.gamma_hat ? fmt_g(*r.gamma_hat) : "") << ','
        << (r.alpha_hat ? fmt_g(*r.alpha_hat) : "") << ',' << fmt_g(r.eta) << ','
        << fmt_g(r.wallclock_ms) << "\n";
  }
}

inline nlohmann::json summary_json(const RunConfig& cfg, const LearnResult& res) {
  nlohmann::json j;
  j["task"] = cfg.task;
  j["preset"] = cfg.preset;
  j["loss"] = cfg.loss;
  j["strategy"] = cfg.strategy;
  j["k"] = cfg.k;
  j["seed"] = cfg.seed;
  j["rounds"] = res.tracker.rounds();
  j["mean_surrogate_loss"] = res.tracker.mean_loss();
  j["mean_terminal_cost"] = res.tracker.mean_terminal_cost();
  j["total_cost_increases"] = res.tracker.total_cost_increases();
  if (!std::isnan(res.final_validation_cost))
    j["final_validation_cost"] = res.final_validation_cost;
  if (!std::isnan(res.best_validation_cost))
    j["best_validation_cost"] = res.best_validation_cost;
  if (res.final_gamma_hat) {
    j["gamma_hat"] = *res.final_gamma_hat;
    j["gamma_certified"] = res.gamma_certified;
  }
  const auto alpha = res.tracker.alpha_hat();
  if (alpha) j["alpha_hat"] = *alpha;
  j["u_bound"] = res.u_bound;
  j["eta"] = res.eta;
  if (alpha)
    j["stopreset_bound"] = stopreset_bound(res.tracker.mean_loss(), *alpha, res.u_bound,
                                           res.eta);
  j["clip_events"] = res.clip_events;
  j["aborted_rounds"] = res.aborted_rounds;
  j["wall_ms"] = res.wall_ms_total;
  return j;
}

struct TrainOutcome {
  RunConfig cfg;
  LearnResult result;
};

inline TrainOutcome train_run(RunConfig cfg, const std::string& out_dir) {
  apply_preset(cfg);
  const Datasets data = make_datasets(cfg);
  const LearnOptions opts = make_learn_options(cfg);
  TrainOutcome outcome;
  outcome.result = learn(data.train, data.validation, data.factory, opts);
  outcome.cfg = cfg;

  namespace fs = std::filesystem;
  fs::create_directories(out_dir);
  write_metrics_csv(outcome.result.metrics, (fs::path(out_dir) / "metrics.csv").string());
  save_parameters(outcome.result.theta, (fs::path(out_dir) / "final_model.json").string());
  save_parameters(outcome.result.best_theta,
                  (fs::path(out_dir) / "best_model.json").string());
  std::ofstream sum((fs::path(out_dir) / "summary.json").string());
  if (!sum) throw ConfigError("cannot write summary.json");
  sum << summary_json(cfg, outcome.result).dump(2) << "\n";
  return outcome;
}

inline nlohmann::json evaluate_run(RunConfig cfg, const std::string& model_path,
                                   const std::string& out_dir) {
  apply_preset(cfg);
  const Datasets data = make_datasets(cfg);
  const Parameters theta = load_parameters(model_path);
  if (theta.size() != cfg.feature_dim)
    throw ConfigError("model dimension does not match feature_dim");
  const std::vector<Example>& eval_set =
      data.validation.empty() ? data.train : data.validation;
  const double mean_cost = decode_mean_cost(eval_set, data.factory, theta, cfg.feature_dim,
                                            cfg.feature_seed, cfg.clip, cfg.k);
  double oracle_total = 0;
  double length_total = 0;
  for (const auto& ex : eval_set) {
    const TaskSpace ts = data.factory(ex);
    oracle_total += ts.table.at(ts.space.initial_node());
    length_total += static_cast<double>(ex.labels.size());
  }
  nlohmann::json j;
  j["examples"] = eval_set.size();
  j["k"] = cfg.k;
  j["mean_terminal_cost"] = mean_cost;
  j["mean_cost_per_position"] =
      mean_cost * static_cast<double>(eval_set.size()) / length_total;
  j["oracle_mean_cost"] = oracle_total / static_cast<double>(eval_set.size());

  namespace fs = std::filesystem;
  fs::create_directories(out_dir);
  std::ofstream out((fs::path(out_dir) / "eval.json").string());
  if (!out) throw ConfigError("cannot write eval.json");
  out << j.dump(2) << "\n";
  return j;
}

struct CompareRow {
  std::string name;
  std::string loss;
  std::string strategy;
  int k = 1;
  long rounds = 0;
  double mean_surrogate = 0;
  double mean_terminal_cost = 0;
  double final_validation_cost = std::numeric_limits<double>::quiet_NaN();
  std::optional<double> gamma_hat;
  bool certified = false;
  std::optional<double> alpha_hat;
  double eta = 0;
  std::optional<double> bound;
  std::string error;
};

// Sweeps loss x strategy combinations (or a preset list) over the same data
// and seed; one row per combination. Thread count is capped by the
// BEAMLEARN_THREADS environment variable.
inline std::vector<CompareRow> compare_run(const RunConfig& base,
                                           const std::vector<std::string>& losses,
                                           const std::vector<std::string>& strategies,
                                           const std::vector<std::string>& presets,
                                           const std::string& out_dir) {
  std::vector<RunConfig> combos;
  if (!presets.empty()) {
    for (const auto& p : presets) {
      RunConfig cfg = base;
      cfg.preset = p;
      combos.push_back(cfg);
    }
  } else {
    const std::vector<std::string> ls = losses.empty()
                                            ? std::vector<std::string>{base.loss}
                                            : losses;
    const std::vector<std::string> ss =
        strategies.empty() ? std::vector<std::string>{base.strategy} : strategies;
    for (const auto& l : ls) {
      for (const auto& s : ss) {
        RunConfig cfg = base;
        cfg.preset.clear();
        cfg.loss = l;
        cfg.strategy = s;
        combos.push_back(cfg);
      }
    }
  }
  for (auto& cfg : combos) {
    if (cfg.preset.empty()) continue;
    // Fail fast on bad preset names before spawning workers.
    preset_by_name(cfg.preset);
  }

  std::vector<CompareRow> rows(combos.size());
  parallel_for(static_cast<long>(combos.size()), sweep_thread_cap(), [&](long i) {
    RunConfig cfg = combos[static_cast<std::size_t>(i)];
    CompareRow& row = rows[static_cast<std::size_t>(i)];
    row.name = cfg.preset.empty() ? cfg.loss + "+" + cfg.strategy : cfg.preset;
    try {
      apply_preset(cfg);
      row.loss = cfg.loss;
      row.strategy = cfg.strategy;
      row.k = cfg.k;
      const Datasets data = make_datasets(cfg);
      const LearnOptions opts = make_learn_options(cfg);
      const LearnResult res = learn(data.train, data.validation, data.factory, opts);
      row.rounds = res.tracker.rounds();
      row.mean_surrogate = res.tracker.mean_loss();
      row.mean_terminal_cost = res.tracker.mean_terminal_cost();
      row.final_validation_cost = res.final_validation_cost;
      row.gamma_hat = res.final_gamma_hat;
      row.certified = res.gamma_certified;
      row.alpha_hat = res.tracker.alpha_hat();
      row.eta = res.eta;
      if (row.alpha_hat)
        row.bound = stopreset_bound(res.tracker.mean_loss(), *row.alpha_hat, res.u_bound,
                                    res.eta);
    } catch (const std::exception& e) {
      row.error = e.what();
    }
  });

  namespace fs = std::filesystem;
  fs::create_directories(out_dir);
  std::ofstream out((fs::path(out_dir) / "compare.csv").string());
  if (!out) throw ConfigError("cannot write compare.csv");
  out << "name,loss,strategy,k,rounds,mean_surrogate,mean_terminal_cost,"
         "final_validation_cost,gamma_hat,certified,alpha_hat,eta,bound,error\n";
  for (const auto& r : rows) {
    out << r.name << ',' << r.loss << ',' << r.strategy << ',' << r.k << ',' << r.rounds
        << ',' << fmt_g(r.mean_surrogate) << ',' << fmt_g(r.mean_terminal_cost) << ','
        << (std::isnan(r.final_validation_cost) ? "" : fmt_g(r.final_validation_cost))
        << ',' << (r.gamma_hat ? fmt_g(*r.gamma_hat) : "") << ','
        << (r.certified ? "1" : "0") << ',' << (r.alpha_hat ? fmt_g(*r.alpha_hat) : "")
        << ',' << fmt_g(r.eta) << ',' << (r.bound ? fmt_g(*r.bound) : "") << ',' << r.error
        << "\n";
  }
  return rows;
}

}  // namespace beamlearn
