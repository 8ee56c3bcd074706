#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "beamlearn/beam.hpp"
#include "beamlearn/data_collection.hpp"
#include "beamlearn/errors.hpp"
#include "beamlearn/losses.hpp"
#include "beamlearn/optimizer.hpp"
#include "beamlearn/rng.hpp"
#include "beamlearn/scoring.hpp"
#include "beamlearn/search_space.hpp"
#include "beamlearn/task.hpp"

namespace beamlearn {

struct StoredCandidate {
  NodeId node = 0;
  double cost = 0;
  FeatureVector features;
};

// One recorded decision point, frozen so the surrogate can be re-evaluated
// at any parameter vector later (comparator search, coverage replays).
struct StoredBeamInput {
  std::vector<StoredCandidate> candidates;  // ascending NodeId
  int k = 1;
};

inline double replay_round_loss(const std::vector<StoredBeamInput>& round, const LossFn& loss,
                                const Parameters& theta, double clip,
                                std::vector<double>* grad) {
  double total = 0;
  for (const auto& input : round) {
    NeighborScoring ns;
    ns.k = input.k;
    const std::size_t n = input.candidates.size();
    ns.nodes.resize(n);
    ns.costs.resize(n);
    ns.scores.resize(n);
    std::vector<bool> clipped(n, false);
    for (std::size_t i = 0; i < n; ++i) {
      const auto& c = input.candidates[i];
      ns.nodes[i] = c.node;
      ns.costs[i] = c.cost;
      const double raw = dot(theta, c.features);
      clipped[i] = std::abs(raw) > clip;
      ns.scores[i] = std::clamp(raw, -clip, clip);
    }
    const LossResult r = loss(ns);
    total += r.value;
    if (grad != nullptr) {
      for (std::size_t i = 0; i < n; ++i) {
        const double g = r.grad_scores[i];
        if (g == 0 || clipped[i]) continue;
        for (const auto& [idx, val] : input.candidates[i].features.entries)
          (*grad)[static_cast<std::size_t>(idx)] += g * val;
      }
    }
  }
  return total;
}

// Per-round record of everything the diagnostics need: online surrogate
// values, realized terminal costs, roll-in purity flags, and the frozen
// decision points for replay.
class RegretTracker {
 public:
  void add_round(double loss_value, double terminal_cost, long cost_increases,
                 bool pure_rollin, bool oracle_round,
                 std::vector<StoredBeamInput> inputs) {
    losses_.push_back(loss_value);
    terminal_costs_.push_back(terminal_cost);
    cost_increases_.push_back(cost_increases);
    pure_rollin_.push_back(pure_rollin);
    oracle_round_.push_back(oracle_round);
    inputs_.push_back(std::move(inputs));
  }

  long rounds() const { return static_cast<long>(losses_.size()); }

  double mean_loss() const {
    if (losses_.empty()) return 0;
    double s = 0;
    for (double v : losses_) s += v;
    return s / static_cast<double>(losses_.size());
  }

  double mean_terminal_cost() const {
    if (terminal_costs_.empty()) return 0;
    double s = 0;
    for (double v : terminal_costs_) s += v;
    return s / static_cast<double>(terminal_costs_.size());
  }

  // Fraction of non-oracle rounds whose roll-in window stayed on the learned
  // policy's own proposals; empty when every round was oracle-driven.
  std::optional<double> alpha_hat() const {
    long n = 0;
    long pure = 0;
    for (std::size_t i = 0; i < pure_rollin_.size(); ++i) {
      if (oracle_round_[i]) continue;
      ++n;
      if (pure_rollin_[i]) ++pure;
    }
    if (n == 0) return std::nullopt;
    return static_cast<double>(pure) / static_cast<double>(n);
  }

  long total_cost_increases() const {
    long s = 0;
    for (long v : cost_increases_) s += v;
    return s;
  }

  const std::vector<double>& losses() const { return losses_; }
  const std::vector<double>& terminal_costs() const { return terminal_costs_; }
  const std::vector<long>& cost_increases() const { return cost_increases_; }
  const std::vector<char>& pure_rollin() const { return pure_rollin_; }
  const std::vector<std::vector<StoredBeamInput>>& inputs() const { return inputs_; }

  double replay_mean_loss(const LossFn& loss, const Parameters& theta, double clip,
                          std::vector<double>* grad) const {
    if (inputs_.empty()) return 0;
    double total = 0;
    for (const auto& round : inputs_)
      total += replay_round_loss(round, loss, theta, clip, grad);
    if (grad != nullptr) {
      const double inv = 1.0 / static_cast<double>(inputs_.size());
      for (double& g : *grad) g *= inv;
    }
    return total / static_cast<double>(inputs_.size());
  }

 private:
  std::vector<double> losses_;
  std::vector<double> terminal_costs_;
  std::vector<long> cost_increases_;
  std::vector<char> pure_rollin_;
  std::vector<char> oracle_round_;
  std::vector<std::vector<StoredBeamInput>> inputs_;
};

inline double azuma_eta(double u, double delta, long m) {
  if (!(delta > 0) || !(delta <= 1)) throw ConfigError("delta must be in (0, 1]");
  if (m < 1) throw ConfigError("eta needs at least one round");
  if (u < 0) throw ConfigError("loss bound must be >= 0");
  return u * std::sqrt(2.0 * std::log(1.0 / delta) / static_cast<double>(m));
}

// Deviation-adjusted certificate for intervention runs: average observed
// surrogate, plus the worst case u on the impure-roll-in fraction, plus the
// concentration margin on both estimates.
inline double stopreset_bound(double mean_loss, double alpha_hat, double u, double eta) {
  return mean_loss + u * (1.0 - alpha_hat) + 2.0 * eta;
}

inline double interp_alpha_analytic(double beta, int depth) {
  if (!(beta >= 0 && beta <= 1)) throw ConfigError("beta must be in [0, 1]");
  if (depth < 1) throw ConfigError("depth must be >= 1");
  return std::pow(1.0 - beta, depth - 1);
}

// Price of annealing the coin toward the learned policy over the first t0
// rounds, amortized over the whole run.
inline double interp_schedule_penalty(double u, double t0, double m) {
  if (u < 0 || t0 < 0 || !(m > 0)) throw ConfigError("bad mixture schedule arguments");
  return u * std::min(1.0, t0 / m);
}

// Worst-case one-round surrogate value over spaces with at most n_max scored
// candidates per step, per-step completion-cost spread at most cost_range,
// scores clamped to [-clip, clip], and depth steps per round.
inline double loss_bound_u(const std::string& loss_name, int depth, int n_max,
                           double cost_range, double clip, int k) {
  if (depth < 1 || n_max < 1 || k < 1) throw ConfigError("bad bound arguments");
  if (cost_range < 0 || clip < 0) throw ConfigError("bad bound arguments");
  const double d = static_cast<double>(depth);
  const double n = static_cast<double>(n_max);
  const double c = clip;
  const double r = cost_range;
  if (loss_name == "perceptron_first" || loss_name == "perceptron_last") return 2 * c * d;
  if (loss_name == "margin_last") return (2 * c + 1) * d;
  if (loss_name == "cs_margin_last") return r * (2 * c + 1) * d;
  if (loss_name == "upper_bound") {
    const double extra = std::max(0.0, n - static_cast<double>(k));
    return extra * r * (2 * c + 1) * d;
  }
  if (loss_name == "log_beam") return (2 * c + std::log(static_cast<double>(k) + 1)) * d;
  if (loss_name == "log_neighbors") return (2 * c + std::log(n)) * d;
  if (loss_name == "cs_margin_beam") return (2 * c + r) * d;
  if (loss_name == "softmax_margin_beam")
    return (2 * c + r + std::log(static_cast<double>(std::min(n_max, k)))) * d;
  if (loss_name == "wp_all" || loss_name == "wp_bipartite" || loss_name == "wp_hybrid")
    return n * (n - 1) / 2 * r * (2 * c + 1) * d;
  throw ConfigError("unknown loss: " + loss_name);
}

struct SpaceBounds {
  int n_max = 1;
  double cost_range = 0;
};

inline SpaceBounds space_bounds(const SearchSpace& space, int k) {
  SpaceBounds b;
  std::size_t max_branch = 1;
  double lo = std::numeric_limits<double>::infinity();
  double hi = -std::numeric_limits<double>::infinity();
  for (NodeId v = 0; v < static_cast<NodeId>(space.size()); ++v) {
    max_branch = std::max(max_branch, space.neighbors_of(v).size());
    if (space.is_terminal(v)) {
      lo = std::min(lo, space.terminal_cost(v));
      hi = std::max(hi, space.terminal_cost(v));
    }
  }
  b.n_max = static_cast<int>(std::min<std::size_t>(
      static_cast<std::size_t>(k) * max_branch, space.size()));
  b.cost_range = (hi > lo) ? hi - lo : 0.0;
  return b;
}

struct EmpiricalRegret {
  double gamma_hat = 0;
  double online_mean_loss = 0;
  double comparator_mean_loss = 0;
  bool certified = false;
};

// Online average minus the best fixed parameter vector found by batch
// optimization over the frozen decision points. Certified only for losses
// that are convex in the scores (and hence in theta under a linear scorer);
// otherwise the comparator is a multi-start local search and the estimate is
// a lower bound on the true gap's comparator term.
inline EmpiricalRegret empirical_regret(const RegretTracker& tracker, const LossFn& loss,
                                        const std::string& loss_name,
                                        const Parameters& theta_final, double clip,
                                        int iters = 400, double tol = 1e-4) {
  EmpiricalRegret out;
  out.certified = loss_is_convex(loss_name);
  out.online_mean_loss = tracker.mean_loss();
  if (tracker.rounds() == 0) return out;

  const std::size_t dim = theta_final.size();
  double best = std::numeric_limits<double>::infinity();
  std::vector<Parameters> starts;
  starts.emplace_back(dim, 0.0);
  starts.push_back(theta_final);
  for (const auto& start : starts) {
    Parameters theta = start;
    OnlineOptimizer opt = OnlineOptimizer::adam(0.05);
    double local_best = tracker.replay_mean_loss(loss, theta, clip, nullptr);
    int stall = 0;
    for (int it = 0; it < iters; ++it) {
      std::vector<double> grad(dim, 0.0);
      tracker.replay_mean_loss(loss, theta, clip, &grad);
      opt.update(theta, grad);
      const double value = tracker.replay_mean_loss(loss, theta, clip, nullptr);
      if (value < local_best - tol) {
        local_best = value;
        stall = 0;
      } else if (++stall >= 25) {
        break;
      }
    }
    best = std::min(best, local_best);
  }
  out.comparator_mean_loss = best;
  out.gamma_hat = out.online_mean_loss - best;
  return out;
}

struct MetricsRow {
  long round = 0;
  double surrogate_loss = 0;
  double terminal_cost = 0;
  long cost_increases = 0;
  int pure_rollin = 0;
  std::optional<double> gamma_hat;
  std::optional<double> alpha_hat;
  double eta = 0;
  double wallclock_ms = 0;
};

struct LearnOptions {
  int k = 4;
  Strategy strategy = Strategy::go_on();
  std::string loss_name = "perceptron_first";
  OnlineOptimizer optimizer = OnlineOptimizer::ogd(0.5);
  long rounds = 0;  // 0: one pass over the training set
  std::size_t feature_dim = 4096;
  std::uint64_t feature_seed = 0x5eedULL;
  double score_clip = 1e6;
  std::uint64_t run_seed = 0;
  long validation_interval = 0;  // 0: max(1, rounds / 10)
  long regret_interval = 0;      // 0: final round only
  double delta = 0.1;
  bool timing = false;
  bool keep_theta_history = false;
  int comparator_iters = 400;
};

struct LearnResult {
  Parameters theta;
  Parameters best_theta;
  double best_validation_cost = std::numeric_limits<double>::quiet_NaN();
  double final_validation_cost = std::numeric_limits<double>::quiet_NaN();
  std::vector<MetricsRow> metrics;
  RegretTracker tracker;
  long clip_events = 0;
  long aborted_rounds = 0;
  std::optional<double> final_gamma_hat;
  bool gamma_certified = false;
  double u_bound = 0;
  double eta = 0;
  std::vector<Parameters> theta_history;
  double wall_ms_total = 0;
};

inline double decode_mean_cost(const std::vector<Example>& examples,
                               const SpaceFactory& factory, const Parameters& theta,
                               std::size_t feature_dim, std::uint64_t feature_seed,
                               double clip, int k) {
  if (examples.empty()) return std::numeric_limits<double>::quiet_NaN();
  double total = 0;
  for (const auto& ex : examples) {
    TaskSpace ts = factory(ex);
    LinearScorer scorer(theta, ts.featurizer(feature_dim, feature_seed), clip);
    const NodeId leaf = beam_search(ts.space, k, scorer.fn());
    total += ts.table.at(leaf);
  }
  return total / static_cast<double>(examples.size());
}

inline LearnResult learn(const std::vector<Example>& train,
                         const std::vector<Example>& validation, const SpaceFactory& factory,
                         const LearnOptions& opts) {
  if (train.empty()) throw ConfigError("training set is empty");
  if (opts.k < 1) throw ConfigError("beam width must be >= 1");
  if (!(opts.delta > 0) || !(opts.delta <= 1)) throw ConfigError("delta must be in (0, 1]");
  if (opts.feature_dim < 1) throw ConfigError("feature dimension must be >= 1");
  if (!(opts.score_clip > 0)) throw ConfigError("score clip must be > 0");
  const LossFn loss = loss_by_name(opts.loss_name);

  const long rounds = opts.rounds > 0 ? opts.rounds : static_cast<long>(train.size());
  const long val_interval =
      opts.validation_interval > 0 ? opts.validation_interval : std::max<long>(1, rounds / 10);
  const long regret_interval = opts.regret_interval > 0 ? opts.regret_interval : rounds;

  LearnResult res;
  res.theta.assign(opts.feature_dim, 0.0);
  res.gamma_certified = loss_is_convex(opts.loss_name);
  OnlineOptimizer optimizer = opts.optimizer;

  const auto run_start = std::chrono::steady_clock::now();
  for (long t = 0; t < rounds; ++t) {
    const auto round_start = std::chrono::steady_clock::now();
    if (opts.keep_theta_history) res.theta_history.push_back(res.theta);

    const Example& ex = train[static_cast<std::size_t>(t) % train.size()];
    TaskSpace ts = factory(ex);
    LinearScorer scorer(res.theta, ts.featurizer(opts.feature_dim, opts.feature_seed),
                        opts.score_clip);
    CounterRng rng(opts.run_seed, static_cast<std::uint64_t>(t));
    const Trajectory traj =
        beam_trajectory(ts.space, ts.table, scorer.fn(), opts.k, opts.strategy, rng);
    res.clip_events += scorer.clip_events();

    std::vector<StoredBeamInput> stored;
    stored.reserve(traj.loss_inputs.size());
    for (const auto& ns : traj.loss_inputs) {
      StoredBeamInput input;
      input.k = ns.k;
      input.candidates.reserve(ns.nodes.size());
      for (std::size_t i = 0; i < ns.nodes.size(); ++i)
        input.candidates.push_back(
            {ns.nodes[i], ns.costs[i], scorer.features(ns.nodes[i])});
      stored.push_back(std::move(input));
    }

    std::vector<double> grad(opts.feature_dim, 0.0);
    const double round_loss =
        replay_round_loss(stored, loss, res.theta, opts.score_clip, &grad);
    bool finite = std::isfinite(round_loss);
    for (double g : grad)
      if (!std::isfinite(g)) finite = false;
    if (finite) {
      optimizer.update(res.theta, grad);
    } else {
      ++res.aborted_rounds;
    }

    const double terminal_cost = beam_cost(ts.table, traj.beams.back());
    const SpaceBounds sb = space_bounds(ts.space, opts.k);
    res.u_bound = std::max(res.u_bound,
                           loss_bound_u(opts.loss_name, ts.space.depth, sb.n_max,
                                        sb.cost_range, opts.score_clip, opts.k));
    res.tracker.add_round(round_loss, terminal_cost, traj.cost_increase_count,
                          traj.pure_rollin, opts.strategy.kind == Strategy::Kind::Oracle,
                          std::move(stored));

    MetricsRow row;
    row.round = t + 1;
    row.surrogate_loss = round_loss;
    row.terminal_cost = terminal_cost;
    row.cost_increases = traj.cost_increase_count;
    row.pure_rollin = traj.pure_rollin ? 1 : 0;
    row.alpha_hat = res.tracker.alpha_hat();
    row.eta = azuma_eta(res.u_bound, opts.delta, t + 1);
    if ((t + 1) % regret_interval == 0) {
      const EmpiricalRegret er = empirical_regret(res.tracker, loss, opts.loss_name,
                                                  res.theta, opts.score_clip,
                                                  opts.comparator_iters);
      row.gamma_hat = er.gamma_hat;
      res.final_gamma_hat = er.gamma_hat;
    }
    if (opts.timing) {
      row.wallclock_ms = std::chrono::duration<double, std::milli>(
                             std::chrono::steady_clock::now() - round_start)
                             .count();
    }
    res.metrics.push_back(row);

    if (!validation.empty() && ((t + 1) % val_interval == 0 || t + 1 == rounds)) {
      const double cost = decode_mean_cost(validation, factory, res.theta, opts.feature_dim,
                                           opts.feature_seed, opts.score_clip, opts.k);
      res.final_validation_cost = cost;
      if (!(cost >= res.best_validation_cost)) {
        res.best_validation_cost = cost;
        res.best_theta = res.theta;
      }
    }
  }
  if (res.best_theta.empty()) {
    res.best_theta = res.theta;
    res.best_validation_cost = res.final_validation_cost;
  }
  res.eta = azuma_eta(res.u_bound, opts.delta, rounds);
  if (opts.timing) {
    res.wall_ms_total = std::chrono::duration<double, std::milli>(
                            std::chrono::steady_clock::now() - run_start)
                            .count();
  }
  if (!res.final_gamma_hat.has_value() && rounds % regret_interval != 0) {
    const EmpiricalRegret er = empirical_regret(res.tracker, loss, opts.loss_name, res.theta,
                                                opts.score_clip, opts.comparator_iters);
    res.final_gamma_hat = er.gamma_hat;
  }
  return res;
}

// Five-point geometric grid around a pilot step size; returns the step with
// the lowest final decoding cost on the validation set.
inline double tune_ogd_step(const std::vector<Example>& train,
                            const std::vector<Example>& validation,
                            const SpaceFactory& factory, LearnOptions opts,
                            double pilot = 0.5) {
  const double factors[] = {0.1, 0.5, 1.0, 2.0, 10.0};
  double best_step = pilot;
  double best_cost = std::numeric_limits<double>::infinity();
  for (double f : factors) {
    opts.optimizer = OnlineOptimizer::ogd(pilot * f);
    LearnResult r = learn(train, validation, factory, opts);
    const double cost =
        std::isnan(r.final_validation_cost) ? r.tracker.mean_terminal_cost()
                                            : r.final_validation_cost;
    if (cost < best_cost) {
      best_cost = cost;
      best_step = pilot * f;
    }
  }
  return best_step;
}

}  // namespace beamlearn
