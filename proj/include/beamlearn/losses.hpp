#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <string>
#include <vector>

#include "beamlearn/errors.hpp"
#include "beamlearn/scoring.hpp"
#include "beamlearn/search_space.hpp"

namespace beamlearn {

// Scores and completion costs of the candidate set A_b of one beam, listed in
// tie-break order (ascending NodeId). k is the beam capacity in force.
struct NeighborScoring {
  std::vector<double> scores;
  std::vector<double> costs;
  int k = 1;
  std::vector<NodeId> nodes;  // optional; empty for abstract instances
};

inline void validate_input(const NeighborScoring& in) {
  const std::size_t n = in.scores.size();
  if (n == 0) throw PreconditionError("loss input: no candidates");
  if (in.costs.size() != n) throw PreconditionError("loss input: scores/costs size mismatch");
  if (in.k < 1) throw PreconditionError("loss input: k must be >= 1");
  for (double s : in.scores)
    if (!std::isfinite(s)) throw PreconditionError("loss input: non-finite score");
  for (double c : in.costs)
    if (!std::isfinite(c)) throw PreconditionError("loss input: non-finite cost");
}

// by_cost[r]: candidate index of rank r in ascending cost (sigma*).
// by_score[r]: candidate index of rank r in descending score (sigma_hat).
// Ties keep candidate order.
struct Permutations {
  std::vector<int> by_cost;
  std::vector<int> by_score;
};

inline Permutations sort_perms(const NeighborScoring& in) {
  validate_input(in);
  const int n = static_cast<int>(in.scores.size());
  Permutations p;
  p.by_cost.resize(n);
  p.by_score.resize(n);
  std::iota(p.by_cost.begin(), p.by_cost.end(), 0);
  std::iota(p.by_score.begin(), p.by_score.end(), 0);
  std::sort(p.by_cost.begin(), p.by_cost.end(), [&](int a, int b) {
    if (in.costs[a] != in.costs[b]) return in.costs[a] < in.costs[b];
    return a < b;
  });
  std::sort(p.by_score.begin(), p.by_score.end(), [&](int a, int b) {
    if (in.scores[a] != in.scores[b]) return in.scores[a] > in.scores[b];
    return a < b;
  });
  return p;
}

struct LossResult {
  double value = 0;
  std::vector<double> grad_scores;
};

namespace detail {

inline int kprime(const NeighborScoring& in) {
  return std::min<int>(in.k, static_cast<int>(in.scores.size()));
}

inline double logsumexp(const std::vector<double>& xs) {
  double m = xs[0];
  for (double x : xs) m = std::max(m, x);
  double s = 0;
  for (double x : xs) s += std::exp(x - m);
  return m + std::log(s);
}

}  // namespace detail

// max(0, s_{sigma_hat(1)} - s_{sigma*(1)}); penalizes any candidate outscoring
// the best one. Convex: s_{sigma_hat(1)} is the max over candidates.
inline LossResult perceptron_first(const NeighborScoring& in) {
  const auto p = sort_perms(in);
  LossResult r;
  r.grad_scores.assign(in.scores.size(), 0.0);
  const int hat = p.by_score[0];
  const int star = p.by_cost[0];
  const double v = in.scores[hat] - in.scores[star];
  if (v > 0) {
    r.value = v;
    r.grad_scores[hat] += 1;
    r.grad_scores[star] -= 1;
  }
  return r;
}

// max(0, s_{sigma_hat(k')} - s_{sigma*(1)}): the best candidate must not fall
// below the last beam slot.
inline LossResult perceptron_last(const NeighborScoring& in) {
  const auto p = sort_perms(in);
  LossResult r;
  r.grad_scores.assign(in.scores.size(), 0.0);
  const int hat = p.by_score[detail::kprime(in) - 1];
  const int star = p.by_cost[0];
  const double v = in.scores[hat] - in.scores[star];
  if (v > 0) {
    r.value = v;
    r.grad_scores[hat] += 1;
    r.grad_scores[star] -= 1;
  }
  return r;
}

// max(0, 1 + s_{sigma_hat(k')} - s_{sigma*(1)}): same comparison with a unit
// margin.
inline LossResult margin_last(const NeighborScoring& in) {
  const auto p = sort_perms(in);
  LossResult r;
  r.grad_scores.assign(in.scores.size(), 0.0);
  const int hat = p.by_score[detail::kprime(in) - 1];
  const int star = p.by_cost[0];
  const double v = 1 + in.scores[hat] - in.scores[star];
  if (v > 0) {
    r.value = v;
    r.grad_scores[hat] += 1;
    r.grad_scores[star] -= 1;
  }
  return r;
}

// Margin hinge weighted by the cost gap of the last beam slot; the weight is
// clamped at zero so score ties cannot produce a negative loss.
inline LossResult cs_margin_last(const NeighborScoring& in) {
  const auto p = sort_perms(in);
  LossResult r;
  r.grad_scores.assign(in.scores.size(), 0.0);
  const int hat = p.by_score[detail::kprime(in) - 1];
  const int star = p.by_cost[0];
  const double w = std::max(0.0, in.costs[hat] - in.costs[star]);
  const double hinge = 1 + in.scores[hat] - in.scores[star];
  if (hinge > 0) {
    r.value = w * hinge;
    r.grad_scores[hat] += w;
    r.grad_scores[star] -= w;
  }
  return r;
}

// max(0, delta_{k+1}, ..., delta_n) with
// delta_j = (c_{sigma*(j)} - c_{sigma*(1)}) (s_{sigma*(j)} - s_{sigma*(1)} + 1).
// Upper-bounds the realized transition cost; identically 0 when k >= n.
inline LossResult upper_bound(const NeighborScoring& in) {
  const auto p = sort_perms(in);
  const int n = static_cast<int>(in.scores.size());
  LossResult r;
  r.grad_scores.assign(in.scores.size(), 0.0);
  if (in.k >= n) return r;
  const int star = p.by_cost[0];
  double best = 0;
  int best_rank = -1;
  for (int j = in.k; j < n; ++j) {
    const int cand = p.by_cost[j];
    const double delta =
        (in.costs[cand] - in.costs[star]) * (in.scores[cand] - in.scores[star] + 1);
    if (delta > best) {
      best = delta;
      best_rank = j;
    }
  }
  if (best_rank >= 0) {
    const int cand = p.by_cost[best_rank];
    const double w = in.costs[cand] - in.costs[star];
    r.value = best;
    r.grad_scores[cand] += w;
    r.grad_scores[star] -= w;
  }
  return r;
}

// -s_{sigma*(1)} + log sum_{i in I} exp(s_i), I = {sigma*(1)} union beam.
inline LossResult log_beam(const NeighborScoring& in) {
  const auto p = sort_perms(in);
  LossResult r;
  r.grad_scores.assign(in.scores.size(), 0.0);
  const int star = p.by_cost[0];
  std::vector<int> members(p.by_score.begin(), p.by_score.begin() + detail::kprime(in));
  members.push_back(star);
  std::sort(members.begin(), members.end());
  members.erase(std::unique(members.begin(), members.end()), members.end());
  std::vector<double> s;
  s.reserve(members.size());
  for (int i : members) s.push_back(in.scores[i]);
  const double lse = detail::logsumexp(s);
  r.value = -in.scores[star] + lse;
  for (std::size_t m = 0; m < members.size(); ++m)
    r.grad_scores[members[m]] += std::exp(s[m] - lse);
  r.grad_scores[star] -= 1;
  return r;
}

// -s_{sigma*(1)} + log sum over all candidates: log loss on the whole
// neighborhood. At k = 1 this is greedy log-likelihood.
inline LossResult log_neighbors(const NeighborScoring& in) {
  const auto p = sort_perms(in);
  LossResult r;
  r.grad_scores.assign(in.scores.size(), 0.0);
  const int star = p.by_cost[0];
  const double lse = detail::logsumexp(in.scores);
  r.value = -in.scores[star] + lse;
  for (std::size_t i = 0; i < in.scores.size(); ++i)
    r.grad_scores[i] += std::exp(in.scores[i] - lse);
  r.grad_scores[star] -= 1;
  return r;
}

// -s_{sigma*(1)} + max over beam slots of (c + s): cost-augmented margin over
// the beam, kept exactly as printed (no clamp on the augmented max).
inline LossResult cs_margin_beam(const NeighborScoring& in) {
  const auto p = sort_perms(in);
  LossResult r;
  r.grad_scores.assign(in.scores.size(), 0.0);
  const int star = p.by_cost[0];
  int arg = p.by_score[0];
  double best = in.costs[arg] + in.scores[arg];
  for (int rnk = 1; rnk < detail::kprime(in); ++rnk) {
    const int cand = p.by_score[rnk];
    const double aug = in.costs[cand] + in.scores[cand];
    if (aug > best) {
      best = aug;
      arg = cand;
    }
  }
  r.value = -in.scores[star] + best;
  r.grad_scores[arg] += 1;
  r.grad_scores[star] -= 1;
  return r;
}

// Softmax relaxation of cs_margin_beam.
inline LossResult softmax_margin_beam(const NeighborScoring& in) {
  const auto p = sort_perms(in);
  LossResult r;
  r.grad_scores.assign(in.scores.size(), 0.0);
  const int star = p.by_cost[0];
  const int kp = detail::kprime(in);
  std::vector<double> aug(kp);
  for (int rnk = 0; rnk < kp; ++rnk) {
    const int cand = p.by_score[rnk];
    aug[rnk] = in.costs[cand] + in.scores[cand];
  }
  const double lse = detail::logsumexp(aug);
  r.value = -in.scores[star] + lse;
  for (int rnk = 0; rnk < kp; ++rnk)
    r.grad_scores[p.by_score[rnk]] += std::exp(aug[rnk] - lse);
  r.grad_scores[star] -= 1;
  return r;
}

enum class WeightedPairsMode { All, Bipartite, Hybrid };

// Sum over rank pairs (i, j), i before j in cost order, of
// (c_{sigma*(j)} - c_{sigma*(i)}) max(0, s_{sigma*(j)} - s_{sigma*(i)} + 1).
//   All: every pair; Bipartite: i inside the would-be beam, j outside;
//   Hybrid: i inside, j anywhere later.
inline LossResult weighted_pairs(const NeighborScoring& in, WeightedPairsMode mode) {
  const auto p = sort_perms(in);
  const int n = static_cast<int>(in.scores.size());
  const int kp = detail::kprime(in);
  LossResult r;
  r.grad_scores.assign(in.scores.size(), 0.0);
  for (int i = 0; i < n; ++i) {
    if (mode != WeightedPairsMode::All && i >= kp) break;
    const int jlo = (mode == WeightedPairsMode::Bipartite) ? std::max(i + 1, kp) : i + 1;
    for (int j = jlo; j < n; ++j) {
      const int a = p.by_cost[i];
      const int b = p.by_cost[j];
      const double w = in.costs[b] - in.costs[a];
      const double hinge = in.scores[b] - in.scores[a] + 1;
      if (hinge > 0) {
        r.value += w * hinge;
        r.grad_scores[b] += w;
        r.grad_scores[a] -= w;
      }
    }
  }
  return r;
}

inline LossResult wp_all(const NeighborScoring& in) {
  return weighted_pairs(in, WeightedPairsMode::All);
}
inline LossResult wp_bipartite(const NeighborScoring& in) {
  return weighted_pairs(in, WeightedPairsMode::Bipartite);
}
inline LossResult wp_hybrid(const NeighborScoring& in) {
  return weighted_pairs(in, WeightedPairsMode::Hybrid);
}

using LossFn = std::function<LossResult(const NeighborScoring&)>;

inline const std::vector<std::string>& loss_catalog() {
  static const std::vector<std::string> names = {
      "perceptron_first", "perceptron_last", "margin_last",    "cs_margin_last",
      "upper_bound",      "log_beam",        "log_neighbors",  "cs_margin_beam",
      "softmax_margin_beam", "wp_all",       "wp_bipartite",   "wp_hybrid",
  };
  return names;
}

inline LossFn loss_by_name(const std::string& name) {
  if (name == "perceptron_first") return perceptron_first;
  if (name == "perceptron_last") return perceptron_last;
  if (name == "margin_last") return margin_last;
  if (name == "cs_margin_last") return cs_margin_last;
  if (name == "upper_bound") return upper_bound;
  if (name == "log_beam") return log_beam;
  if (name == "log_neighbors") return log_neighbors;
  if (name == "cs_margin_beam") return cs_margin_beam;
  if (name == "softmax_margin_beam") return softmax_margin_beam;
  if (name == "wp_all") return wp_all;
  if (name == "wp_bipartite") return wp_bipartite;
  if (name == "wp_hybrid") return wp_hybrid;
  throw ConfigError("unknown loss: " + name);
}

// Convexity in the scores. The three main losses are convex by construction;
// the weighted-pairs family indexes only by the cost order, which does not
// depend on the scores, so each term is a hinge of an affine function.
inline bool loss_is_convex(const std::string& name) {
  return name == "perceptron_first" || name == "upper_bound" || name == "log_neighbors" ||
         name == "wp_all" || name == "wp_bipartite" || name == "wp_hybrid";
}

// Chain rule through the linear scorer: sum_i grad_scores[i] * phi(node_i).
inline void accumulate_loss_gradient(const LossResult& res, const std::vector<NodeId>& candidates,
                                     const LinearScorer& scorer, std::vector<double>& out) {
  if (res.grad_scores.size() != candidates.size())
    throw PreconditionError("gradient/candidate size mismatch");
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    const double g = res.grad_scores[i];
    if (g == 0) continue;
    const FeatureVector phi = scorer.score_gradient(candidates[i]);
    for (const auto& [idx, val] : phi.entries) {
      if (idx < 0 || static_cast<std::size_t>(idx) >= out.size())
        throw PreconditionError("feature index out of gradient range");
      out[static_cast<std::size_t>(idx)] += g * val;
    }
  }
}

inline std::vector<double> loss_gradient_wrt_params(const LossResult& res,
                                                    const std::vector<NodeId>& candidates,
                                                    const LinearScorer& scorer, std::size_t p) {
  std::vector<double> grad(p, 0.0);
  accumulate_loss_gradient(res, candidates, scorer, grad);
  return grad;
}

}  // namespace beamlearn
