#pragma once

#include <cmath>
#include <functional>
#include <limits>
#include <ostream>
#include <string>
#include <vector>

#include "beamlearn/beam.hpp"
#include "beamlearn/errors.hpp"
#include "beamlearn/losses.hpp"
#include "beamlearn/rng.hpp"
#include "beamlearn/search_space.hpp"

// Reference implementations kept deliberately independent of the library's
// main code paths: plain recursion and insertion sorts instead of the
// shared helpers, so agreement between the two is meaningful.

namespace beamlearn {

inline double brute_force_best_terminal(const SearchSpace& space, NodeId v) {
  if (space.size() > 100000) throw PreconditionError("space too large for brute force");
  if (space.is_terminal(v)) return space.terminal_cost(v);
  double best = std::numeric_limits<double>::infinity();
  for (NodeId w : space.neighbors_of(v))
    best = std::min(best, brute_force_best_terminal(space, w));
  return best;
}

// Index order by (score descending, index ascending) via insertion sort.
inline std::vector<std::size_t> insertion_rank_by_score(const std::vector<double>& scores) {
  std::vector<std::size_t> order;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    std::size_t pos = 0;
    while (pos < order.size() && scores[order[pos]] >= scores[i]) ++pos;
    order.insert(order.begin() + static_cast<std::ptrdiff_t>(pos), i);
  }
  return order;
}

// Cost change incurred by keeping the top-k scored candidates: best retained
// completion cost minus best available completion cost.
inline double realized_transition_cost(const std::vector<double>& costs,
                                       const std::vector<double>& scores, int k) {
  if (costs.empty() || costs.size() != scores.size())
    throw PreconditionError("bad transition cost inputs");
  const std::vector<std::size_t> order = insertion_rank_by_score(scores);
  const std::size_t kp = std::min<std::size_t>(static_cast<std::size_t>(k), costs.size());
  double kept = std::numeric_limits<double>::infinity();
  for (std::size_t r = 0; r < kp; ++r) kept = std::min(kept, costs[order[r]]);
  double avail = std::numeric_limits<double>::infinity();
  for (double c : costs) avail = std::min(avail, c);
  return kept - avail;
}

inline double realized_transition_cost(const NeighborScoring& in) {
  return realized_transition_cost(in.costs, in.scores, in.k);
}

// Full beam decode written against the raw space only: linear-scan argmax,
// duplicate filtering by linear membership tests, insertion-sorted pruning.
inline double brute_force_policy_cost(const SearchSpace& space,
                                      const std::function<double(NodeId)>& score, int k) {
  if (k < 1) throw PreconditionError("beam width must be >= 1");
  std::vector<NodeId> beam{space.initial_node()};
  for (int guard = 0; guard <= space.depth + 1; ++guard) {
    NodeId top = beam[0];
    for (NodeId v : beam) {
      if (score(v) > score(top) || (score(v) == score(top) && v < top)) top = v;
    }
    if (space.is_terminal(top)) return space.terminal_cost(top);

    std::vector<NodeId> cand;
    for (NodeId v : beam) {
      for (NodeId w : space.neighbors_of(v)) {
        bool seen = false;
        for (NodeId u : cand) seen = seen || (u == w);
        if (!seen) cand.push_back(w);
      }
    }
    std::vector<double> cand_scores;
    cand_scores.reserve(cand.size());
    for (NodeId v : cand) cand_scores.push_back(score(v));
    std::vector<std::size_t> order;
    for (std::size_t i = 0; i < cand.size(); ++i) {
      std::size_t pos = 0;
      while (pos < order.size()) {
        const std::size_t j = order[pos];
        if (cand_scores[j] > cand_scores[i] ||
            (cand_scores[j] == cand_scores[i] && cand[j] < cand[i]))
          ++pos;
        else
          break;
      }
      order.insert(order.begin() + static_cast<std::ptrdiff_t>(pos), i);
    }
    if (order.empty()) throw StructuralError("no candidates to expand");
    if (space.is_terminal(cand[order[0]])) {
      beam = {cand[order[0]]};
      continue;
    }
    std::vector<NodeId> next;
    for (std::size_t r = 0; r < order.size() && next.size() < static_cast<std::size_t>(k); ++r)
      if (!space.is_terminal(cand[order[r]])) next.push_back(cand[order[r]]);
    if (next.empty()) throw StructuralError("only terminal candidates below the top");
    beam = std::move(next);
  }
  throw StructuralError("decode did not reach a terminal");
}

// Random depth-uniform tree with branching in [1, max_branch] and uniform
// terminal costs in [cost_lo, cost_hi].
inline SearchSpace random_tree_space(CounterRng& rng, int depth, int max_branch,
                                     double cost_lo = 0.0, double cost_hi = 10.0) {
  if (depth < 1 || max_branch < 1) throw PreconditionError("bad random space shape");
  SearchSpace s;
  s.initial = 0;
  s.depth = depth;
  const double nan = std::numeric_limits<double>::quiet_NaN();
  s.neighbors.push_back({});
  s.terminal_costs.push_back(depth == 0 ? 0.0 : nan);
  std::vector<int> depth_of{0};
  for (std::size_t head = 0; head < s.neighbors.size(); ++head) {
    if (depth_of[head] == depth) continue;
    const int branch = 1 + static_cast<int>(rng.next_below(
                               static_cast<std::uint64_t>(max_branch)));
    for (int i = 0; i < branch; ++i) {
      const NodeId child = static_cast<NodeId>(s.neighbors.size());
      s.neighbors.push_back({});
      const bool leaf = depth_of[head] + 1 == depth;
      s.terminal_costs.push_back(
          leaf ? cost_lo + rng.next_double() * (cost_hi - cost_lo) : nan);
      depth_of.push_back(depth_of[head] + 1);
      s.neighbors[head].push_back(child);
    }
  }
  return s;
}

struct WitnessResult {
  double at_a = 0;
  double at_b = 0;
  double at_mid = 0;
  bool violates_convexity = false;
};

// Perceptron-style surrogate gated on whether the induced transition
// actually increased the completion cost. Zero at both endpoints, positive
// at their midpoint, so not convex in the scores.
inline WitnessResult witness_conditional_perceptron() {
  NeighborScoring ns;
  ns.costs = {0.0, 1.0, 1.0};
  ns.nodes = {0, 1, 2};
  ns.k = 2;
  auto value = [&](std::vector<double> s) {
    ns.scores = std::move(s);
    if (realized_transition_cost(ns) <= 0) return 0.0;
    return perceptron_first(ns).value;
  };
  WitnessResult w;
  w.at_a = value({1.0, 10.0, 0.0});
  w.at_b = value({1.0, 0.0, 10.0});
  w.at_mid = value({1.0, 5.0, 5.0});
  w.violates_convexity = w.at_mid > 0.5 * (w.at_a + w.at_b) + 1e-12;
  return w;
}

// Margin on the last kept slot, active only when the identity of that slot's
// occupant differs from the cost-optimal one; the gating makes the midpoint
// strictly worse than both endpoints.
inline WitnessResult witness_last_slot_hinge() {
  NeighborScoring ns;
  ns.costs = {0.0, 1.0, 2.0};
  ns.nodes = {0, 1, 2};
  ns.k = 2;
  auto value = [&](std::vector<double> s) {
    ns.scores = std::move(s);
    const std::vector<std::size_t> by_score = insertion_rank_by_score(ns.scores);
    std::vector<std::size_t> by_cost(ns.costs.size());
    for (std::size_t i = 0; i < by_cost.size(); ++i) by_cost[i] = i;
    for (std::size_t i = 1; i < by_cost.size(); ++i) {
      std::size_t j = i;
      while (j > 0 && ns.costs[by_cost[j - 1]] > ns.costs[by_cost[j]]) {
        std::swap(by_cost[j - 1], by_cost[j]);
        --j;
      }
    }
    const std::size_t kp = std::min<std::size_t>(static_cast<std::size_t>(ns.k),
                                                 ns.costs.size());
    const std::size_t pred = by_score[kp - 1];
    const std::size_t gold = by_cost[kp - 1];
    if (pred == gold) return 0.0;
    return std::max(0.0, ns.scores[pred] - ns.scores[gold] + 1.0);
  };
  WitnessResult w;
  w.at_a = value({2.0, 1.0, 0.0});
  w.at_b = value({2.0, 4.0, 0.0});
  w.at_mid = value({2.0, 2.5, 0.0});
  w.violates_convexity = w.at_mid > 0.5 * (w.at_a + w.at_b) + 1e-12;
  return w;
}

// Quick self-check suite; prints one line per check and returns overall
// success. The loss argument lets callers probe a variant against the
// pruning-cost guarantee (a correct implementation never goes below it).
inline bool check_report(std::ostream& out, const LossFn& bound_loss = upper_bound,
                         long draws = 2000, std::uint64_t seed = 17) {
  bool all_ok = true;
  auto report = [&](const std::string& name, bool ok) {
    out << (ok ? "[ok]   " : "[FAIL] ") << name << "\n";
    all_ok = all_ok && ok;
  };

  {
    CounterRng rng(seed, 1);
    bool ok = true;
    for (long i = 0; i < draws && ok; ++i) {
      const int n = 1 + static_cast<int>(rng.next_below(8));
      const int k = 1 + static_cast<int>(rng.next_below(4));
      NeighborScoring ns;
      ns.k = k;
      for (int j = 0; j < n; ++j) {
        ns.nodes.push_back(j);
        ns.costs.push_back(std::floor(rng.next_double() * 5));
        ns.scores.push_back(std::floor(rng.next_double() * 7) - 3);
      }
      ok = bound_loss(ns).value >= realized_transition_cost(ns) - 1e-12;
    }
    report("pruning bound dominates realized transition cost", ok);
  }

  {
    CounterRng rng(seed, 2);
    bool ok = true;
    for (int i = 0; i < 50 && ok; ++i) {
      const int depth = 1 + static_cast<int>(rng.next_below(4));
      SearchSpace s = random_tree_space(rng, depth, 3);
      s.validate();
      const CompletionCostTable table = optimal_completion_cost(s);
      for (NodeId v = 0; v < static_cast<NodeId>(s.size()); ++v)
        ok = ok && std::abs(table.at(v) - brute_force_best_terminal(s, v)) < 1e-12;
      auto score = [&](NodeId v) {
        return mix64(static_cast<std::uint64_t>(v), seed) % 97 / 97.0;
      };
      for (int k = 1; k <= 4 && ok; ++k) {
        const NodeId leaf = beam_search(s, k, score);
        ok = s.terminal_cost(leaf) == brute_force_policy_cost(s, score, k);
      }
    }
    report("beam decode matches reference simulation", ok);
  }

  {
    const WitnessResult w1 = witness_conditional_perceptron();
    report("gated perceptron witness breaks convexity", w1.violates_convexity &&
                                                            w1.at_a == 0 && w1.at_b == 0);
    const WitnessResult w2 = witness_last_slot_hinge();
    report("last-slot hinge witness breaks convexity", w2.violates_convexity &&
                                                           w2.at_a == 0 && w2.at_b == 0);
  }

  return all_ok;
}

}  // namespace beamlearn
