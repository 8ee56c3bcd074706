#pragma once

#include <algorithm>
#include <concepts>
#include <type_traits>
#include <vector>

#include "beamlearn/errors.hpp"
#include "beamlearn/search_space.hpp"

namespace beamlearn {

template <class F>
concept ScoreFn = std::is_invocable_r_v<double, F, NodeId>;

// Members are kept in selection order: descending score, ascending NodeId.
struct Beam {
  std::vector<NodeId> members;

  static Beam singleton(NodeId v) { return Beam{{v}}; }
  std::size_t size() const { return members.size(); }
};

struct ScoredCandidate {
  NodeId node = 0;
  double score = 0;
};

struct BeamTransitionRecord {
  Beam from;
  Beam to;
  double cost_delta = 0;
  bool cost_increase = false;
};

inline bool score_order(const ScoredCandidate& a, const ScoredCandidate& b) {
  if (a.score != b.score) return a.score > b.score;
  return a.node < b.node;
}

// Top-min(k, n) candidates under descending score, ties broken by ascending
// NodeId. The returned members keep that order.
inline Beam best(std::vector<ScoredCandidate> candidates, int k) {
  if (candidates.empty()) throw PreconditionError("best: no candidates");
  if (k < 1) throw PreconditionError("best: k must be >= 1");
  std::sort(candidates.begin(), candidates.end(), score_order);
  const std::size_t take = std::min<std::size_t>(candidates.size(), static_cast<std::size_t>(k));
  Beam b;
  b.members.reserve(take);
  for (std::size_t i = 0; i < take; ++i) b.members.push_back(candidates[i].node);
  return b;
}

template <SpaceLike S>
bool is_terminal_beam(const S& space, const Beam& b) {
  return b.size() == 1 && space.is_terminal(b.members[0]);
}

// A_b: union of member neighborhoods, deduplicated, ascending NodeId.
template <SpaceLike S>
std::vector<NodeId> expand(const S& space, const Beam& b) {
  if (b.members.empty()) throw PreconditionError("expand: empty beam");
  if (is_terminal_beam(space, b)) throw PreconditionError("expand: terminal beam");
  std::vector<NodeId> out;
  for (NodeId v : b.members)
    for (NodeId c : space.neighbors_of(v)) out.push_back(c);
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

template <SpaceLike S, ScoreFn F>
std::vector<ScoredCandidate> expand_scored(const S& space, const Beam& b, F&& score) {
  std::vector<ScoredCandidate> scored;
  for (NodeId v : expand(space, b)) scored.push_back({v, score(v)});
  std::sort(scored.begin(), scored.end(), score_order);
  return scored;
}

// One beam transition. If the top-scored candidate is terminal the result is
// that singleton; otherwise the top-k non-terminal candidates.
template <SpaceLike S, ScoreFn F>
Beam policy_step(const S& space, const Beam& b, int k, F&& score) {
  if (k < 1) throw PreconditionError("policy_step: k must be >= 1");
  const auto scored = expand_scored(space, b, score);
  if (space.is_terminal(scored[0].node)) return Beam::singleton(scored[0].node);
  Beam next;
  for (const auto& cand : scored) {
    if (space.is_terminal(cand.node)) continue;
    next.members.push_back(cand.node);
    if (next.members.size() == static_cast<std::size_t>(k)) break;
  }
  if (next.members.empty())
    throw StructuralError("policy_step: mixed terminal layer in a depth-uniform tree");
  return next;
}

// Highest-scoring beam member (score desc, NodeId asc).
template <ScoreFn F>
NodeId top_member(const Beam& b, F&& score) {
  if (b.members.empty()) throw PreconditionError("top_member: empty beam");
  NodeId arg = b.members[0];
  double s = score(arg);
  for (std::size_t i = 1; i < b.members.size(); ++i) {
    const double si = score(b.members[i]);
    if (si > s || (si == s && b.members[i] < arg)) {
      arg = b.members[i];
      s = si;
    }
  }
  return arg;
}

// Runs the beam policy from the root until it commits to a terminal, which on
// a depth-h tree takes exactly h transitions.
template <SpaceLike S, ScoreFn F>
NodeId beam_search(const S& space, int k, F&& score) {
  Beam b = Beam::singleton(space.initial_node());
  for (long iter = 0; iter < (1L << 22); ++iter) {
    const NodeId top = top_member(b, score);
    if (space.is_terminal(top)) return top;
    b = policy_step(space, b, k, score);
  }
  throw StructuralError("beam_search: no terminal reached (space not depth-bounded?)");
}

inline double beam_cost(const CompletionCostTable& table, const Beam& b) {
  if (b.members.empty()) throw PreconditionError("beam_cost: empty beam");
  double c = table.at(b.members[0]);
  for (std::size_t i = 1; i < b.members.size(); ++i) c = std::min(c, table.at(b.members[i]));
  return c;
}

// c(b, b2) = c*(b2) - c*(b); nonnegative for any successor beam in the tree.
inline double transition_cost(const CompletionCostTable& table, const Beam& b, const Beam& b2) {
  return beam_cost(table, b2) - beam_cost(table, b);
}

inline BeamTransitionRecord record_transition(const CompletionCostTable& table, const Beam& b,
                                              const Beam& b2) {
  const double delta = transition_cost(table, b, b2);
  return BeamTransitionRecord{b, b2, delta, delta > 0};
}

}  // namespace beamlearn
