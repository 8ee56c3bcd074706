#pragma once

#include <string>
#include <vector>

#include "beamlearn/beam.hpp"
#include "beamlearn/errors.hpp"
#include "beamlearn/losses.hpp"
#include "beamlearn/rng.hpp"
#include "beamlearn/search_space.hpp"

namespace beamlearn {

// How trajectories react to a learned step that increases the beam cost:
//   Oracle    roll in with the oracle policy only
//   Stop      keep the increased beam and halt collection
//   Reset     replace the step with the oracle singleton
//   Continue  keep going with the learned policy
//   Interpolated  flip a coin per step: oracle with probability beta
struct Strategy {
  enum class Kind { Oracle, Stop, Reset, Continue, Interpolated };
  Kind kind = Kind::Continue;
  double beta = 0;

  static Strategy oracle() { return {Kind::Oracle, 0}; }
  static Strategy stop() { return {Kind::Stop, 0}; }
  static Strategy reset() { return {Kind::Reset, 0}; }
  static Strategy go_on() { return {Kind::Continue, 0}; }
  static Strategy interpolated(double beta) {
    if (!(beta >= 0 && beta <= 1))
      throw ConfigError("interpolation beta must be in [0, 1]");
    return {Kind::Interpolated, beta};
  }

  static Strategy parse(const std::string& text) {
    if (text == "oracle") return oracle();
    if (text == "stop") return stop();
    if (text == "reset") return reset();
    if (text == "continue") return go_on();
    if (text.rfind("interp:", 0) == 0) {
      double beta = 0;
      try {
        std::size_t used = 0;
        beta = std::stod(text.substr(7), &used);
        if (used != text.size() - 7) throw std::invalid_argument("trailing text");
      } catch (const std::exception&) {
        throw ConfigError("malformed interpolation strategy: " + text);
      }
      return interpolated(beta);
    }
    throw ConfigError("unknown strategy: " + text);
  }

  std::string to_string() const {
    switch (kind) {
      case Kind::Oracle: return "oracle";
      case Kind::Stop: return "stop";
      case Kind::Reset: return "reset";
      case Kind::Continue: return "continue";
      case Kind::Interpolated: return "interp:" + std::to_string(beta);
    }
    return "?";
  }
};

struct Trajectory {
  std::vector<Beam> beams;
  std::vector<NeighborScoring> loss_inputs;  // one per non-final beam
  bool stopped_early = false;
  int cost_increase_count = 0;
  bool pure_rollin = true;
};

inline bool detect_cost_increase(const CompletionCostTable& table, const Beam& b,
                                 const Beam& b2) {
  return transition_cost(table, b, b2) > 0;
}

// Oracle beam transition: rank A_b by -c*, NodeId tie-break.
template <SpaceLike S>
Beam oracle_step(const S& space, const CompletionCostTable& table, const Beam& b, int k) {
  return policy_step(space, b, k, [&table](NodeId v) { return -table.at(v); });
}

// Rolls one trajectory from the root. Losses are recorded at every visited
// non-final beam with the learned scores, whatever policy actually drove the
// step. cost_increase_count counts transitions where the learned proposal
// increased the beam cost, before any intervention. pure_rollin is true when
// the loss-bearing prefix (all transitions but the last) saw no intervention:
// no early cost increase under stop/reset/continue, no early oracle coin
// under interpolated, and vacuously false under oracle.
template <SpaceLike S, ScoreFn F>
Trajectory beam_trajectory(const S& space, const CompletionCostTable& table, F&& score, int k,
                           const Strategy& strategy, CounterRng& rng) {
  if (k < 1) throw PreconditionError("beam_trajectory: k must be >= 1");
  const int depth = space.depth;
  Trajectory traj;
  traj.pure_rollin = strategy.kind != Strategy::Kind::Oracle;
  Beam b = Beam::singleton(space.initial_node());
  traj.beams.push_back(b);

  for (int step = 1; !is_terminal_beam(space, b); ++step) {
    if (step > depth + 1) throw StructuralError("trajectory exceeded space depth");
    const auto scored = expand_scored(space, b, score);
    NeighborScoring input;
    input.k = k;
    input.nodes.reserve(scored.size());
    // expand_scored sorts by score; loss inputs keep NodeId (tie-break) order.
    {
      std::vector<ScoredCandidate> by_id(scored);
      std::sort(by_id.begin(), by_id.end(),
                [](const ScoredCandidate& a, const ScoredCandidate& c) { return a.node < c.node; });
      for (const auto& cand : by_id) {
        input.nodes.push_back(cand.node);
        input.scores.push_back(cand.score);
        input.costs.push_back(table.at(cand.node));
      }
    }
    traj.loss_inputs.push_back(std::move(input));

    const bool in_window = step <= depth - 1;
    Beam next;
    bool halt = false;
    switch (strategy.kind) {
      case Strategy::Kind::Oracle:
        next = oracle_step(space, table, b, k);
        break;
      case Strategy::Kind::Interpolated: {
        const bool take_oracle = rng.next_bernoulli(strategy.beta);
        if (take_oracle) {
          if (in_window) traj.pure_rollin = false;
          next = oracle_step(space, table, b, k);
        } else {
          next = policy_step(space, b, k, score);
          if (detect_cost_increase(table, b, next)) ++traj.cost_increase_count;
        }
        break;
      }
      default: {
        next = policy_step(space, b, k, score);
        if (detect_cost_increase(table, b, next)) {
          ++traj.cost_increase_count;
          if (in_window) traj.pure_rollin = false;
          if (strategy.kind == Strategy::Kind::Stop) {
            halt = true;
          } else if (strategy.kind == Strategy::Kind::Reset) {
            next = oracle_step(space, table, b, 1);
          }
        }
        break;
      }
    }
    traj.beams.push_back(next);
    b = next;
    if (halt) {
      traj.stopped_early = true;
      break;
    }
  }
  return traj;
}

}  // namespace beamlearn
