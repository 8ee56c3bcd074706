#include <catch2/catch_amalgamated.hpp>

#include <sstream>

#include <beamlearn/oracles.hpp>

using namespace beamlearn;

TEST_CASE("insertion ranking orders by score then index") {
  REQUIRE(insertion_rank_by_score({3.0, 1.0, 2.0}) ==
          std::vector<std::size_t>{0, 2, 1});
  REQUIRE(insertion_rank_by_score({1.0, 1.0, 1.0}) ==
          std::vector<std::size_t>{0, 1, 2});
  REQUIRE(insertion_rank_by_score({0.0, 5.0, 5.0, -1.0}) ==
          std::vector<std::size_t>{1, 2, 0, 3});
  REQUIRE(insertion_rank_by_score({}).empty());
}

TEST_CASE("realized transition cost reads the kept-versus-available gap") {
  REQUIRE(realized_transition_cost({0.0, 1.0, 2.0}, {0.0, 5.0, 4.0}, 2) == 1.0);
  REQUIRE(realized_transition_cost({0.0, 1.0, 2.0}, {9.0, 5.0, 4.0}, 2) == 0.0);
  REQUIRE(realized_transition_cost({3.0, 0.0}, {1.0, 0.0}, 1) == 3.0);
  SECTION("score ties keep the lower index") {
    REQUIRE(realized_transition_cost({0.0, 1.0}, {2.0, 2.0}, 1) == 0.0);
    REQUIRE(realized_transition_cost({1.0, 0.0}, {2.0, 2.0}, 1) == 1.0);
  }
  SECTION("width at or above n always keeps the best") {
    REQUIRE(realized_transition_cost({4.0, 2.0, 7.0}, {0.0, -1.0, -2.0}, 3) == 0.0);
    REQUIRE(realized_transition_cost({4.0, 2.0, 7.0}, {0.0, -1.0, -2.0}, 9) == 0.0);
  }
  REQUIRE_THROWS_AS(realized_transition_cost({}, {}, 1), PreconditionError);
  REQUIRE_THROWS_AS(realized_transition_cost({1.0}, {1.0, 2.0}, 1), PreconditionError);
}

TEST_CASE("recursive best-terminal search refuses oversized spaces") {
  CounterRng rng(5, 0);
  SearchSpace s = random_tree_space(rng, 3, 3);
  const CompletionCostTable table = optimal_completion_cost(s);
  for (NodeId v = 0; v < static_cast<NodeId>(s.size()); ++v)
    REQUIRE(brute_force_best_terminal(s, v) == Catch::Approx(table.at(v)));

  SearchSpace big;
  big.initial = 0;
  big.depth = 1;
  big.neighbors.assign(100001, {});
  big.terminal_costs.assign(100001, 0.0);
  REQUIRE_THROWS_AS(brute_force_best_terminal(big, 0), PreconditionError);
}

TEST_CASE("random tree spaces validate and have the requested shape") {
  CounterRng rng(11, 0);
  for (int trial = 0; trial < 20; ++trial) {
    const int depth = 1 + static_cast<int>(rng.next_below(4));
    const int branch = 1 + static_cast<int>(rng.next_below(3));
    SearchSpace s = random_tree_space(rng, depth, branch, 1.0, 2.0);
    REQUIRE_NOTHROW(s.validate());
    REQUIRE(s.depth == depth);
    for (NodeId v = 0; v < static_cast<NodeId>(s.size()); ++v) {
      if (s.is_terminal(v)) {
        REQUIRE(s.terminal_cost(v) >= 1.0);
        REQUIRE(s.terminal_cost(v) <= 2.0);
      } else {
        REQUIRE(s.neighbors_of(v).size() >= 1);
        REQUIRE(s.neighbors_of(v).size() <= static_cast<std::size_t>(branch));
      }
    }
  }
}

TEST_CASE("reference decode rejects a zero beam width") {
  CounterRng rng(3, 0);
  SearchSpace s = random_tree_space(rng, 2, 2);
  REQUIRE_THROWS_AS(brute_force_policy_cost(s, [](NodeId) { return 0.0; }, 0),
                    PreconditionError);
}

TEST_CASE("gated surrogates vanish at the endpoints and spike between them") {
  const WitnessResult w1 = witness_conditional_perceptron();
  REQUIRE(w1.at_a == 0.0);
  REQUIRE(w1.at_b == 0.0);
  REQUIRE(w1.at_mid == 4.0);
  REQUIRE(w1.violates_convexity);

  const WitnessResult w2 = witness_last_slot_hinge();
  REQUIRE(w2.at_a == 0.0);
  REQUIRE(w2.at_b == 0.0);
  REQUIRE(w2.at_mid == 0.5);
  REQUIRE(w2.violates_convexity);
}

TEST_CASE("self-check suite passes with the real bound and fails a broken one") {
  std::ostringstream quiet;
  REQUIRE(check_report(quiet));
  REQUIRE(quiet.str().find("[FAIL]") == std::string::npos);

  // A bound variant without the rank shift misses pruning mistakes whose
  // score gap is zero; the domination check must flag it.
  const LossFn no_shift = [](const NeighborScoring& in) {
    LossResult out;
    const auto order = [&] {
      std::vector<std::size_t> o;
      for (std::size_t i = 0; i < in.scores.size(); ++i) {
        std::size_t pos = 0;
        while (pos < o.size() && in.scores[o[pos]] >= in.scores[i]) ++pos;
        o.insert(o.begin() + static_cast<std::ptrdiff_t>(pos), i);
      }
      return o;
    }();
    const std::size_t n = in.costs.size();
    const std::size_t kp = std::min<std::size_t>(static_cast<std::size_t>(in.k), n);
    if (kp >= n) return out;
    double kept_best = in.costs[order[0]];
    for (std::size_t r = 1; r < kp; ++r) kept_best = std::min(kept_best, in.costs[order[r]]);
    double top_score = in.scores[order[0]];
    for (std::size_t r = kp; r < n; ++r) {
      const double gap = top_score - in.scores[order[r]];  // no +1 slack
      const double drop = kept_best - in.costs[order[r]];
      out.value = std::max(out.value, std::max(0.0, drop) * std::max(0.0, gap));
    }
    return out;
  };
  std::ostringstream noisy;
  REQUIRE_FALSE(check_report(noisy, no_shift));
  REQUIRE(noisy.str().find("[FAIL] pruning bound dominates") != std::string::npos);
  REQUIRE(noisy.str().find("[ok]   beam decode matches") != std::string::npos);
}
