#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <limits>

#include <beamlearn/oracles.hpp>
#include <beamlearn/search_space.hpp>

using namespace beamlearn;

namespace {

const double kNan = std::numeric_limits<double>::quiet_NaN();

// depth-2 binary tree: 0 -> {1,2}, 1 -> {3,4}, 2 -> {5,6}
SearchSpace small_tree() {
  SearchSpace s;
  s.initial = 0;
  s.depth = 2;
  s.neighbors = {{1, 2}, {3, 4}, {5, 6}, {}, {}, {}, {}};
  s.terminal_costs = {kNan, kNan, kNan, 3.0, 1.0, 2.0, 5.0};
  return s;
}

}  // namespace

TEST_CASE("a well-formed space validates") {
  REQUIRE_NOTHROW(small_tree().validate());
}

TEST_CASE("validation rejects malformed spaces") {
  SECTION("edge target out of range") {
    SearchSpace s = small_tree();
    s.neighbors[2] = {5, 99};
    REQUIRE_THROWS_AS(s.validate(), StructuralError);
  }
  SECTION("two parents for one node") {
    SearchSpace s = small_tree();
    s.neighbors[2] = {5, 4};
    REQUIRE_THROWS_AS(s.validate(), StructuralError);
  }
  SECTION("unreachable node") {
    SearchSpace s = small_tree();
    s.neighbors[2] = {5};
    REQUIRE_THROWS_AS(s.validate(), StructuralError);
  }
  SECTION("leaves at mixed depths") {
    SearchSpace s;
    s.initial = 0;
    s.depth = 2;
    s.neighbors = {{1, 2}, {3}, {}, {}};
    s.terminal_costs = {kNan, kNan, 1.0, 2.0};
    REQUIRE_THROWS_AS(s.validate(), StructuralError);
  }
  SECTION("leaf without a finite cost") {
    SearchSpace s = small_tree();
    s.terminal_costs[4] = kNan;
    REQUIRE_THROWS_AS(s.validate(), StructuralError);
  }
  SECTION("interior node with a cost") {
    SearchSpace s = small_tree();
    s.terminal_costs[1] = 7.0;
    REQUIRE_THROWS_AS(s.validate(), StructuralError);
  }
  SECTION("declared depth disagrees with the tree") {
    SearchSpace s = small_tree();
    s.depth = 3;
    REQUIRE_THROWS_AS(s.validate(), StructuralError);
  }
}

TEST_CASE("completion costs propagate minima to the root") {
  const CompletionCostTable table = optimal_completion_cost(small_tree());
  REQUIRE(table.at(3) == 3.0);
  REQUIRE(table.at(4) == 1.0);
  REQUIRE(table.at(1) == 1.0);
  REQUIRE(table.at(2) == 2.0);
  REQUIRE(table.at(0) == 1.0);
}

TEST_CASE("completion costs agree with exhaustive search on random trees") {
  CounterRng rng(101);
  for (int trial = 0; trial < 60; ++trial) {
    const int depth = 1 + static_cast<int>(rng.next_below(4));
    const SearchSpace s = random_tree_space(rng, depth, 3);
    REQUIRE_NOTHROW(s.validate());
    const CompletionCostTable table = optimal_completion_cost(s);
    for (NodeId v = 0; v < static_cast<NodeId>(s.size()); ++v)
      REQUIRE(table.at(v) == Catch::Approx(brute_force_best_terminal(s, v)).margin(1e-12));
  }
}

TEST_CASE("a two-node cycle unrolls into the tree of bounded paths") {
  RawGraph g;
  g.adjacency = {{1}, {0}};
  g.initial = 0;
  g.terminals = {{0, 0.5}};

  const MixedDepthTree tree = to_path_space(g, 4);
  // paths: 0, 01, 010, 0101
  REQUIRE(tree.size() == 4);
  REQUIRE(tree.flagged(0));
  REQUIRE_FALSE(tree.flagged(1));
  REQUIRE(tree.flagged(2));
  REQUIRE_FALSE(tree.flagged(3));
  REQUIRE(tree.path_to(3) == std::vector<std::int64_t>{0, 1, 0, 1});
  REQUIRE(tree.node_depth[3] == 3);
}

TEST_CASE("duplicate edges do not duplicate paths") {
  RawGraph g;
  g.adjacency = {{1, 1, 1}, {}};
  g.initial = 0;
  g.terminals = {{1, 2.0}};
  const MixedDepthTree tree = to_path_space(g, 3);
  REQUIRE(tree.size() == 2);
}

TEST_CASE("unrolling fails when no terminal is in range") {
  RawGraph g;
  g.adjacency = {{1}, {2}, {}};
  g.initial = 0;
  g.terminals = {{2, 1.0}};
  REQUIRE_THROWS_AS(to_path_space(g, 2), StructuralError);
  REQUIRE_NOTHROW(to_path_space(g, 3));
}

TEST_CASE("unrolling respects the node budget") {
  RawGraph g;
  g.adjacency = {{0, 1}, {0, 1}};
  g.initial = 0;
  g.terminals = {{1, 0.0}};
  REQUIRE_THROWS_AS(to_path_space(g, 30, 1000), StructuralError);
}

TEST_CASE("padding makes terminal depth uniform and keeps costs") {
  RawGraph g;
  g.adjacency = {{1}, {0}};
  g.initial = 0;
  g.terminals = {{0, 0.5}};
  const PaddedSpace padded = pad_to_depth(to_path_space(g, 4));

  REQUIRE_NOTHROW(padded.space.validate());
  REQUIRE(padded.space.depth == 2);
  REQUIRE(padded.space.size() == 5);
  // Root keeps its real child and gains a padding chain for its own flag.
  REQUIRE(padded.space.neighbors_of(0) == std::vector<NodeId>{1, 2});
  REQUIRE(padded.space.neighbors_of(1) == std::vector<NodeId>{3});
  REQUIRE(padded.space.neighbors_of(2) == std::vector<NodeId>{4});
  REQUIRE(padded.space.is_terminal(3));
  REQUIRE(padded.space.is_terminal(4));
  REQUIRE(padded.space.terminal_cost(3) == 0.5);
  REQUIRE(padded.space.terminal_cost(4) == 0.5);
  REQUIRE(padded.origin == std::vector<NodeId>{0, 1, 0, 2, 0});
}

TEST_CASE("padding prunes branches with no terminal") {
  RawGraph g;
  // 0 -> 1 (flagged at depth 2 via 0->1->2), 0 -> 3 -> 4 dead end
  g.adjacency = {{1, 3}, {2}, {}, {4}, {}};
  g.initial = 0;
  g.terminals = {{2, 4.0}};
  const PaddedSpace padded = pad_to_depth(to_path_space(g, 3));
  REQUIRE_NOTHROW(padded.space.validate());
  REQUIRE(padded.space.depth == 2);
  REQUIRE(padded.space.size() == 3);
  // Surviving chain of mixed-tree nodes: root, path 0-1, path 0-1-2.
  REQUIRE(padded.origin == std::vector<NodeId>{0, 1, 3});
  REQUIRE(padded.space.terminal_cost(2) == 4.0);
}

TEST_CASE("completion costs after padding reflect the carried terminal costs") {
  RawGraph g;
  g.adjacency = {{1, 2}, {}, {3}, {}};
  g.initial = 0;
  g.terminals = {{1, 5.0}, {3, 2.0}};
  const PaddedSpace padded = pad_to_depth(to_path_space(g, 3));
  REQUIRE_NOTHROW(padded.space.validate());
  const CompletionCostTable table = optimal_completion_cost(padded.space);
  REQUIRE(table.at(padded.space.initial_node()) == 2.0);
  for (NodeId v = 0; v < static_cast<NodeId>(padded.space.size()); ++v)
    REQUIRE(table.at(v) == Catch::Approx(brute_force_best_terminal(padded.space, v)));
}
