#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <queue>
#include <string>
#include <vector>

#include "beamlearn/errors.hpp"

namespace beamlearn {

using NodeId = std::int64_t;

// Rooted tree with all terminals at the same depth. Terminals are exactly the
// nodes with no neighbors; terminal_costs holds NaN for interior nodes.
struct SearchSpace {
  NodeId initial = 0;
  std::vector<std::vector<NodeId>> neighbors;
  std::vector<double> terminal_costs;
  int depth = 0;

  std::size_t size() const { return neighbors.size(); }
  NodeId initial_node() const { return initial; }
  bool is_terminal(NodeId v) const { return neighbors[static_cast<std::size_t>(v)].empty(); }
  const std::vector<NodeId>& neighbors_of(NodeId v) const {
    return neighbors[static_cast<std::size_t>(v)];
  }
  double terminal_cost(NodeId v) const { return terminal_costs[static_cast<std::size_t>(v)]; }

  void validate() const;
};

template <class S>
concept SpaceLike = requires(const S& s, NodeId v) {
  { s.initial_node() } -> std::convertible_to<NodeId>;
  { s.is_terminal(v) } -> std::convertible_to<bool>;
  { s.neighbors_of(v) };
  { s.depth } -> std::convertible_to<int>;
};

inline void SearchSpace::validate() const {
  const std::size_t n = neighbors.size();
  if (n == 0) throw StructuralError("search space has no nodes");
  if (terminal_costs.size() != n)
    throw StructuralError("terminal_costs size does not match node count");
  if (initial < 0 || static_cast<std::size_t>(initial) >= n)
    throw StructuralError("initial node out of range");
  if (depth < 1) throw StructuralError("uniform depth must be >= 1");

  std::vector<int> level(n, -1);
  std::vector<NodeId> order;
  order.reserve(n);
  level[static_cast<std::size_t>(initial)] = 0;
  order.push_back(initial);
  for (std::size_t head = 0; head < order.size(); ++head) {
    const NodeId v = order[head];
    for (NodeId c : neighbors[static_cast<std::size_t>(v)]) {
      if (c < 0 || static_cast<std::size_t>(c) >= n)
        throw StructuralError("neighbor id out of range");
      if (c == initial || level[static_cast<std::size_t>(c)] != -1)
        throw StructuralError("node has more than one parent (not a tree)");
      level[static_cast<std::size_t>(c)] = level[static_cast<std::size_t>(v)] + 1;
      order.push_back(c);
    }
  }
  if (order.size() != n) throw StructuralError("unreachable nodes present");

  for (std::size_t v = 0; v < n; ++v) {
    const bool leaf = neighbors[v].empty();
    const bool costed = !std::isnan(terminal_costs[v]);
    if (leaf) {
      if (!costed) throw StructuralError("terminal node missing a terminal cost");
      if (!std::isfinite(terminal_costs[v]))
        throw StructuralError("terminal cost must be finite");
      if (level[v] != depth)
        throw StructuralError("terminal at depth " + std::to_string(level[v]) +
                              ", expected uniform depth " + std::to_string(depth));
    } else if (costed) {
      throw StructuralError("interior node carries a terminal cost");
    }
  }
}

struct CompletionCostTable {
  std::vector<double> costs;
  double at(NodeId v) const { return costs[static_cast<std::size_t>(v)]; }
};

// c*(v): cost of the best terminal reachable from v. One bottom-up pass in
// reverse breadth-first order.
inline CompletionCostTable optimal_completion_cost(const SearchSpace& space) {
  space.validate();
  std::vector<NodeId> order;
  order.reserve(space.size());
  order.push_back(space.initial);
  for (std::size_t head = 0; head < order.size(); ++head)
    for (NodeId c : space.neighbors_of(order[head])) order.push_back(c);

  CompletionCostTable table;
  table.costs.assign(space.size(), std::numeric_limits<double>::quiet_NaN());
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    const NodeId v = *it;
    if (space.is_terminal(v)) {
      table.costs[static_cast<std::size_t>(v)] = space.terminal_cost(v);
    } else {
      double best = std::numeric_limits<double>::infinity();
      for (NodeId c : space.neighbors_of(v))
        best = std::min(best, table.costs[static_cast<std::size_t>(c)]);
      if (!std::isfinite(best))
        throw StructuralError("non-terminal node with no reachable terminal");
      table.costs[static_cast<std::size_t>(v)] = best;
    }
  }
  return table;
}

// Directed graph; cycles permitted. Terminal nodes are flagged explicitly and
// carry the cost assigned to any path that ends there (0 if not supplied).
struct RawGraph {
  std::vector<std::vector<std::int64_t>> adjacency;
  std::int64_t initial = 0;
  std::map<std::int64_t, double> terminals;

  std::size_t size() const { return adjacency.size(); }
};

// Tree whose terminals may sit at mixed depths and, unlike in SearchSpace,
// may still have children (a flagged path that keeps extending). Interior
// nodes have NaN in terminal_costs.
struct MixedDepthTree {
  NodeId initial = 0;
  std::vector<std::vector<NodeId>> children;
  std::vector<double> terminal_costs;
  std::vector<NodeId> parent;
  std::vector<std::int64_t> source;  // input-graph node this tree node maps to
  std::vector<int> node_depth;

  std::size_t size() const { return children.size(); }
  bool flagged(NodeId v) const { return !std::isnan(terminal_costs[static_cast<std::size_t>(v)]); }

  // Path of input-graph nodes from the root to v.
  std::vector<std::int64_t> path_to(NodeId v) const {
    std::vector<std::int64_t> p;
    for (NodeId u = v; u >= 0; u = parent[static_cast<std::size_t>(u)])
      p.push_back(source[static_cast<std::size_t>(u)]);
    std::reverse(p.begin(), p.end());
    return p;
  }
};

// Unrolls a graph into the tree of its bounded paths. Every distinct path
// from the initial node with at most max_path_length nodes becomes a tree
// node; a path is flagged terminal when its endpoint is a flagged input node.
// Expansion continues through flagged nodes until the bound.
inline MixedDepthTree to_path_space(const RawGraph& graph, std::int64_t max_path_length,
                                    std::size_t max_nodes = 1u << 20) {
  if (max_path_length < 1) throw PreconditionError("max_path_length must be >= 1");
  if (graph.size() == 0) throw PreconditionError("graph has no nodes");
  if (graph.initial < 0 || static_cast<std::size_t>(graph.initial) >= graph.size())
    throw PreconditionError("initial node out of range");
  for (const auto& adj : graph.adjacency)
    for (std::int64_t t : adj)
      if (t < 0 || static_cast<std::size_t>(t) >= graph.size())
        throw PreconditionError("edge target out of range");

  MixedDepthTree tree;
  auto flag_cost = [&graph](std::int64_t node) {
    auto it = graph.terminals.find(node);
    return it == graph.terminals.end() ? std::numeric_limits<double>::quiet_NaN() : it->second;
  };

  tree.children.push_back({});
  tree.terminal_costs.push_back(flag_cost(graph.initial));
  tree.parent.push_back(-1);
  tree.source.push_back(graph.initial);
  tree.node_depth.push_back(0);

  // Breadth-first with edge targets visited in ascending order, so ascending
  // NodeId agrees with lexicographic order on path id sequences.
  for (std::size_t head = 0; head < tree.size(); ++head) {
    const NodeId v = static_cast<NodeId>(head);
    const int nodes_in_path = tree.node_depth[head] + 1;
    if (nodes_in_path >= max_path_length) continue;
    auto targets = graph.adjacency[static_cast<std::size_t>(tree.source[head])];
    std::sort(targets.begin(), targets.end());
    targets.erase(std::unique(targets.begin(), targets.end()), targets.end());
    for (std::int64_t t : targets) {
      if (tree.size() >= max_nodes)
        throw StructuralError("path space exceeds node budget; lower max_path_length");
      tree.children[head].push_back(static_cast<NodeId>(tree.size()));
      tree.children.push_back({});
      tree.terminal_costs.push_back(flag_cost(t));
      tree.parent.push_back(v);
      tree.source.push_back(t);
      tree.node_depth.push_back(nodes_in_path);
    }
  }

  bool any_flagged = false;
  for (std::size_t v = 0; v < tree.size(); ++v) any_flagged |= tree.flagged(static_cast<NodeId>(v));
  if (!any_flagged)
    throw StructuralError("no terminal reachable within max_path_length");
  return tree;
}

struct PaddedSpace {
  SearchSpace space;
  // origin[v] maps each output node to the mixed-tree node it represents;
  // padding-chain nodes map to the flagged node they extend.
  std::vector<NodeId> origin;
};

// Makes terminal depth uniform: h = deepest flagged node. Branches containing
// no flagged node are pruned; a flagged node above depth h loses its flag and
// gains a linear padding chain whose leaf inherits its terminal cost.
inline PaddedSpace pad_to_depth(const MixedDepthTree& tree) {
  const std::size_t n = tree.size();
  if (n == 0) throw PreconditionError("empty tree");

  std::vector<char> keep(n, 0);
  int h = -1;
  std::vector<NodeId> post;
  post.reserve(n);
  post.push_back(tree.initial);
  for (std::size_t head = 0; head < post.size(); ++head)
    for (NodeId c : tree.children[static_cast<std::size_t>(post[head])]) post.push_back(c);
  for (auto it = post.rbegin(); it != post.rend(); ++it) {
    const auto v = static_cast<std::size_t>(*it);
    if (tree.flagged(*it)) {
      keep[v] = 1;
      h = std::max(h, tree.node_depth[v]);
    }
    for (NodeId c : tree.children[v]) keep[v] |= keep[static_cast<std::size_t>(c)];
  }
  if (h < 0) throw StructuralError("tree has no flagged terminal");

  PaddedSpace out;
  const double nan = std::numeric_limits<double>::quiet_NaN();
  struct Pending {
    NodeId src;      // mixed-tree node, or flagged origin for padding nodes
    int pad_left;    // remaining padding-chain length; 0 = real node
    double cost;     // carried terminal cost while padding
  };
  std::vector<Pending> queue;
  queue.push_back({tree.initial, 0, nan});
  for (std::size_t head = 0; head < queue.size(); ++head) {
    const Pending cur = queue[head];
    const NodeId id = static_cast<NodeId>(out.space.neighbors.size());
    out.space.neighbors.push_back({});
    out.space.terminal_costs.push_back(nan);
    out.origin.push_back(cur.src);
    if (cur.pad_left > 0) {
      if (cur.pad_left == 1) {
        out.space.terminal_costs[static_cast<std::size_t>(id)] = cur.cost;
      } else {
        queue.push_back({cur.src, cur.pad_left - 1, cur.cost});
        out.space.neighbors[static_cast<std::size_t>(id)].push_back(-1);
      }
      continue;
    }
    const auto v = static_cast<std::size_t>(cur.src);
    std::vector<NodeId> kids;
    for (NodeId c : tree.children[v])
      if (keep[static_cast<std::size_t>(c)]) kids.push_back(c);
    std::sort(kids.begin(), kids.end());
    const bool flag = tree.flagged(cur.src);
    const int dv = tree.node_depth[v];
    if (flag && dv == h) {
      // Deepest flagged node; any unflagged descendants were pruned above.
      out.space.terminal_costs[static_cast<std::size_t>(id)] =
          tree.terminal_costs[v];
      continue;
    }
    for (NodeId c : kids) {
      queue.push_back({c, 0, nan});
      out.space.neighbors[static_cast<std::size_t>(id)].push_back(-1);
    }
    if (flag) {
      queue.push_back({cur.src, h - dv, tree.terminal_costs[v]});
      out.space.neighbors[static_cast<std::size_t>(id)].push_back(-1);
    }
  }

  // Children were enqueued in order; ids are assigned in queue order, so the
  // j-th enqueued child of node i is the j-th id after all earlier nodes.
  // Rebuild edges by replaying the same traversal over assigned ids.
  std::size_t next_id = 1;
  for (std::size_t id = 0; id < out.space.neighbors.size(); ++id)
    for (auto& slot : out.space.neighbors[id]) slot = static_cast<NodeId>(next_id++);

  out.space.initial = 0;
  out.space.depth = h;
  return out;
}

}  // namespace beamlearn
