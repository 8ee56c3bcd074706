#pragma once

#include <cmath>
#include <cstdint>
#include <fstream>
#include <memory>
#include <string>
#include <vector>

#include <json.hpp>

#include "beamlearn/errors.hpp"
#include "beamlearn/rng.hpp"
#include "beamlearn/scoring.hpp"
#include "beamlearn/search_space.hpp"

namespace beamlearn {

struct Example {
  std::vector<int> tokens;
  std::vector<int> labels;
};

// Sequence labeling generator: gold labels form a Markov chain over the
// transition table, tokens are drawn per label from the emission table, and
// each token is corrupted (resampled among the other tokens) with probability
// noise.
struct SequenceTask {
  int vocab_size = 0;
  int num_labels = 0;
  int length = 0;
  double noise = 0;
  std::vector<std::vector<double>> emission;    // [label][token] weight
  std::vector<std::vector<double>> transition;  // [prev label][label] weight

  void validate() const {
    if (vocab_size < 1 || num_labels < 1) throw ConfigError("task needs vocab and labels >= 1");
    if (length < 1) throw ConfigError("task length must be >= 1");
    if (!(noise >= 0 && noise <= 1)) throw ConfigError("noise must be in [0, 1]");
    auto check_table = [](const std::vector<std::vector<double>>& t, std::size_t rows,
                          std::size_t cols, const char* name) {
      if (t.size() != rows) throw ConfigError(std::string(name) + ": wrong row count");
      for (const auto& row : t) {
        if (row.size() != cols) throw ConfigError(std::string(name) + ": wrong column count");
        double sum = 0;
        for (double w : row) {
          if (!(w >= 0) || !std::isfinite(w))
            throw ConfigError(std::string(name) + ": weights must be finite and >= 0");
          sum += w;
        }
        if (!(sum > 0)) throw ConfigError(std::string(name) + ": row does not normalize");
      }
    };
    check_table(emission, static_cast<std::size_t>(num_labels),
                static_cast<std::size_t>(vocab_size), "emission");
    check_table(transition, static_cast<std::size_t>(num_labels),
                static_cast<std::size_t>(num_labels), "transition");
  }

  // Identity emissions over a shared alphabet with uniform transitions; with
  // noise = 0 the tokens determine the labels exactly.
  static SequenceTask identity(int num_labels, int length, double noise) {
    SequenceTask t;
    t.vocab_size = num_labels;
    t.num_labels = num_labels;
    t.length = length;
    t.noise = noise;
    t.emission.assign(num_labels, std::vector<double>(num_labels, 0.0));
    for (int y = 0; y < num_labels; ++y) t.emission[y][y] = 1.0;
    t.transition.assign(num_labels, std::vector<double>(num_labels, 1.0));
    t.validate();
    return t;
  }
};

inline int sample_categorical(const std::vector<double>& weights, CounterRng& rng) {
  double total = 0;
  for (double w : weights) total += w;
  const double u = rng.next_double() * total;
  double acc = 0;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    acc += weights[i];
    if (u < acc) return static_cast<int>(i);
  }
  return static_cast<int>(weights.size()) - 1;
}

inline std::vector<double> stationary_distribution(
    const std::vector<std::vector<double>>& transition) {
  const std::size_t n = transition.size();
  std::vector<double> pi(n, 1.0 / static_cast<double>(n));
  for (int iter = 0; iter < 500; ++iter) {
    std::vector<double> next(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      double row_sum = 0;
      for (double w : transition[i]) row_sum += w;
      for (std::size_t j = 0; j < n; ++j) next[j] += pi[i] * transition[i][j] / row_sum;
    }
    pi.swap(next);
  }
  return pi;
}

// One substream per example, keyed by (seed, index), so any prefix of the
// dataset is reproducible independently of the rest.
inline std::vector<Example> generate_dataset(const SequenceTask& task, long m,
                                             std::uint64_t seed) {
  task.validate();
  if (m < 0) throw PreconditionError("dataset size must be >= 0");
  const std::vector<double> initial = stationary_distribution(task.transition);
  std::vector<Example> out;
  out.reserve(static_cast<std::size_t>(m));
  for (long i = 0; i < m; ++i) {
    CounterRng rng(seed, static_cast<std::uint64_t>(i));
    Example ex;
    ex.tokens.resize(task.length);
    ex.labels.resize(task.length);
    int prev = -1;
    for (int j = 0; j < task.length; ++j) {
      const int y = (j == 0) ? sample_categorical(initial, rng)
                             : sample_categorical(task.transition[prev], rng);
      int x = sample_categorical(task.emission[y], rng);
      if (task.noise > 0 && task.vocab_size > 1 && rng.next_bernoulli(task.noise)) {
        const int shift = 1 + static_cast<int>(rng.next_below(
                                  static_cast<std::uint64_t>(task.vocab_size - 1)));
        x = (x + shift) % task.vocab_size;
      }
      ex.labels[j] = y;
      ex.tokens[j] = x;
      prev = y;
    }
    out.push_back(std::move(ex));
  }
  return out;
}

// Per-node structure of a label-prefix tree plus the observed tokens; what
// the hashed feature map needs to score a node.
struct SpaceMeta {
  std::vector<int> node_label;  // -1 at the root
  std::vector<NodeId> parent;   // -1 at the root
  std::vector<int> node_depth;
  std::vector<int> tokens;
  int num_labels = 0;
};

inline std::int32_t feature_index(std::uint64_t seed, std::uint64_t tag, std::uint64_t a,
                                  std::uint64_t b, std::size_t p) {
  const std::uint64_t h = mix64(mix64(mix64(seed ^ (tag * 0x9e3779b97f4a7c15ULL), a), b));
  return static_cast<std::int32_t>(h % static_cast<std::uint64_t>(p));
}

struct TaskSpace {
  SearchSpace space;
  CompletionCostTable table;
  std::shared_ptr<const SpaceMeta> meta;

  // Cumulative hashed indicators along the label prefix: (label),
  // (previous label, label) with a start-of-sequence bucket, (label, token).
  FeatureMap featurizer(std::size_t p, std::uint64_t seed) const {
    if (p < 1) throw ConfigError("feature dimension must be >= 1");
    auto data = meta;
    return [data, p, seed](NodeId v) {
      FeatureVector phi;
      NodeId u = v;
      while (u >= 0 && data->node_label[static_cast<std::size_t>(u)] >= 0) {
        const auto ui = static_cast<std::size_t>(u);
        const int y = data->node_label[ui];
        const int j = data->node_depth[ui];  // 1-based position
        const NodeId par = data->parent[ui];
        const int prev = (par >= 0 && data->node_label[static_cast<std::size_t>(par)] >= 0)
                             ? data->node_label[static_cast<std::size_t>(par)]
                             : data->num_labels;
        const int x = data->tokens[static_cast<std::size_t>(j - 1)];
        phi.add(feature_index(seed, 1, static_cast<std::uint64_t>(y), 0, p), 1.0);
        phi.add(feature_index(seed, 2, static_cast<std::uint64_t>(prev),
                              static_cast<std::uint64_t>(y), p),
                1.0);
        phi.add(feature_index(seed, 3, static_cast<std::uint64_t>(y),
                              static_cast<std::uint64_t>(x), p),
                1.0);
        u = par;
      }
      phi.canonicalize();
      return phi;
    };
  }
};

// Label-prefix tree for one example with Hamming completion costs. c* of a
// prefix is its mismatch count against the gold labels, filled analytically
// during construction.
inline TaskSpace hamming_space(const Example& example, int num_labels) {
  if (num_labels < 1) throw PreconditionError("num_labels must be >= 1");
  const int length = static_cast<int>(example.labels.size());
  if (length < 1) throw PreconditionError("example must have length >= 1");
  if (example.tokens.size() != example.labels.size())
    throw PreconditionError("tokens/labels length mismatch");
  for (int y : example.labels)
    if (y < 0 || y >= num_labels) throw PreconditionError("gold label out of range");

  TaskSpace ts;
  auto meta = std::make_shared<SpaceMeta>();
  meta->tokens = example.tokens;
  meta->num_labels = num_labels;

  const double nan = std::numeric_limits<double>::quiet_NaN();
  auto add_node = [&](int label, NodeId parent, int depth, double mism) {
    ts.space.neighbors.push_back({});
    ts.space.terminal_costs.push_back(depth == length ? mism : nan);
    ts.table.costs.push_back(mism);
    meta->node_label.push_back(label);
    meta->parent.push_back(parent);
    meta->node_depth.push_back(depth);
    return static_cast<NodeId>(ts.space.neighbors.size() - 1);
  };

  add_node(-1, -1, 0, 0.0);
  for (std::size_t head = 0; head < ts.space.neighbors.size(); ++head) {
    const int depth = meta->node_depth[head];
    if (depth == length) continue;
    const double mism = ts.table.costs[head];
    for (int y = 0; y < num_labels; ++y) {
      const NodeId child =
          add_node(y, static_cast<NodeId>(head), depth + 1,
                   mism + (y == example.labels[static_cast<std::size_t>(depth)] ? 0.0 : 1.0));
      ts.space.neighbors[head].push_back(child);
    }
  }
  ts.space.initial = 0;
  ts.space.depth = length;
  ts.meta = std::move(meta);
  return ts;
}

using SpaceFactory = std::function<TaskSpace(const Example&)>;

inline SpaceFactory hamming_factory(int num_labels) {
  return [num_labels](const Example& ex) { return hamming_space(ex, num_labels); };
}

// Two families of examples that share an uninformative first token (2) and
// are disambiguated only from the second position on: family f has gold
// labels all f and tokens (2, f, f, ...). Any scorer ranks the first-layer
// candidates identically for both families, so width-1 decoding must err on
// one of them while a width >= 2 beam can hold both prefixes until the
// second token resolves the ambiguity.
struct GardenPathTask {
  int length = 3;

  static constexpr int num_labels = 3;
  static constexpr int vocab_size = 3;

  std::vector<Example> generate(long m, std::uint64_t seed) const {
    if (length < 2) throw ConfigError("garden path task needs length >= 2");
    std::vector<Example> out;
    out.reserve(static_cast<std::size_t>(m));
    for (long i = 0; i < m; ++i) {
      CounterRng rng(seed, static_cast<std::uint64_t>(i));
      const int f = static_cast<int>(rng.next_below(2));
      Example ex;
      ex.tokens.assign(static_cast<std::size_t>(length), f);
      ex.labels.assign(static_cast<std::size_t>(length), f);
      ex.tokens[0] = 2;
      out.push_back(std::move(ex));
    }
    return out;
  }
};

inline std::vector<Example> read_jsonl(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read dataset: " + path);
  std::vector<Example> out;
  std::string line;
  long line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
      Example ex;
      ex.tokens = j.at("tokens").get<std::vector<int>>();
      ex.labels = j.at("labels").get<std::vector<int>>();
      if (ex.tokens.size() != ex.labels.size())
        throw ConfigError("tokens/labels length mismatch");
      out.push_back(std::move(ex));
    } catch (const nlohmann::json::exception& e) {
      throw ConfigError("bad dataset record at line " + std::to_string(line_no) + ": " +
                        e.what());
    }
  }
  return out;
}

inline void write_jsonl(const std::vector<Example>& examples, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write dataset: " + path);
  for (const auto& ex : examples) {
    nlohmann::json j{{"tokens", ex.tokens}, {"labels", ex.labels}};
    out << j.dump() << "\n";
  }
}

}  // namespace beamlearn
