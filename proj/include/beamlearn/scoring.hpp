#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "beamlearn/errors.hpp"
#include "beamlearn/search_space.hpp"

namespace beamlearn {

// Sparse feature vector; entries are kept sorted by index with unique keys.
struct FeatureVector {
  std::vector<std::pair<std::int32_t, double>> entries;

  void add(std::int32_t index, double value) { entries.emplace_back(index, value); }

  void canonicalize() {
    std::sort(entries.begin(), entries.end(),
              [](const auto& a, const auto& b) { return a.first < b.first; });
    std::size_t out = 0;
    for (std::size_t i = 0; i < entries.size();) {
      std::size_t j = i;
      double sum = 0;
      while (j < entries.size() && entries[j].first == entries[i].first) sum += entries[j++].second;
      entries[out++] = {entries[i].first, sum};
      i = j;
    }
    entries.resize(out);
  }

  bool empty() const { return entries.empty(); }
};

using Parameters = std::vector<double>;

inline double dot(const Parameters& theta, const FeatureVector& phi) {
  double s = 0;
  for (const auto& [i, v] : phi.entries) {
    if (i < 0 || static_cast<std::size_t>(i) >= theta.size())
      throw PreconditionError("feature index out of parameter range");
    s += theta[static_cast<std::size_t>(i)] * v;
  }
  return s;
}

using FeatureMap = std::function<FeatureVector(NodeId)>;

// s(v) = theta . phi(v), clamped to [-clip, clip]. The gradient in v is
// phi(v), or zero once the clamp is active (flat region of the clamp).
class LinearScorer {
 public:
  LinearScorer(const Parameters& theta, FeatureMap feature_map, double clip = 1e6)
      : theta_(&theta), feature_map_(std::move(feature_map)), clip_(clip) {
    if (!(clip > 0)) throw PreconditionError("score clip must be positive");
  }

  double score(NodeId v) const {
    const double raw = dot(*theta_, feature_map_(v));
    if (raw > clip_) {
      ++clip_events_;
      return clip_;
    }
    if (raw < -clip_) {
      ++clip_events_;
      return -clip_;
    }
    return raw;
  }

  FeatureVector score_gradient(NodeId v) const {
    FeatureVector phi = feature_map_(v);
    if (std::abs(dot(*theta_, phi)) > clip_) return FeatureVector{};
    return phi;
  }

  FeatureVector features(NodeId v) const { return feature_map_(v); }

  auto fn() const {
    return [this](NodeId v) { return score(v); };
  }

  long clip_events() const { return clip_events_; }
  double clip() const { return clip_; }

 private:
  const Parameters* theta_;
  FeatureMap feature_map_;
  double clip_;
  mutable long clip_events_ = 0;
};

inline nlohmann::json parameters_to_json(const Parameters& theta) {
  return nlohmann::json{{"dim", theta.size()}, {"values", theta}};
}

inline Parameters parameters_from_json(const nlohmann::json& j) {
  if (!j.contains("dim") || !j.contains("values"))
    throw ConfigError("parameter file missing dim/values");
  Parameters theta = j.at("values").get<Parameters>();
  if (theta.size() != j.at("dim").get<std::size_t>())
    throw ConfigError("parameter dimension header does not match value count");
  return theta;
}

inline void save_parameters(const Parameters& theta, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write parameter file: " + path);
  out << parameters_to_json(theta).dump() << "\n";
}

inline Parameters load_parameters(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read parameter file: " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("malformed parameter file: ") + e.what());
  }
  return parameters_from_json(j);
}

}  // namespace beamlearn
