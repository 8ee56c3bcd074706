#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "beamlearn/errors.hpp"
#include "beamlearn/scoring.hpp"

namespace beamlearn {

// Per-round online updates. OGD uses step_scale / sqrt(t); Adam is the
// standard bias-corrected form. Both are deterministic.
class OnlineOptimizer {
 public:
  enum class Kind { Ogd, Adam };

  static OnlineOptimizer ogd(double step_scale) {
    if (!(step_scale > 0)) throw ConfigError("ogd step_scale must be positive");
    OnlineOptimizer o;
    o.kind_ = Kind::Ogd;
    o.step_scale_ = step_scale;
    return o;
  }

  static OnlineOptimizer adam(double step = 0.001, double beta1 = 0.9, double beta2 = 0.999,
                              double epsilon = 1e-8) {
    if (!(step > 0)) throw ConfigError("adam step must be positive");
    if (!(beta1 >= 0 && beta1 < 1) || !(beta2 >= 0 && beta2 < 1))
      throw ConfigError("adam beta parameters must be in [0, 1)");
    if (!(epsilon > 0)) throw ConfigError("adam epsilon must be positive");
    OnlineOptimizer o;
    o.kind_ = Kind::Adam;
    o.step_scale_ = step;
    o.beta1_ = beta1;
    o.beta2_ = beta2;
    o.epsilon_ = epsilon;
    return o;
  }

  Kind kind() const { return kind_; }
  long rounds() const { return t_; }

  void update(Parameters& theta, const std::vector<double>& grad) {
    if (grad.size() != theta.size())
      throw PreconditionError("gradient/parameter dimension mismatch");
    ++t_;
    if (kind_ == Kind::Ogd) {
      const double step = step_scale_ / std::sqrt(static_cast<double>(t_));
      for (std::size_t i = 0; i < theta.size(); ++i) theta[i] -= step * grad[i];
      return;
    }
    if (m_.size() != theta.size()) {
      m_.assign(theta.size(), 0.0);
      v_.assign(theta.size(), 0.0);
    }
    const double bc1 = 1 - std::pow(beta1_, static_cast<double>(t_));
    const double bc2 = 1 - std::pow(beta2_, static_cast<double>(t_));
    for (std::size_t i = 0; i < theta.size(); ++i) {
      m_[i] = beta1_ * m_[i] + (1 - beta1_) * grad[i];
      v_[i] = beta2_ * v_[i] + (1 - beta2_) * grad[i] * grad[i];
      const double mhat = m_[i] / bc1;
      const double vhat = v_[i] / bc2;
      theta[i] -= step_scale_ * mhat / (std::sqrt(vhat) + epsilon_);
    }
  }

 private:
  Kind kind_ = Kind::Ogd;
  double step_scale_ = 0.5;
  double beta1_ = 0.9, beta2_ = 0.999, epsilon_ = 1e-8;
  long t_ = 0;
  std::vector<double> m_, v_;
};

inline void optimizer_update(OnlineOptimizer& optimizer, Parameters& theta,
                             const std::vector<double>& grad) {
  optimizer.update(theta, grad);
}

}  // namespace beamlearn
